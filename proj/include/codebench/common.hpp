#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace codebench {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Rng = std::mt19937_64;

// Error hierarchy. Every failure mode named by a module contract maps to one of these.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ValidationError : Error {
    using Error::Error;
};
struct ParameterError : Error {
    using Error::Error;
};
struct LookupError : Error {
    using Error::Error;
};
struct ParseError : Error {
    using Error::Error;
};
struct InfeasibleError : Error {
    using Error::Error;
};
struct UnmappableError : Error {
    using Error::Error;
};
struct CapacityError : Error {
    using Error::Error;
};
struct EvaluationError : Error {
    using Error::Error;
};

// splitmix64 finalizer; used to derive independent child seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return mix_seed(seed ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

inline double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline std::vector<double> to_std(const Vec& v) {
    return {v.data(), v.data() + v.size()};
}

inline Vec to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace codebench
