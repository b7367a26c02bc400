#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace survsynth {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Rng = std::mt19937_64;

// Base class for every recoverable failure raised by the library. Callers that
// only need a diagnostic can catch this; modules derive narrower types where a
// caller is expected to react (skip a fold, retry with another seed, ...).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public Error {
public:
    using Error::Error;
};

// splitmix64 finaliser; used to turn (seed, stream name, index) into
// independent generator seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// All randomness flows from one user seed through named substreams so that
// adding a consumer in one module never shifts the draws of another.
constexpr std::uint64_t substream(std::uint64_t seed, std::string_view name,
                                  std::uint64_t index = 0) noexcept {
    return mix64(mix64(seed ^ fnv1a(name)) + mix64(index + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t seed, std::string_view name, std::uint64_t index = 0) {
    return Rng(substream(seed, name, index));
}

// Shortest round-trip text for a double (std::to_chars).
std::string format_double(double v);

std::string hex64(std::uint64_t v);

}  // namespace survsynth
