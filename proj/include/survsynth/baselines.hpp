#pragma once

#include "survsynth/dataset.hpp"

#include <vector>

namespace survsynth {

// n rows drawn uniformly with replacement.
Dataset random_oversample(const Dataset& ds, std::size_t n, std::uint64_t seed);

// Per synthetic row: the source rows and interpolation weight it came from.
struct SmoteProvenance {
    std::vector<std::size_t> base;
    std::vector<std::size_t> neighbour;
    std::vector<double> weight;
};

inline constexpr std::size_t kDefaultSmoteNeighbours = 5;

// Neighbours are found by Euclidean distance over the numeric columns
// (duration included) after min-max scaling within ds. Numeric columns are
// interpolated; binary columns and the event flag are copied from the base.
Dataset smote(const Dataset& ds, std::size_t n, std::size_t k, std::uint64_t seed,
              SmoteProvenance* provenance = nullptr);

}  // namespace survsynth
