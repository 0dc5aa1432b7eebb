#pragma once

#include <span>
#include <vector>

namespace thermotob {

// Linear interpolation between closest ranks: position p * (n - 1) in the
// sorted sample. `sorted` must be ascending and non-empty.
double quantile_sorted(std::span<const double> sorted, double p);

// Sorts a copy; the median of an even-length sample is the mean of the two
// central values.
double quantile(std::vector<double> values, double p);
double median(std::vector<double> values);

}  // namespace thermotob
