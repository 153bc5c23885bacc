#pragma once

#include <cstddef>
#include <vector>

namespace memshield {

double mean(const std::vector<double>& v);

/// Unbiased (divisor n - 1) standard deviation; 0 for fewer than two values.
double sample_stddev(const std::vector<double>& v);

/// Linear-interpolation quantile (R type 7). Throws EmptyInput on empty input.
double quantile(std::vector<double> v, double q);

double median(std::vector<double> v);

}  // namespace memshield
