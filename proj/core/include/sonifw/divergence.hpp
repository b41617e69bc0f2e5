#pragma once

#include <span>

namespace sonifw {

// Kullback-Leibler divergence KL(p || q) in bits. Both inputs must be strictly
// positive distributions of equal length.
double kl_divergence(std::span<const double> p, std::span<const double> q);

// Jensen-Shannon divergence with base-2 logarithms: symmetric, in [0, 1], and
// zero exactly for identical inputs.
double jensen_shannon(std::span<const double> p, std::span<const double> q);

// Sum of |p_i - q_i| / 2.
double total_variation(std::span<const double> p, std::span<const double> q);

}  // namespace sonifw
