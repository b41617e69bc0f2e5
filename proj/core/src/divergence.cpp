#include "sonifw/divergence.hpp"

#include <algorithm>
#include <cmath>

#include "sonifw/errors.hpp"

namespace sonifw {

namespace {
void require_same_size(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size() || p.empty()) {
        throw ContractViolation("divergence inputs must be non-empty and of equal length");
    }
}
}  // namespace

double kl_divergence(std::span<const double> p, std::span<const double> q) {
    require_same_size(p, q);
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] > 0.0) d += p[i] * std::log2(p[i] / q[i]);
    }
    return std::max(d, 0.0);
}

double jensen_shannon(std::span<const double> p, std::span<const double> q) {
    require_same_size(p, q);
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double m = 0.5 * (p[i] + q[i]);
        // Summed as a pair so that swapping p and q gives the same bits.
        const double a = p[i] > 0.0 ? p[i] * std::log2(p[i] / m) : 0.0;
        const double b = q[i] > 0.0 ? q[i] * std::log2(q[i] / m) : 0.0;
        d += a + b;
    }
    return std::clamp(0.5 * d, 0.0, 1.0);
}

double total_variation(std::span<const double> p, std::span<const double> q) {
    require_same_size(p, q);
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) d += std::abs(p[i] - q[i]);
    return 0.5 * d;
}

}  // namespace sonifw
