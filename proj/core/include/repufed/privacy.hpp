#pragma once

#include <cstdint>
#include <vector>

#include "repufed/common.hpp"

namespace repufed {

struct DpConfig {
    double epsilon = 0.3;      // privacy budget, > 0
    double sensitivity_s = 1.0;  // L1 clip bound, > 0
    std::uint64_t seed = 0;
};

void validate_dp_config(const DpConfig& cfg);

double l1_norm(const std::vector<double>& v);

// Scale the vector to L1 norm <= s (no-op when already within bound).
std::vector<double> clip_l1(const std::vector<double>& params, double s);

// Inverse CDF of Laplace(0, b): -b * sgn(u - 0.5) * ln(1 - 2|u - 0.5|).
double inverse_cdf_laplace(double u, double b);

// Per-coordinate Laplace(0, s/epsilon) noise; input must already be
// clipped to the sensitivity bound.
std::vector<double> laplace_perturb(const std::vector<double>& params,
                                    const DpConfig& cfg);

}  // namespace repufed
