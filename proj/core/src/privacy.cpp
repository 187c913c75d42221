#include "repufed/privacy.hpp"

#include <cmath>

#include "repufed/rng.hpp"

namespace repufed {

void validate_dp_config(const DpConfig& cfg) {
    if (cfg.epsilon <= 0.0)
        throw ValidationError("dp: epsilon must be positive");
    if (cfg.sensitivity_s <= 0.0)
        throw ValidationError("dp: sensitivity must be positive");
}

double l1_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += std::fabs(x);
    return s;
}

std::vector<double> clip_l1(const std::vector<double>& params, double s) {
    if (s <= 0.0) throw ValidationError("clip_l1: bound must be positive");
    double norm = l1_norm(params);
    if (norm <= s) return params;
    std::vector<double> out = params;
    double scale = s / norm;
    for (double& x : out) x *= scale;
    return out;
}

double inverse_cdf_laplace(double u, double b) {
    if (u <= 0.0 || u >= 1.0)
        throw ValidationError("inverse_cdf_laplace: u must be in (0,1)");
    double c = u - 0.5;
    double sgn = (c > 0.0) - (c < 0.0);
    return -b * sgn * std::log(1.0 - 2.0 * std::fabs(c));
}

std::vector<double> laplace_perturb(const std::vector<double>& params,
                                    const DpConfig& cfg) {
    validate_dp_config(cfg);
    if (l1_norm(params) > cfg.sensitivity_s + 1e-9)
        throw ValidationError("laplace_perturb: input not clipped to s");
    const double b = cfg.sensitivity_s / cfg.epsilon;
    Rng rng(cfg.seed);
    std::vector<double> out = params;
    for (double& x : out) x += inverse_cdf_laplace(rng.uniform01(), b);
    return out;
}

}  // namespace repufed
