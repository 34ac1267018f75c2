#pragma once

#include "adi/array.hpp"

#include <vector>

namespace adi {

// Forward-process noise schedule. alpha_bar(0) == 1 by definition.
struct NoiseSchedule {
    int T = 0;
    std::vector<double> betas;       // betas[t-1] for t in [1, T]
    std::vector<double> alphas;      // 1 - beta
    std::vector<double> alpha_bars;  // cumulative products, alpha_bars[t-1]

    // Default range is the conventional 1000-step schedule rescaled to T=100
    // so that alpha_bar(T) ~ 3e-5; the sampler's N(0,1) start then matches the
    // end of the forward process.
    static NoiseSchedule linear(int T = 100, double beta_start = 1e-3, double beta_end = 0.2);

    double alpha_bar(int t) const;  // t in [0, T]
    double beta(int t) const;       // t in [1, T]
};

// z_t = sqrt(alpha_bar_t) * z0 + sqrt(1 - alpha_bar_t) * eps
Array q_sample(const NoiseSchedule& sched, const Array& z0, int t, const Array& eps);

}  // namespace adi
