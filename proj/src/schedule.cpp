#include "adi/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace adi {

NoiseSchedule NoiseSchedule::linear(int T, double beta_start, double beta_end) {
    if (T < 1) throw std::invalid_argument("NoiseSchedule: T must be positive");
    if (!(beta_start > 0.0 && beta_end < 1.0 && beta_start < beta_end))
        throw std::invalid_argument("NoiseSchedule: need 0 < beta_start < beta_end < 1");
    NoiseSchedule s;
    s.T = T;
    s.betas.resize(static_cast<size_t>(T));
    s.alphas.resize(static_cast<size_t>(T));
    s.alpha_bars.resize(static_cast<size_t>(T));
    double prod = 1.0;
    for (int t = 0; t < T; ++t) {
        double b = T == 1 ? beta_start
                          : beta_start + (beta_end - beta_start) * static_cast<double>(t) / static_cast<double>(T - 1);
        s.betas[static_cast<size_t>(t)] = b;
        s.alphas[static_cast<size_t>(t)] = 1.0 - b;
        prod *= 1.0 - b;
        s.alpha_bars[static_cast<size_t>(t)] = prod;
    }
    return s;
}

double NoiseSchedule::alpha_bar(int t) const {
    if (t == 0) return 1.0;
    if (t < 1 || t > T) throw std::out_of_range("alpha_bar: t=" + std::to_string(t) + " outside [0," + std::to_string(T) + "]");
    return alpha_bars[static_cast<size_t>(t - 1)];
}

double NoiseSchedule::beta(int t) const {
    if (t < 1 || t > T) throw std::out_of_range("beta: t=" + std::to_string(t) + " outside [1," + std::to_string(T) + "]");
    return betas[static_cast<size_t>(t - 1)];
}

Array q_sample(const NoiseSchedule& sched, const Array& z0, int t, const Array& eps) {
    if (t < 1 || t > sched.T)
        throw std::out_of_range("q_sample: t=" + std::to_string(t) + " outside [1," + std::to_string(sched.T) + "]");
    if (!z0.same_shape(eps))
        throw std::invalid_argument("q_sample: z0 " + shape_str(z0.shape) + " and eps " + shape_str(eps.shape) +
                                    " differ");
    const double ab = sched.alpha_bar(t);
    const double c0 = std::sqrt(ab), c1 = std::sqrt(1.0 - ab);
    Array out(z0.shape);
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = c0 * z0.data[i] + c1 * eps.data[i];
    return out;
}

}  // namespace adi
