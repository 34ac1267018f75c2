#include "adi/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace adi {

void AdamW::step(ParamSet& params, const std::map<std::string, Array>& grads,
                 const std::map<std::string, std::vector<uint8_t>>* decay_keep) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (const auto& [name, g] : grads) {
        Array& w = params.at(name);
        if (!w.same_shape(g))
            throw std::invalid_argument("AdamW: gradient shape " + shape_str(g.shape) + " does not match parameter " +
                                        name + " " + shape_str(w.shape));
        Array& m = m_.try_emplace(name, Array(w.shape)).first->second;
        Array& v = v_.try_emplace(name, Array(w.shape)).first->second;
        const std::vector<uint8_t>* keep = nullptr;
        if (decay_keep) {
            auto it = decay_keep->find(name);
            if (it != decay_keep->end()) keep = &it->second;
        }
        for (size_t i = 0; i < w.data.size(); ++i) {
            m.data[i] = cfg_.beta1 * m.data[i] + (1.0 - cfg_.beta1) * g.data[i];
            v.data[i] = cfg_.beta2 * v.data[i] + (1.0 - cfg_.beta2) * g.data[i] * g.data[i];
            const double mhat = m.data[i] / bc1;
            const double vhat = v.data[i] / bc2;
            double upd = mhat / (std::sqrt(vhat) + cfg_.eps);
            if (cfg_.weight_decay != 0.0 && (!keep || (*keep)[i] != 0)) upd += cfg_.weight_decay * w.data[i];
            w.data[i] -= cfg_.lr * upd;
        }
    }
}

}  // namespace adi
