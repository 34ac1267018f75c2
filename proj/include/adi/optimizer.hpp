#pragma once

#include "adi/params.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace adi {

struct AdamWConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

// AdamW with decoupled weight decay. Moments are kept per parameter name and
// updated with whatever gradient the caller supplies (masked or not).
class AdamW {
public:
    explicit AdamW(AdamWConfig cfg) : cfg_(cfg) {}

    // decay_keep: optional per-parameter channel mask; where provided and the
    // bit is 0, weight decay is skipped for that channel (the
    // decay_masked_channels=false policy). Moment updates are unaffected.
    void step(ParamSet& params, const std::map<std::string, Array>& grads,
              const std::map<std::string, std::vector<uint8_t>>* decay_keep = nullptr);

    void reset() {
        m_.clear();
        v_.clear();
        t_ = 0;
    }

    void set_lr(double lr) { cfg_.lr = lr; }
    const AdamWConfig& config() const { return cfg_; }

private:
    AdamWConfig cfg_;
    std::map<std::string, Array> m_, v_;
    int64_t t_ = 0;
};

}  // namespace adi
