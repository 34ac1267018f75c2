#pragma once

#include "adi/diffusion.hpp"
#include "adi/masks.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace adi {

// Per-layer gradients of the denoising loss for the three triple members, all
// computed with the anchor's prompt and (by default) one shared (t, eps).
struct GradientTriple {
    std::map<std::string, Array> anchor;  // g^(a,c)   keyed by identifier name
    std::map<std::string, Array> ctx;     // g^(a,c~)
    std::map<std::string, Array> act;     // g^(a~,c)
    // prompt tokens used by each evaluation; identical by the anchor-prompt contract
    std::vector<int64_t> anchor_tokens, ctx_tokens, act_tokens;
};

struct InversionConfig {
    int steps = 3000;
    double lr = 2e-4;
    double weight_decay = 1e-2;
    bool decay_masked_channels = true;
    bool share_t_eps = true;   // one (t, eps) for all three evaluations of a step
    bool tie_layers = false;   // single-token variant: one identifier for every layer
    double init_noise = 1e-3;
    uint64_t seed = 11;
    double max_skip_fraction = 0.01;  // more skipped steps than this fails the run
};

// Fresh identifier set: each v_l starts at the neutral slot token's embedding
// plus small Gaussian noise. Names are adi.v.{layer}.
ParamSet init_identifiers(const Models& m, const InversionConfig& cfg);

// Builds the working parameter set for inversion: frozen model parameters
// plus the trainable identifiers.
ParamSet inversion_params(const Models& m, const ParamSet& idents);

GradientTriple grads_for_triple(const Models& m, ParamSet& work_params, const SampleTriple& triple,
                                int timestep, const Array& eps, bool tie_layers);

struct MaskRecord {
    int step = 0;
    int layer = 0;
    ChannelMask ctx;     // empty for baseline strategies
    ChannelMask act;     // empty for baseline strategies
    ChannelMask merged;  // the mask actually applied
};

struct InversionResult {
    ParamSet identifiers;  // adi.v.0 .. adi.v.{L-1}
    std::vector<MaskRecord> history;
    std::vector<double> loss_curve;  // anchor loss per logged step
    std::vector<int> loss_steps;
    int skipped_steps = 0;
    bool failed = false;
    double overlap_rate = 0.0;  // NaN when no raw mask pairs exist
};

InversionResult invert(const Models& frozen, const std::vector<CorpusItem>& exemplars, const DataConfig& dcfg,
                       const MaskingConfig& mcfg, const InversionConfig& icfg);

// Mean over steps and layers of |preserved(ctx) & preserved(act)| / d.
double overlap_rate(const std::vector<MaskRecord>& history);

// Text mask-history records: "step,layer,provenance,bitstring" per line.
void save_mask_history(const std::filesystem::path& path, const std::vector<MaskRecord>& history);
std::vector<MaskRecord> load_mask_history(const std::filesystem::path& path);

}  // namespace adi
