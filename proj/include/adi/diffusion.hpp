#pragma once

#include "adi/corpus.hpp"
#include "adi/denoiser.hpp"
#include "adi/optimizer.hpp"
#include "adi/schedule.hpp"
#include "adi/text_encoder.hpp"

#include <array>
#include <string>
#include <vector>

namespace adi {

// Frozen generator bundle: denoiser + text encoder + schedule in one ParamSet.
struct Models {
    DenoiserConfig dn_cfg;
    TextEncoderConfig te_cfg;
    NoiseSchedule sched;
    ParamSet params;
};

Models init_models(uint64_t seed, DenoiserConfig dn_cfg = DenoiserConfig{},
                   TextEncoderConfig te_cfg = TextEncoderConfig{}, int T = 100);

// One conditioning input per cross-attention layer. During pretraining all
// layers share one action-filled token sequence; during inversion each layer
// carries the anchor template plus its own identifier parameter.
struct LayerPrompt {
    std::vector<int64_t> tokens;
    int slot_pos = -1;
    std::string ident_param;  // empty: plain tokens
};

// ||eps - eps_theta(z_t, t, y)||^2 recorded on the tape. `prompts` holds
// either kCondLayers entries or a single shared entry. z0_chw is a [0,1]
// image; the diffusion state space is [-1,1] (ddim_sample decodes back).
Var denoise_loss(Tape& t, const Models& m, const Array& z0_chw, const std::vector<LayerPrompt>& prompts,
                 int timestep, const Array& eps_chw);

struct PretrainConfig {
    int steps = 5000;
    int batch = 32;
    double lr = 2e-3;
    double lr_final = 2e-4;  // cosine decay target
    double weight_decay = 1e-4;
    double cond_dropout = 0.1;
    // Fraction of training timesteps drawn from the high-noise band
    // [t_band_lo, t_band_hi] where layout must come from the prompt; the rest
    // are uniform over [1, T].
    double t_band_fraction = 0.5;
    int t_band_lo = 40;
    int t_band_hi = 85;
    uint64_t seed = 7;
    int log_every = 100;
};

struct PretrainResult {
    std::vector<double> loss_curve;  // mean batch loss per logged step
    std::vector<int> loss_steps;
};

// Trains denoiser + text encoder on the corpus. The probe gate is applied by
// the caller before the checkpoint is accepted.
PretrainResult pretrain(Models& m, const std::vector<CorpusItem>& corpus, const PretrainConfig& cfg);

// ---------------- sampling ----------------

// Tape-free forward pass returning the predicted noise for one state.
Array denoiser_predict(const Models& m, const Array& zt_pm, int timestep,
                       const std::array<Array, kCondLayers>& y_layers);

// Encodes per-layer conditioning to plain arrays (for the sampler).
// `idents`, when non-null, supplies adi.v.{l} rows substituted at slot_pos.
std::array<Array, kCondLayers> encode_cond(const Models& m, const Prompt& prompt, const ParamSet* idents);
std::array<Array, kCondLayers> encode_cond_action(const Models& m, const Prompt& prompt, int action_id);
Array encode_null_cond(const Models& m);

struct SampleConfig {
    int steps = 50;
    double guidance_scale = 7.5;
};

// Deterministic DDIM (eta = 0) with classifier-free guidance. Returns a
// {3,32,32} image clamped to [0,1] at the final decode only.
Array ddim_sample(const Models& m, const std::array<Array, kCondLayers>& y_cond, const Array& y_null,
                  const SampleConfig& cfg, uint64_t seed);

}  // namespace adi
