#pragma once

#include "adi/scene.hpp"
#include "adi/tape.hpp"

#include <array>

namespace adi {

constexpr int kCondLayers = 4;  // cross-attention sites, one identifier each

struct DenoiserConfig {
    int64_t c0 = 12;   // channels at 32x32
    int64_t c1 = 24;   // channels at 16x16
    int64_t c2 = 48;   // channels at 8x8
    int64_t cond_dim = 64;
    int64_t time_dim = 32;
};

// Adds dn.* parameters: a small U-Net with four single-head cross-attention
// sites (two at 16x16, two at 8x8), sinusoidal timestep conditioning added to
// features, 3x3 convolutions for spatial mixing and 1x1 projections on the
// upsample path.
void init_denoiser(ParamSet& params, const DenoiserConfig& cfg, Rng& rng);

// Sinusoidal embedding of a timestep, shape {1, time_dim}.
Array timestep_embedding(int t, int64_t time_dim);

// zt_pm: noisy image in position-major layout {1024, 3}; y_layers: one encoded
// prompt per cross-attention site. Returns predicted noise {1024, 3}.
Var denoiser_forward(Tape& t, const DenoiserConfig& cfg, Var zt_pm, int timestep,
                     const std::array<Var, kCondLayers>& y_layers);

// Layout adapters between the {3,32,32} image format and the position-major
// {1024,3} feature format.
Array chw_to_pm(const Array& img);
Array pm_to_chw(const Array& pm);

}  // namespace adi
