#include "adi/denoiser.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace adi {

namespace {

void add_conv(ParamSet& p, const std::string& pfx, int64_t cout, int64_t cin, int64_t k, Rng& rng) {
    const double s = 1.0 / std::sqrt(static_cast<double>(k * k * cin));
    p.add_randn(pfx + ".w", {cout, k * k * cin}, s, rng);
    p.add(pfx + ".b", Array::zeros({1, cout}));
}

void add_proj(ParamSet& p, const std::string& pfx, int64_t in, int64_t out, Rng& rng) {
    const double s = 1.0 / std::sqrt(static_cast<double>(in));
    p.add_randn(pfx + ".w", {in, out}, s, rng);
    p.add(pfx + ".b", Array::zeros({1, out}));
}

void add_xattn(ParamSet& p, const std::string& pfx, int64_t c, int64_t cond, Rng& rng) {
    const double sc = 1.0 / std::sqrt(static_cast<double>(c));
    const double sy = 1.0 / std::sqrt(static_cast<double>(cond));
    p.add_randn(pfx + ".wq", {c, c}, sc, rng);
    p.add_randn(pfx + ".wk", {cond, c}, sy, rng);
    p.add_randn(pfx + ".wv", {cond, c}, sy, rng);
    // soft start: the residual path dominates until the site proves useful
    p.add_randn(pfx + ".wo", {c, c}, 0.1 * sc, rng);
}

Var conv(Tape& t, Var x, const std::string& pfx, int64_t H, int64_t W, int64_t k, int64_t stride) {
    return t.add(t.conv2d(x, t.param(pfx + ".w"), H, W, k, stride, k / 2), t.param(pfx + ".b"));
}

Var xattn(Tape& t, Var x, Var y, const std::string& pfx) {
    Var q = t.matmul(x, t.param(pfx + ".wq"));
    Var k = t.matmul(y, t.param(pfx + ".wk"));
    Var v = t.matmul(y, t.param(pfx + ".wv"));
    return t.matmul(sdpa(t, q, k, v), t.param(pfx + ".wo"));
}

}  // namespace

void init_denoiser(ParamSet& p, const DenoiserConfig& cfg, Rng& rng) {
    add_proj(p, "dn.temb.l1", cfg.time_dim, 64, rng);
    add_proj(p, "dn.temb.l2", 64, 64, rng);
    add_proj(p, "dn.temb.p0", 64, cfg.c0, rng);
    add_proj(p, "dn.temb.p1", 64, cfg.c1, rng);
    add_proj(p, "dn.temb.p2", 64, cfg.c2, rng);
    add_proj(p, "dn.temb.p3", 64, cfg.c1, rng);
    add_proj(p, "dn.temb.p4", 64, cfg.c0, rng);

    add_conv(p, "dn.in", cfg.c0, 3, 3, rng);
    add_conv(p, "dn.d1", cfg.c1, cfg.c0, 3, rng);
    add_xattn(p, "dn.x0", cfg.c1, cfg.cond_dim, rng);
    add_conv(p, "dn.c1", cfg.c1, cfg.c1, 3, rng);
    add_conv(p, "dn.d2", cfg.c2, cfg.c1, 3, rng);
    add_xattn(p, "dn.x1", cfg.c2, cfg.cond_dim, rng);
    add_conv(p, "dn.c2", cfg.c2, cfg.c2, 3, rng);
    add_xattn(p, "dn.x2", cfg.c2, cfg.cond_dim, rng);
    add_proj(p, "dn.u1", cfg.c2, cfg.c1, rng);
    add_xattn(p, "dn.x3", cfg.c1, cfg.cond_dim, rng);
    add_conv(p, "dn.c3", cfg.c1, cfg.c1, 3, rng);
    add_proj(p, "dn.u2", cfg.c1, cfg.c0, rng);
    add_conv(p, "dn.out", 3, cfg.c0, 3, rng);
}

Array timestep_embedding(int t, int64_t time_dim) {
    Array e({1, time_dim});
    const int64_t half = time_dim / 2;
    for (int64_t i = 0; i < half; ++i) {
        const double w = std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half - 1));
        e.data[static_cast<size_t>(i)] = std::sin(w * static_cast<double>(t));
        e.data[static_cast<size_t>(half + i)] = std::cos(w * static_cast<double>(t));
    }
    return e;
}

Array chw_to_pm(const Array& img) {
    if (img.ndim() != 3) throw std::invalid_argument("chw_to_pm: expected {C,H,W}, got " + shape_str(img.shape));
    const int64_t C = img.shape[0], H = img.shape[1], W = img.shape[2];
    Array out({H * W, C});
    for (int64_t c = 0; c < C; ++c)
        for (int64_t i = 0; i < H * W; ++i) out.data[static_cast<size_t>(i * C + c)] = img.data[static_cast<size_t>(c * H * W + i)];
    return out;
}

Array pm_to_chw(const Array& pm) {
    if (pm.ndim() != 2 || pm.shape[0] != kImageSize * kImageSize || pm.shape[1] != kImageChannels)
        throw std::invalid_argument("pm_to_chw: expected {1024,3}, got " + shape_str(pm.shape));
    Array out({kImageChannels, kImageSize, kImageSize});
    const int64_t HW = kImageSize * kImageSize;
    for (int64_t i = 0; i < HW; ++i)
        for (int64_t c = 0; c < kImageChannels; ++c)
            out.data[static_cast<size_t>(c * HW + i)] = pm.data[static_cast<size_t>(i * kImageChannels + c)];
    return out;
}

Var denoiser_forward(Tape& t, const DenoiserConfig& cfg, Var zt_pm, int timestep,
                     const std::array<Var, kCondLayers>& y_layers) {
    // timestep embedding -> shared 64-d vector -> per-stage channel biases
    Var te = t.leaf(timestep_embedding(timestep, cfg.time_dim));
    Var temb = t.add(t.matmul(t.silu(t.add(t.matmul(te, t.param("dn.temb.l1.w")), t.param("dn.temb.l1.b"))),
                              t.param("dn.temb.l2.w")),
                     t.param("dn.temb.l2.b"));
    auto tproj = [&](const char* pfx) {
        return t.add(t.matmul(temb, t.param(std::string(pfx) + ".w")), t.param(std::string(pfx) + ".b"));
    };

    Var x32 = t.silu(t.add(conv(t, zt_pm, "dn.in", 32, 32, 3, 1), tproj("dn.temb.p0")));        // {1024, c0}
    Var x16 = t.silu(t.add(conv(t, x32, "dn.d1", 32, 32, 3, 2), tproj("dn.temb.p1")));          // {256, c1}
    x16 = t.add(x16, xattn(t, x16, y_layers[0], "dn.x0"));
    x16 = t.silu(conv(t, x16, "dn.c1", 16, 16, 3, 1));
    Var x8 = t.silu(t.add(conv(t, x16, "dn.d2", 16, 16, 3, 2), tproj("dn.temb.p2")));           // {64, c2}
    x8 = t.add(x8, xattn(t, x8, y_layers[1], "dn.x1"));
    x8 = t.silu(conv(t, x8, "dn.c2", 8, 8, 3, 1));
    x8 = t.add(x8, xattn(t, x8, y_layers[2], "dn.x2"));
    Var u16 = t.add(t.matmul(t.upsample2x(x8, 8, 8), t.param("dn.u1.w")), t.param("dn.u1.b"));  // {256, c1}
    u16 = t.silu(t.add(t.add(u16, x16), tproj("dn.temb.p3")));
    u16 = t.add(u16, xattn(t, u16, y_layers[3], "dn.x3"));
    u16 = t.silu(conv(t, u16, "dn.c3", 16, 16, 3, 1));
    Var u32 = t.add(t.matmul(t.upsample2x(u16, 16, 16), t.param("dn.u2.w")), t.param("dn.u2.b"));  // {1024, c0}
    u32 = t.silu(t.add(t.add(u32, x32), tproj("dn.temb.p4")));
    return conv(t, u32, "dn.out", 32, 32, 3, 1);  // {1024, 3}
}

}  // namespace adi
