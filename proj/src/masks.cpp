#include "adi/masks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace adi {

const char* merge_name(MergeMode m) { return m == MergeMode::Intersection ? "intersection" : "union"; }

const char* strategy_name(MaskStrategy s) {
    switch (s) {
        case MaskStrategy::Adi: return "adi";
        case MaskStrategy::Uniform: return "uniform";
        case MaskStrategy::Random: return "random";
        case MaskStrategy::Min: return "min";
        case MaskStrategy::Max: return "max";
        case MaskStrategy::ReversedAdi: return "reversed-adi";
        case MaskStrategy::None: return "none";
    }
    return "?";
}

MergeMode merge_from_name(const std::string& s) {
    if (s == "intersection") return MergeMode::Intersection;
    if (s == "union") return MergeMode::Union;
    throw std::invalid_argument("unknown merge mode: " + s);
}

MaskStrategy strategy_from_name(const std::string& s) {
    if (s == "adi") return MaskStrategy::Adi;
    if (s == "uniform") return MaskStrategy::Uniform;
    if (s == "random") return MaskStrategy::Random;
    if (s == "min") return MaskStrategy::Min;
    if (s == "max") return MaskStrategy::Max;
    if (s == "reversed-adi") return MaskStrategy::ReversedAdi;
    if (s == "none") return MaskStrategy::None;
    throw std::invalid_argument("unknown masking strategy: " + s);
}

int64_t masked_count_for(double beta, int64_t d) {
    if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("masking ratio beta must be in [0,1]");
    return static_cast<int64_t>(std::floor(beta * static_cast<double>(d) + 0.5));
}

namespace {

void check_pair(const Array& a, const Array& b, const char* who) {
    if (a.numel() != b.numel())
        throw std::invalid_argument(std::string(who) + ": gradient lengths " + shape_str(a.shape) + " and " +
                                    shape_str(b.shape) + " differ");
}

// Blocks the first M channels of the order induced by `larger_first`:
// channels sorted by value (descending when larger_first, else ascending),
// ties broken toward the lower channel index.
ChannelMask mask_by_rank(const std::vector<double>& value, int64_t M, bool larger_first, std::string provenance) {
    const int64_t d = static_cast<int64_t>(value.size());
    std::vector<int64_t> order(static_cast<size_t>(d));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int64_t i, int64_t j) {
        const double vi = value[static_cast<size_t>(i)], vj = value[static_cast<size_t>(j)];
        if (vi != vj) return larger_first ? vi > vj : vi < vj;
        return i < j;
    });
    ChannelMask m;
    m.bits.assign(static_cast<size_t>(d), 1);
    for (int64_t r = 0; r < M; ++r) m.bits[static_cast<size_t>(order[static_cast<size_t>(r)])] = 0;
    m.provenance = std::move(provenance);
    return m;
}

}  // namespace

ChannelMask context_mask(const Array& g_anchor, const Array& g_ctx, double beta) {
    check_pair(g_anchor, g_ctx, "context_mask");
    const int64_t d = g_anchor.numel();
    std::vector<double> delta(static_cast<size_t>(d));
    for (int64_t i = 0; i < d; ++i)
        delta[static_cast<size_t>(i)] = std::abs(g_anchor[i] - g_ctx[i]);
    return mask_by_rank(delta, masked_count_for(beta, d), /*larger_first=*/true, "context");
}

ChannelMask action_mask(const Array& g_anchor, const Array& g_act, double beta) {
    check_pair(g_anchor, g_act, "action_mask");
    const int64_t d = g_anchor.numel();
    std::vector<double> delta(static_cast<size_t>(d));
    for (int64_t i = 0; i < d; ++i)
        delta[static_cast<size_t>(i)] = std::abs(g_anchor[i] - g_act[i]);
    return mask_by_rank(delta, masked_count_for(beta, d), /*larger_first=*/false, "action");
}

ChannelMask merge_masks(const ChannelMask& m_ctx, const ChannelMask& m_act, MergeMode mode) {
    if (m_ctx.dim() != m_act.dim())
        throw std::invalid_argument("merge_masks: mask lengths " + std::to_string(m_ctx.dim()) + " and " +
                                    std::to_string(m_act.dim()) + " differ");
    ChannelMask out;
    out.bits.resize(m_ctx.bits.size());
    for (size_t i = 0; i < out.bits.size(); ++i)
        out.bits[i] = mode == MergeMode::Intersection ? (m_ctx.bits[i] & m_act.bits[i])
                                                      : (m_ctx.bits[i] | m_act.bits[i]);
    out.provenance = "merged";
    return out;
}

ChannelMask complement(const ChannelMask& m) {
    ChannelMask out;
    out.bits.resize(m.bits.size());
    for (size_t i = 0; i < m.bits.size(); ++i) out.bits[i] = m.bits[i] ? 0 : 1;
    out.provenance = m.provenance + "-reversed";
    return out;
}

Array apply_mask(const Array& g_anchor, const ChannelMask& m) {
    if (g_anchor.numel() != m.dim())
        throw std::invalid_argument("apply_mask: gradient " + shape_str(g_anchor.shape) + " vs mask length " +
                                    std::to_string(m.dim()));
    Array out = g_anchor;
    for (int64_t i = 0; i < out.numel(); ++i)
        if (!m.bits[static_cast<size_t>(i)]) out[i] = 0.0;
    return out;
}

ChannelMask baseline_mask(const Array& g_anchor, double beta, MaskStrategy strategy, Rng& rng) {
    const int64_t d = g_anchor.numel();
    const int64_t M = masked_count_for(beta, d);
    ChannelMask m;
    m.provenance = strategy_name(strategy);
    switch (strategy) {
        case MaskStrategy::Uniform: {
            // Bresenham-style stride: channel i blocked iff the running count
            // floor((i+1)*M/d) advances; exactly M blocked, evenly spread.
            m.bits.assign(static_cast<size_t>(d), 1);
            for (int64_t i = 0; i < d; ++i)
                if ((i + 1) * M / d > i * M / d) m.bits[static_cast<size_t>(i)] = 0;
            return m;
        }
        case MaskStrategy::Random: {
            std::vector<int64_t> idx(static_cast<size_t>(d));
            std::iota(idx.begin(), idx.end(), 0);
            for (int64_t i = 0; i < M; ++i) {
                const int64_t j = i + static_cast<int64_t>(rng.below(static_cast<uint64_t>(d - i)));
                std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
            }
            m.bits.assign(static_cast<size_t>(d), 1);
            for (int64_t i = 0; i < M; ++i) m.bits[static_cast<size_t>(idx[static_cast<size_t>(i)])] = 0;
            return m;
        }
        case MaskStrategy::Min:
        case MaskStrategy::Max: {
            std::vector<double> mag(static_cast<size_t>(d));
            for (int64_t i = 0; i < d; ++i) mag[static_cast<size_t>(i)] = std::abs(g_anchor[i]);
            return mask_by_rank(mag, M, /*larger_first=*/strategy == MaskStrategy::Max, m.provenance);
        }
        default:
            throw std::invalid_argument(std::string("baseline_mask: not a baseline strategy: ") +
                                        strategy_name(strategy));
    }
}

}  // namespace adi
