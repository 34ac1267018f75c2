#pragma once

#include "adi/array.hpp"
#include "adi/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace adi {

// Binary channel mask over one identifier: 1 = gradient update preserved,
// 0 = blocked.
struct ChannelMask {
    std::vector<uint8_t> bits;
    std::string provenance;  // context | action | merged | baseline name

    int64_t dim() const { return static_cast<int64_t>(bits.size()); }
    int64_t preserved_count() const {
        int64_t n = 0;
        for (uint8_t b : bits) n += b;
        return n;
    }
    int64_t masked_count() const { return dim() - preserved_count(); }
    std::string bitstring() const {
        std::string s(bits.size(), '0');
        for (size_t i = 0; i < bits.size(); ++i)
            if (bits[i]) s[i] = '1';
        return s;
    }
};

enum class MergeMode { Intersection, Union };
enum class MaskStrategy { Adi, Uniform, Random, Min, Max, ReversedAdi, None };

struct MaskingConfig {
    double beta = 0.6;
    MergeMode merge = MergeMode::Intersection;
    MaskStrategy strategy = MaskStrategy::Adi;
};

const char* merge_name(MergeMode m);
const char* strategy_name(MaskStrategy s);
MergeMode merge_from_name(const std::string& s);
MaskStrategy strategy_from_name(const std::string& s);

// Number of channels each raw mask blocks: round(beta * d), half away from
// zero. beta=0 keeps everything, beta=1 blocks everything.
int64_t masked_count_for(double beta, int64_t d);

// Context-different mask: delta = |g_anchor - g_ctx|; the M largest-delta
// channels are blocked (ties broken toward lower channel index), small
// differences -- action-consistent channels -- survive.
ChannelMask context_mask(const Array& g_anchor, const Array& g_ctx, double beta);

// Action-different mask: delta = |g_anchor - g_act|; the M smallest-delta
// channels are blocked (same tie rule), channels the action change moved
// survive.
ChannelMask action_mask(const Array& g_anchor, const Array& g_act, double beta);

ChannelMask merge_masks(const ChannelMask& m_ctx, const ChannelMask& m_act, MergeMode mode);

ChannelMask complement(const ChannelMask& m);  // the reversed-mask ablation

Array apply_mask(const Array& g_anchor, const ChannelMask& m);

// Comparison strategies. uniform: fixed stride pattern with exactly M blocked;
// random: M channels without replacement; min/max: M channels of
// smallest/largest |g| (ties toward lower index).
ChannelMask baseline_mask(const Array& g_anchor, double beta, MaskStrategy strategy, Rng& rng);

}  // namespace adi
