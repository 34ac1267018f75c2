#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "adi/masks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace adi;

namespace {

// Brute-force oracle, independent of the implementation: stable_sort of
// (value) pairs -- stability supplies the ascending-index tie rule.
std::vector<uint8_t> oracle_block_extremes(const std::vector<double>& value, int64_t M, bool block_largest) {
    std::vector<std::pair<double, int64_t>> items;
    for (size_t i = 0; i < value.size(); ++i) items.emplace_back(value[i], static_cast<int64_t>(i));
    std::stable_sort(items.begin(), items.end(), [&](const auto& a, const auto& b) {
        return block_largest ? a.first > b.first : a.first < b.first;
    });
    std::vector<uint8_t> bits(value.size(), 1);
    for (int64_t r = 0; r < M; ++r) bits[static_cast<size_t>(items[static_cast<size_t>(r)].second)] = 0;
    return bits;
}

std::vector<double> abs_diff(const Array& a, const Array& b) {
    std::vector<double> d(a.data.size());
    for (size_t i = 0; i < d.size(); ++i) d[i] = std::abs(a.data[i] - b.data[i]);
    return d;
}

Array random_vec(int64_t d, Rng& rng, bool with_ties) {
    Array a({d});
    for (auto& v : a.data) v = rng.gauss();
    if (with_ties) {
        // quantize to force repeated values
        for (auto& v : a.data) v = std::round(v * 4.0) / 4.0;
    }
    return a;
}

}  // namespace

TEST_CASE("masked channel count is round(beta*d), half away from zero") {
    CHECK(masked_count_for(0.0, 64) == 0);
    CHECK(masked_count_for(1.0, 64) == 64);
    CHECK(masked_count_for(0.6, 64) == 38);   // 38.4
    CHECK(masked_count_for(0.5, 7) == 4);     // 3.5 rounds up
    CHECK(masked_count_for(0.6, 10) == 6);
    CHECK_THROWS_AS(masked_count_for(-0.1, 8), std::invalid_argument);
    CHECK_THROWS_AS(masked_count_for(1.1, 8), std::invalid_argument);
}

TEST_CASE("context mask blocks the largest-difference channels") {
    // delta = |g_a - g_c| = [9..0]; beta=0.6 -> channels 0..5 blocked
    Array ga({10}), gc({10});
    for (int i = 0; i < 10; ++i) ga[i] = 9.0 - i;
    ChannelMask m = context_mask(ga, gc, 0.6);
    for (int i = 0; i < 6; ++i) CHECK(m.bits[static_cast<size_t>(i)] == 0);
    for (int i = 6; i < 10; ++i) CHECK(m.bits[static_cast<size_t>(i)] == 1);
    CHECK(m.provenance == "context");
}

TEST_CASE("context mask tie rule: equal gradients block lowest indices first") {
    Array ga({10}), gc({10});  // delta all zero
    ChannelMask m = context_mask(ga, gc, 0.6);
    CHECK(m.masked_count() == 6);
    for (int i = 0; i < 6; ++i) CHECK(m.bits[static_cast<size_t>(i)] == 0);
    for (int i = 6; i < 10; ++i) CHECK(m.bits[static_cast<size_t>(i)] == 1);
}

TEST_CASE("context mask at beta=0 preserves everything") {
    Array ga({8}), gc({8});
    for (int i = 0; i < 8; ++i) ga[i] = i;
    ChannelMask m = context_mask(ga, gc, 0.0);
    for (uint8_t b : m.bits) CHECK(b == 1);
}

TEST_CASE("action mask blocks the smallest-difference channels") {
    // delta = [9..0]; beta=0.6 -> the 6 smallest are channels 4..9
    Array ga({10}), gc({10});
    for (int i = 0; i < 10; ++i) ga[i] = 9.0 - i;
    ChannelMask m = action_mask(ga, gc, 0.6);
    for (int i = 0; i < 4; ++i) CHECK(m.bits[static_cast<size_t>(i)] == 1);
    for (int i = 4; i < 10; ++i) CHECK(m.bits[static_cast<size_t>(i)] == 0);
    CHECK(m.provenance == "action");
}

TEST_CASE("action mask with distinct positive deltas blocks exactly the M smallest") {
    Rng rng(4);
    Array ga({16}), gz({16});
    for (int i = 0; i < 16; ++i) ga[i] = 0.5 + rng.uniform();
    ChannelMask m = action_mask(ga, gz, 0.5);
    auto oracle = oracle_block_extremes(abs_diff(ga, gz), 8, false);
    CHECK(m.bits == oracle);
}

TEST_CASE("action mask at beta=1 blocks everything") {
    Array ga({8}), gc({8});
    for (int i = 0; i < 8; ++i) ga[i] = i * 0.1;
    ChannelMask m = action_mask(ga, gc, 1.0);
    for (uint8_t b : m.bits) CHECK(b == 0);
}

TEST_CASE("merge semantics") {
    ChannelMask c{{1, 1, 0, 0}, "context"};
    ChannelMask a{{1, 0, 1, 0}, "action"};
    ChannelMask i = merge_masks(c, a, MergeMode::Intersection);
    CHECK(i.bits == std::vector<uint8_t>{1, 0, 0, 0});
    ChannelMask u = merge_masks(c, a, MergeMode::Union);
    CHECK(u.bits == std::vector<uint8_t>{1, 1, 1, 0});
}

TEST_CASE("merge algebra: preserved sets are exact set intersection/union, 10^3 pairs") {
    Rng rng(11);
    for (int trial = 0; trial < 1000; ++trial) {
        const int64_t d = 32;
        ChannelMask a, b;
        a.bits.resize(static_cast<size_t>(d));
        b.bits.resize(static_cast<size_t>(d));
        for (int64_t i = 0; i < d; ++i) {
            a.bits[static_cast<size_t>(i)] = rng.below(2) ? 1 : 0;
            b.bits[static_cast<size_t>(i)] = rng.below(2) ? 1 : 0;
        }
        ChannelMask inter = merge_masks(a, b, MergeMode::Intersection);
        ChannelMask uni = merge_masks(a, b, MergeMode::Union);
        int64_t pi = 0, pu = 0;
        for (int64_t i = 0; i < d; ++i) {
            const bool in_a = a.bits[static_cast<size_t>(i)], in_b = b.bits[static_cast<size_t>(i)];
            CHECK(inter.bits[static_cast<size_t>(i)] == static_cast<uint8_t>(in_a && in_b));
            CHECK(uni.bits[static_cast<size_t>(i)] == static_cast<uint8_t>(in_a || in_b));
            pi += in_a && in_b;
            pu += in_a || in_b;
        }
        CHECK(inter.preserved_count() == pi);
        CHECK(inter.preserved_count() <= std::min(a.preserved_count(), b.preserved_count()));
        CHECK(uni.preserved_count() == pu);
    }
}

TEST_CASE("apply_mask identity, annihilation and support bound") {
    Rng rng(3);
    Array g({12});
    for (auto& v : g.data) v = rng.gauss();
    ChannelMask ones, zeros;
    ones.bits.assign(12, 1);
    zeros.bits.assign(12, 0);
    Array same = apply_mask(g, ones);
    for (int i = 0; i < 12; ++i) CHECK(same[i] == g[i]);
    Array none = apply_mask(g, zeros);
    for (int i = 0; i < 12; ++i) CHECK(none[i] == 0.0);

    ChannelMask half;
    half.bits.assign(12, 0);
    for (int i = 0; i < 5; ++i) half.bits[static_cast<size_t>(i)] = 1;
    Array masked = apply_mask(g, half);
    int64_t nonzero = 0;
    for (int i = 0; i < 12; ++i) nonzero += masked[i] != 0.0;
    CHECK(nonzero <= half.preserved_count());
}

TEST_CASE("min-strategy example") {
    Array g({4}, {0.1, -5.0, 0.2, 3.0});
    Rng rng(0);
    ChannelMask m = baseline_mask(g, 0.5, MaskStrategy::Min, rng);
    CHECK(m.bits == std::vector<uint8_t>{0, 1, 0, 1});
}

TEST_CASE("random baseline is reproducible under a fixed rng") {
    Rng r1(21), r2(21);
    Array g({64});
    ChannelMask a = baseline_mask(g, 0.6, MaskStrategy::Random, r1);
    ChannelMask b = baseline_mask(g, 0.6, MaskStrategy::Random, r2);
    CHECK(a.bits == b.bits);
    CHECK(a.masked_count() == 38);
}

TEST_CASE("uniform baseline blocks a fixed evenly-spread pattern") {
    Array g({10});
    Rng rng(0);
    ChannelMask m = baseline_mask(g, 0.4, MaskStrategy::Uniform, rng);
    CHECK(m.masked_count() == 4);
    ChannelMask again = baseline_mask(g, 0.4, MaskStrategy::Uniform, rng);
    CHECK(m.bits == again.bits);  // no rng involvement
    // no two blocked channels may be adjacent when beta <= 0.5 and spread is even
    for (size_t i = 1; i < m.bits.size(); ++i) CHECK((m.bits[i - 1] + m.bits[i]) >= 1);
}

TEST_CASE("reversing a mask complements every bit") {
    ChannelMask m{{1, 0, 1, 1, 0}, "merged"};
    ChannelMask r = complement(m);
    for (size_t i = 0; i < m.bits.size(); ++i) CHECK(r.bits[i] == 1 - m.bits[i]);
}

TEST_CASE("oracle equivalence across the beta/d grid with random and tie-heavy inputs") {
    const double betas[] = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
    const int64_t dims[] = {8, 64, 77, 1024};
    Rng rng(2024);
    for (double beta : betas)
        for (int64_t d : dims) {
            const int64_t M = masked_count_for(beta, d);
            for (int trial = 0; trial < 40; ++trial) {
                const bool ties = trial % 2 == 1;
                Array ga = random_vec(d, rng, ties);
                Array gb = random_vec(d, rng, ties);
                auto delta = abs_diff(ga, gb);
                CHECK(context_mask(ga, gb, beta).bits == oracle_block_extremes(delta, M, true));
                CHECK(action_mask(ga, gb, beta).bits == oracle_block_extremes(delta, M, false));

                std::vector<double> mag(static_cast<size_t>(d));
                for (int64_t i = 0; i < d; ++i) mag[static_cast<size_t>(i)] = std::abs(ga[i]);
                CHECK(baseline_mask(ga, beta, MaskStrategy::Min, rng).bits == oracle_block_extremes(mag, M, false));
                CHECK(baseline_mask(ga, beta, MaskStrategy::Max, rng).bits == oracle_block_extremes(mag, M, true));
                CHECK(baseline_mask(ga, beta, MaskStrategy::Uniform, rng).masked_count() == M);
                CHECK(baseline_mask(ga, beta, MaskStrategy::Random, rng).masked_count() == M);
            }
            // adversarial ties: all-equal and blocked-constant inputs
            Array flat = Array::full({d}, 0.25);
            CHECK(context_mask(flat, flat, beta).bits ==
                  oracle_block_extremes(std::vector<double>(static_cast<size_t>(d), 0.0), M, true));
            CHECK(action_mask(flat, flat, beta).bits ==
                  oracle_block_extremes(std::vector<double>(static_cast<size_t>(d), 0.0), M, false));
        }
}

TEST_CASE("rank selection equals the threshold rule on all-distinct inputs") {
    Rng rng(31);
    for (int trial = 0; trial < 1000; ++trial) {
        const int64_t d = 24;
        Array ga({d}), gz({d});
        std::vector<int64_t> perm(static_cast<size_t>(d));
        std::iota(perm.begin(), perm.end(), 0);
        for (int64_t i = d - 1; i > 0; --i)
            std::swap(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(rng.below(static_cast<uint64_t>(i + 1)))]);
        for (int64_t i = 0; i < d; ++i)
            ga[i] = 0.1 * static_cast<double>(perm[static_cast<size_t>(i)] + 1) + rng.uniform() * 0.01;
        const double beta = 0.25 * static_cast<double>(1 + rng.below(3));
        const int64_t M = masked_count_for(beta, d);
        auto delta = abs_diff(ga, gz);

        // context rule: mask iff delta >= gamma, gamma = the M-th largest delta
        std::vector<double> sorted = delta;
        std::sort(sorted.begin(), sorted.end());
        ChannelMask mc = context_mask(ga, gz, beta);
        if (M > 0) {
            const double gamma = sorted[static_cast<size_t>(d - M)];
            for (int64_t i = 0; i < d; ++i)
                CHECK(mc.bits[static_cast<size_t>(i)] == static_cast<uint8_t>(delta[static_cast<size_t>(i)] < gamma));
        } else {
            for (uint8_t b : mc.bits) CHECK(b == 1);
        }
        // action rule: mask iff delta < lambda, lambda = the (M+1)-th smallest delta
        ChannelMask ma = action_mask(ga, gz, beta);
        if (M < d) {
            const double lambda = sorted[static_cast<size_t>(M)];
            for (int64_t i = 0; i < d; ++i)
                CHECK(ma.bits[static_cast<size_t>(i)] == static_cast<uint8_t>(delta[static_cast<size_t>(i)] >= lambda));
        } else {
            for (uint8_t b : ma.bits) CHECK(b == 0);
        }
    }
}
