#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "adi/invert.hpp"

#include <cmath>
#include <filesystem>

using namespace adi;

namespace {

Models tiny_models(uint64_t seed = 3) {
    DenoiserConfig dn;
    dn.c0 = 4;
    dn.c1 = 8;
    dn.c2 = 12;
    return init_models(seed, dn);
}

DataConfig small_data() {
    DataConfig dc;
    dc.per_cell = 1;
    dc.num_subjects = 6;
    dc.num_backgrounds = 3;
    dc.heldout_subjects = {5};
    dc.exemplar_action = 1;
    dc.exemplar_count = 6;
    return dc;
}

double norm2(const Array& a) {
    double s = 0;
    for (double v : a.data) s += v * v;
    return s;
}

}  // namespace

TEST_CASE("identical anchor and context images give bit-identical gradients under shared (t, eps)") {
    Models m = tiny_models();
    DataConfig dc = small_data();
    CorpusBundle corpus = build_corpora(dc);
    Rng rng(17);
    SampleTriple triple = make_triple(corpus.exemplars[0], corpus.exemplars, dc, rng);
    triple.context_diff = triple.anchor;  // degenerate pair

    InversionConfig ic;
    ParamSet idents = init_identifiers(m, ic);
    ParamSet work = inversion_params(m, idents);
    Array eps({3, 32, 32});
    Rng nr(3);
    for (double& v : eps.data) v = nr.gauss();
    GradientTriple gt = grads_for_triple(m, work, triple, 25, eps, false);
    for (const auto& [name, ga] : gt.anchor) {
        const Array& gc = gt.ctx.at(name);
        REQUIRE(ga.data.size() == gc.data.size());
        for (size_t i = 0; i < ga.data.size(); ++i) CHECK(ga.data[i] == gc.data[i]);
        CHECK(norm2(ga) > 0.0);
    }
}

TEST_CASE("anchor-prompt contract: all three evaluations use identical token sequences") {
    Models m = tiny_models();
    DataConfig dc = small_data();
    CorpusBundle corpus = build_corpora(dc);
    Rng rng(18);
    SampleTriple triple = make_triple(corpus.exemplars[1], corpus.exemplars, dc, rng);
    InversionConfig ic;
    ParamSet idents = init_identifiers(m, ic);
    ParamSet work = inversion_params(m, idents);
    Array eps({3, 32, 32});
    GradientTriple gt = grads_for_triple(m, work, triple, 10, eps, false);
    CHECK(gt.anchor_tokens == gt.ctx_tokens);
    CHECK(gt.anchor_tokens == gt.act_tokens);
    CHECK(gt.anchor_tokens == triple.anchor_prompt.tokens);
}

TEST_CASE("one-parameter toy model gradient matches the closed form") {
    // eps_hat = v (broadcast over channels) applied to every pixel of one
    // channel row: loss = mean((zt*w - eps)^2) with w scalar.
    ParamSet p;
    p.add("w", Array({1}, {0.7}));
    Rng rng(5);
    Array zt({1, 8}), eps({1, 8});
    for (int i = 0; i < 8; ++i) {
        zt[i] = rng.gauss();
        eps[i] = rng.gauss();
    }
    Tape t(&p);
    Var pred = t.mul(t.leaf(zt), t.param("w"));
    Var loss = t.mse(pred, t.leaf(eps));
    auto bw = t.backward(loss);
    double hand = 0;
    const double w = 0.7;
    for (int i = 0; i < 8; ++i) hand += 2.0 / 8.0 * zt[i] * (w * zt[i] - eps[i]);
    CHECK(bw.grads.at("w")[0] == doctest::Approx(hand).epsilon(1e-12));
}

TEST_CASE("identifier initialization starts at the slot embedding plus small noise") {
    Models m = tiny_models(8);
    InversionConfig ic;
    ParamSet idents = init_identifiers(m, ic);
    REQUIRE(idents.size() == kCondLayers);
    const Array& table = m.params.at("te.embed");
    for (size_t l = 0; l < idents.size(); ++l) {
        const Array& v = idents.value(l);
        REQUIRE(v.numel() == m.te_cfg.dim);
        for (int64_t j = 0; j < v.numel(); ++j)
            CHECK(std::abs(v[j] - table.at(kTokSlot, j)) < 10.0 * ic.init_noise);
    }
}

TEST_CASE("update locality: masked channels are bit-unchanged with weight decay off") {
    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        ParamSet p;
        Array v({16});
        for (double& x : v.data) x = rng.gauss();
        p.add("adi.v.0", v, true);
        Array before = p.at("adi.v.0");

        Array g({16});
        for (double& x : g.data) x = rng.gauss();
        ChannelMask mask;
        mask.bits.resize(16);
        for (auto& b : mask.bits) b = rng.below(2) ? 1 : 0;

        AdamW opt({2e-4, 0.9, 0.999, 1e-8, /*weight_decay=*/0.0});  // fresh optimizer state
        std::map<std::string, Array> grads;
        grads["adi.v.0"] = apply_mask(g, mask);
        opt.step(p, grads);
        const Array& after = p.at("adi.v.0");
        for (int i = 0; i < 16; ++i) {
            if (mask.bits[static_cast<size_t>(i)] == 0)
                CHECK(after[i] == before[i]);
            else if (g[i] != 0.0)
                CHECK(after[i] != before[i]);
        }
    }
}

TEST_CASE("overlap rate: identical, disjoint and independent-random mask pairs") {
    // identical masks at beta=0.6, d=10: preserved 4 of 10 -> overlap 0.4
    std::vector<MaskRecord> hist;
    {
        Array ga({10}), gc({10});
        for (int i = 0; i < 10; ++i) ga[i] = 9.0 - i;
        MaskRecord rec;
        rec.ctx = context_mask(ga, gc, 0.6);
        rec.act = rec.ctx;
        rec.act.provenance = "action";
        rec.merged = merge_masks(rec.ctx, rec.act, MergeMode::Intersection);
        hist.push_back(rec);
    }
    CHECK(overlap_rate(hist) == doctest::Approx(0.4).epsilon(1e-12));

    // disjoint preserved sets -> 0
    hist.clear();
    {
        MaskRecord rec;
        rec.ctx.bits = {1, 1, 0, 0};
        rec.act.bits = {0, 0, 1, 1};
        rec.merged.bits = {0, 0, 0, 0};
        hist.push_back(rec);
    }
    CHECK(overlap_rate(hist) == 0.0);

    // independent uniform-random masks at beta=0.6: expected (1-beta)^2 = 0.16
    hist.clear();
    Rng rng(2025);
    Array g({64});
    for (int step = 0; step < 1000; ++step) {
        MaskRecord rec;
        rec.ctx = baseline_mask(g, 0.6, MaskStrategy::Random, rng);
        rec.act = baseline_mask(g, 0.6, MaskStrategy::Random, rng);
        rec.merged = merge_masks(rec.ctx, rec.act, MergeMode::Intersection);
        hist.push_back(rec);
    }
    CHECK(overlap_rate(hist) == doctest::Approx(0.163).epsilon(0.15));  // 26/64 squared-ish, +-0.02

    CHECK_THROWS_AS(overlap_rate({}), std::invalid_argument);
}

TEST_CASE("short inversion run records per-step per-layer masks and learns") {
    Models m = tiny_models(100);
    DataConfig dc = small_data();
    CorpusBundle corpus = build_corpora(dc);
    MaskingConfig mc;
    mc.beta = 0.6;
    InversionConfig ic;
    ic.steps = 25;
    ic.lr = 5e-3;
    InversionResult res = invert(m, corpus.exemplars, dc, mc, ic);
    CHECK_FALSE(res.failed);
    CHECK(res.skipped_steps == 0);
    REQUIRE(res.identifiers.size() == kCondLayers);
    CHECK(res.history.size() == static_cast<size_t>(25 * kCondLayers));
    for (const auto& rec : res.history) {
        CHECK(rec.ctx.masked_count() == masked_count_for(0.6, m.te_cfg.dim));
        CHECK(rec.act.masked_count() == masked_count_for(0.6, m.te_cfg.dim));
        // intersection merge: preserved(merged) == preserved(ctx) AND preserved(act)
        for (size_t i = 0; i < rec.merged.bits.size(); ++i)
            CHECK(rec.merged.bits[i] == (rec.ctx.bits[i] & rec.act.bits[i]));
    }
    CHECK(res.overlap_rate > 0.0);
    CHECK(res.overlap_rate < 0.4);
    // identifiers moved away from init
    ParamSet fresh = init_identifiers(m, ic);
    double moved = 0;
    for (int l = 0; l < kCondLayers; ++l) {
        const Array& a = res.identifiers.at("adi.v." + std::to_string(l));
        const Array& b = fresh.at("adi.v." + std::to_string(l));
        for (int64_t j = 0; j < a.numel(); ++j) moved += std::abs(a[j] - b[j]);
    }
    CHECK(moved > 0.0);
}

TEST_CASE("reversed strategy complements the merged mask before the update") {
    Models m = tiny_models(100);
    DataConfig dc = small_data();
    CorpusBundle corpus = build_corpora(dc);
    InversionConfig ic;
    ic.steps = 1;
    MaskingConfig adi_mc{0.6, MergeMode::Intersection, MaskStrategy::Adi};
    MaskingConfig rev_mc{0.6, MergeMode::Intersection, MaskStrategy::ReversedAdi};
    InversionResult a = invert(m, corpus.exemplars, dc, adi_mc, ic);
    InversionResult r = invert(m, corpus.exemplars, dc, rev_mc, ic);
    REQUIRE(a.history.size() == r.history.size());
    // same seed, same first step: the reversed run's applied mask is the complement
    for (size_t i = 0; i < a.history.size(); ++i)
        for (size_t j = 0; j < a.history[i].merged.bits.size(); ++j)
            CHECK(r.history[i].merged.bits[j] == 1 - a.history[i].merged.bits[j]);
}

TEST_CASE("strategy none applies an all-ones mask (unmasked per-layer baseline)") {
    Models m = tiny_models(100);
    DataConfig dc = small_data();
    CorpusBundle corpus = build_corpora(dc);
    InversionConfig ic;
    ic.steps = 2;
    MaskingConfig mc{0.6, MergeMode::Intersection, MaskStrategy::None};
    InversionResult res = invert(m, corpus.exemplars, dc, mc, ic);
    for (const auto& rec : res.history) {
        CHECK(rec.ctx.bits.empty());
        for (uint8_t b : rec.merged.bits) CHECK(b == 1);
    }
    CHECK(std::isnan(res.overlap_rate));
}

TEST_CASE("tie_layers learns a single shared token duplicated across layers") {
    Models m = tiny_models(100);
    DataConfig dc = small_data();
    CorpusBundle corpus = build_corpora(dc);
    InversionConfig ic;
    ic.steps = 4;
    ic.tie_layers = true;
    MaskingConfig mc{0.6, MergeMode::Intersection, MaskStrategy::None};
    InversionResult res = invert(m, corpus.exemplars, dc, mc, ic);
    REQUIRE(res.identifiers.size() == kCondLayers);
    const Array& v0 = res.identifiers.at("adi.v.0");
    for (int l = 1; l < kCondLayers; ++l) {
        const Array& vl = res.identifiers.at("adi.v." + std::to_string(l));
        for (int64_t j = 0; j < v0.numel(); ++j) CHECK(vl[j] == v0[j]);
    }
}

TEST_CASE("mask history file round-trips") {
    Models m = tiny_models(100);
    DataConfig dc = small_data();
    CorpusBundle corpus = build_corpora(dc);
    InversionConfig ic;
    ic.steps = 3;
    MaskingConfig mc{0.6, MergeMode::Intersection, MaskStrategy::Adi};
    InversionResult res = invert(m, corpus.exemplars, dc, mc, ic);
    auto path = std::filesystem::temp_directory_path() / "adi_mask_history_test.txt";
    save_mask_history(path, res.history);
    auto loaded = load_mask_history(path);
    REQUIRE(loaded.size() == res.history.size());
    for (size_t i = 0; i < loaded.size(); ++i) {
        CHECK(loaded[i].step == res.history[i].step);
        CHECK(loaded[i].layer == res.history[i].layer);
        CHECK(loaded[i].ctx.bits == res.history[i].ctx.bits);
        CHECK(loaded[i].act.bits == res.history[i].act.bits);
        CHECK(loaded[i].merged.bits == res.history[i].merged.bits);
    }
    CHECK(overlap_rate(loaded) == doctest::Approx(res.overlap_rate).epsilon(1e-12));
    std::filesystem::remove(path);
}

TEST_CASE("inversion is bit-reproducible for a fixed config") {
    Models m = tiny_models(100);
    DataConfig dc = small_data();
    CorpusBundle corpus = build_corpora(dc);
    InversionConfig ic;
    ic.steps = 6;
    MaskingConfig mc{0.6, MergeMode::Intersection, MaskStrategy::Adi};
    InversionResult a = invert(m, corpus.exemplars, dc, mc, ic);
    InversionResult b = invert(m, corpus.exemplars, dc, mc, ic);
    for (int l = 0; l < kCondLayers; ++l) {
        const Array& va = a.identifiers.at("adi.v." + std::to_string(l));
        const Array& vb = b.identifiers.at("adi.v." + std::to_string(l));
        for (int64_t j = 0; j < va.numel(); ++j) CHECK(va[j] == vb[j]);
    }
}
