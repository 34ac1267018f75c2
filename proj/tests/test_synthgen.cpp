#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "adi/corpus.hpp"
#include "adi/io.hpp"
#include "adi/scene.hpp"

#include <cmath>
#include <filesystem>
#include <set>

using namespace adi;

namespace {

double image_l2(const Array& a, const Array& b) {
    double s = 0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        s += d * d;
    }
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("render is deterministic in the scene fields") {
    Scene s = scene_from_factors(3, 2, 1, 99);
    Array a = render(s);
    Array b = render(s);
    REQUIRE(a.data.size() == b.data.size());
    for (size_t i = 0; i < a.data.size(); ++i) CHECK(a.data[i] == b.data[i]);
    CHECK(a.shape == Shape{3, 32, 32});
    for (double v : a.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("jitter seed changes the image") {
    Scene s1 = scene_from_factors(1, 0, 0, 5);
    Scene s2 = s1;
    s2.jitter_seed += 1;
    CHECK(image_l2(render(s1), render(s2)) > 0.0);
}

TEST_CASE("archetypes are separated far beyond the jitter scale") {
    CHECK(archetype_min_separation() > 4.0 * kDefaultJitterScale);
}

TEST_CASE("inter-archetype image distance exceeds same-action jitter distance") {
    // arms-up (2) vs handstand (7), same context, vs 100 same-action jitter pairs
    Rng rng(77);
    double min_cross = 1e30, max_within = 0.0;
    for (int i = 0; i < 100; ++i) {
        const uint64_t seed_a = rng.next_u64(), seed_b = rng.next_u64();
        Scene up = scene_from_factors(2, 1, 0, seed_a);
        Scene hs = scene_from_factors(7, 1, 0, seed_a);
        hs.context = up.context;  // identical staging
        min_cross = std::min(min_cross, image_l2(render(up), render(hs)));
        Scene up2 = scene_from_factors(2, 1, 0, seed_a);
        up2.jitter_seed = seed_b;
        max_within = std::max(max_within, image_l2(render(up), render(up2)));
    }
    CHECK(min_cross > max_within);
}

TEST_CASE("context construction rejects staging that could clip the figure") {
    CHECK_THROWS_AS(make_context(0, 0, 5.0, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(make_context(0, 0, 0.0, 0.0, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(make_context(0, 0, 0.0, 0.0, 0.5), std::invalid_argument);
    CHECK_NOTHROW(make_context(0, 0, 1.0, -1.0, 1.05));
}

TEST_CASE("figure stays inside the canvas at extreme legal staging") {
    Rng rng(5);
    int border_ink = 0;
    for (int a = 0; a < 8; ++a)
        for (int trial = 0; trial < 40; ++trial) {
            Scene s;
            s.action = action_archetype(a);
            s.context = make_context(1, 0, trial % 2 ? 1.0 : -1.0, trial / 2 % 2 ? 1.0 : -1.0, 1.06);
            s.jitter_seed = rng.next_u64();
            Array img = render(s);
            for (int y = 0; y < 32; ++y)
                for (int x = 0; x < 32; ++x) {
                    if (y != 0 && y != 31 && x != 0 && x != 31) continue;
                    double lum = 0;
                    for (int c = 0; c < 3; ++c) lum += img.data[static_cast<size_t>((c * 32 + y) * 32 + x)];
                    border_ink += lum / 3 > 0.2;  // background 0 is uniform dark
                }
        }
    CHECK(border_ink == 0);
}

TEST_CASE("build_corpora covers the full factor grid and separates held-out subjects") {
    DataConfig cfg;
    cfg.per_cell = 1;
    CorpusBundle b = build_corpora(cfg);
    CHECK(b.pretrain.size() == static_cast<size_t>(8 * 12 * 6));
    std::set<std::tuple<int, int, int>> cells;
    for (const auto& it : b.pretrain)
        cells.insert({it.scene.action.action_id, it.scene.context.subject_id, it.scene.context.background_id});
    CHECK(cells.size() == static_cast<size_t>(8 * 12 * 6));  // uniform product grid

    CHECK(b.exemplars.size() == 10);
    std::set<std::pair<int, int>> contexts;
    for (const auto& it : b.exemplars) {
        CHECK(it.scene.action.action_id == cfg.exemplar_action);
        contexts.insert({it.scene.context.subject_id, it.scene.context.background_id});
        for (int h : b.heldout_subjects) CHECK(it.scene.context.subject_id != h);
    }
    CHECK(contexts.size() == 10);  // distinct contexts
    CHECK(b.heldout_subjects.size() >= 4);

    // factor independence: every (action, subject) pair appears equally often
    std::map<std::pair<int, int>, int> joint;
    for (const auto& it : b.pretrain) joint[{it.scene.action.action_id, it.scene.context.subject_id}]++;
    for (const auto& [k, v] : joint) CHECK(v == 6);
}

TEST_CASE("build_corpora rejects overlapping exemplar/held-out subject sets") {
    DataConfig cfg;
    cfg.heldout_subjects = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
    CHECK_THROWS_AS(build_corpora(cfg), std::invalid_argument);
}

TEST_CASE("prompt tokens match the scene's context factors") {
    for (int s = 0; s < 12; ++s)
        for (int g = 0; g < 6; ++g) {
            Prompt p = prompt_for(s, g);
            CHECK(p.tokens.size() == kPromptLen);
            CHECK(p.tokens[0] == kTokSubject0 + s);
            CHECK(p.tokens[2] == kTokBackground0 + g);
            int slots = 0;
            for (int64_t tok : p.tokens) slots += tok == kTokSlot;
            CHECK(slots == 1);  // exactly one action-slot marker
            auto filled = tokens_with_action(p, 4);
            CHECK(filled[static_cast<size_t>(p.slot_pos)] == kTokAction0 + 4);
        }
}

TEST_CASE("make_triple holds the four triple invariants over 10^4 draws") {
    DataConfig cfg;
    cfg.per_cell = 1;
    CorpusBundle b = build_corpora(cfg);
    Rng rng(123);
    for (int i = 0; i < 10000; ++i) {
        const CorpusItem& anchor = b.exemplars[rng.below(b.exemplars.size())];
        SampleTriple t = make_triple(anchor, b.exemplars, cfg, rng);
        CHECK(t.anchor.scene.action.action_id == t.context_diff.scene.action.action_id);
        CHECK_FALSE((t.anchor.scene.context == t.context_diff.scene.context &&
                     t.anchor.sample_seed == t.context_diff.sample_seed));
        CHECK(t.action_diff.scene.context.same_identity(t.anchor.scene.context));
        CHECK(t.anchor.scene.action.action_id != t.action_diff.scene.action.action_id);
    }
}

TEST_CASE("make_triple draws context partners from the other exemplars") {
    DataConfig cfg;
    CorpusBundle b = build_corpora(cfg);
    Rng rng(5);
    const CorpusItem& anchor = b.exemplars[0];
    for (int i = 0; i < 200; ++i) {
        SampleTriple t = make_triple(anchor, b.exemplars, cfg, rng);
        bool found = false;
        for (size_t j = 1; j < b.exemplars.size(); ++j)
            found |= t.context_diff.sample_seed == b.exemplars[j].sample_seed;
        CHECK(found);
        CHECK(t.action_diff.scene.action.action_id >= 0);
        CHECK(t.action_diff.scene.action.action_id < 8);
    }
}

TEST_CASE("make_triple is deterministic under a fixed rng seed") {
    DataConfig cfg;
    CorpusBundle b = build_corpora(cfg);
    Rng r1(9), r2(9);
    SampleTriple a = make_triple(b.exemplars[2], b.exemplars, cfg, r1);
    SampleTriple c = make_triple(b.exemplars[2], b.exemplars, cfg, r2);
    CHECK(a.context_diff.sample_seed == c.context_diff.sample_seed);
    CHECK(a.action_diff.scene.action.action_id == c.action_diff.scene.action.action_id);
    CHECK(image_l2(a.action_diff.image, c.action_diff.image) == 0.0);
}

TEST_CASE("make_triple rejects a corpus without a second context") {
    DataConfig cfg;
    CorpusBundle b = build_corpora(cfg);
    std::vector<CorpusItem> lone = {b.exemplars[0]};
    Rng rng(1);
    CHECK_THROWS_WITH_AS(make_triple(b.exemplars[0], lone, cfg, rng), doctest::Contains("1 exemplars"),
                         std::invalid_argument);
}

TEST_CASE("corpus directory round-trips bit-exactly") {
    DataConfig cfg;
    cfg.per_cell = 1;
    cfg.num_subjects = 4;
    cfg.num_backgrounds = 2;
    cfg.num_actions = 3;
    cfg.exemplar_action = 1;
    cfg.exemplar_count = 4;
    cfg.heldout_subjects = {3};
    CorpusBundle b = build_corpora(cfg);
    auto dir = std::filesystem::temp_directory_path() / "adi_corpus_test";
    std::filesystem::remove_all(dir);
    save_corpus(dir, b);
    CorpusBundle r = load_corpus(dir);
    REQUIRE(r.pretrain.size() == b.pretrain.size());
    REQUIRE(r.exemplars.size() == b.exemplars.size());
    // loader sorts by filename; compare as sets keyed by seed
    std::map<uint64_t, const CorpusItem*> orig;
    for (const auto& it : b.pretrain) orig[it.sample_seed] = &it;
    for (const auto& it : r.pretrain) {
        REQUIRE(orig.count(it.sample_seed) == 1);
        const CorpusItem& o = *orig[it.sample_seed];
        CHECK(it.scene.action.action_id == o.scene.action.action_id);
        CHECK(it.scene.context == o.scene.context);
        CHECK(image_l2(it.image, o.image) == 0.0);
    }
    std::filesystem::remove_all(dir);
}
