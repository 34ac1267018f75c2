#pragma once

#include "adi/array.hpp"
#include "adi/rng.hpp"
#include "adi/scene.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace adi {

// ---------------- prompt vocabulary ----------------
// Structural prompts over a fixed vocabulary: padding, one action-slot
// marker, one word per action (used only during pretraining), one word per
// subject, one word per background. No tokenizer.
constexpr int64_t kTokPad = 0;
constexpr int64_t kTokSlot = 1;
constexpr int64_t kTokAction0 = 2;
constexpr int64_t kTokSubject0 = kTokAction0 + kNumActions;  // 10
constexpr int kMaxSubjects = 12;
constexpr int kMaxBackgrounds = 6;
constexpr int64_t kTokBackground0 = kTokSubject0 + kMaxSubjects;  // 22
constexpr int64_t kVocabSize = kTokBackground0 + kMaxBackgrounds;  // 28
constexpr int kPromptLen = 8;

// A prompt template: token sequence with exactly one action-slot marker.
struct Prompt {
    std::vector<int64_t> tokens;  // length kPromptLen
    int slot_pos = 1;
};

Prompt prompt_for(int subject_id, int background_id);
// Template with the slot filled by the action's own word (pretraining data).
std::vector<int64_t> tokens_with_action(const Prompt& p, int action_id);
// Null conditioning sequence for classifier-free guidance.
std::vector<int64_t> null_tokens();

// ---------------- corpora ----------------
struct CorpusItem {
    Scene scene;
    uint64_t sample_seed = 0;
    Array image;  // {3,32,32}
};

struct DataConfig {
    int num_actions = kNumActions;
    int num_subjects = 12;
    int num_backgrounds = 6;
    int per_cell = 2;  // pretrain renders per (action, subject, background)
    int exemplar_action = 2;
    int exemplar_count = 10;
    std::vector<int> heldout_subjects = {8, 9, 10, 11};
    bool vary_exemplar_background = true;  // config flag: freeze backgrounds for sensitivity studies
    double jitter_scale = kDefaultJitterScale;
    uint64_t seed = 1;
};

struct CorpusBundle {
    DataConfig cfg;
    std::vector<CorpusItem> pretrain;   // covers all actions x subjects x backgrounds
    std::vector<CorpusItem> exemplars;  // one action, >= 10 distinct contexts
    std::vector<int> heldout_subjects;
    std::vector<int> exemplar_subjects;  // disjoint from heldout_subjects
};

CorpusBundle build_corpora(const DataConfig& cfg);

void save_corpus(const std::filesystem::path& dir, const CorpusBundle& bundle);
CorpusBundle load_corpus(const std::filesystem::path& dir);

// ---------------- sample triples ----------------
struct SampleTriple {
    CorpusItem anchor;
    CorpusItem context_diff;  // same action, different context
    CorpusItem action_diff;   // same context (up to jitter), different action
    Prompt anchor_prompt;
};

// Draws the context-different partner from the exemplar pool and renders the
// action-different partner with the anchor's context. Deterministic in rng.
SampleTriple make_triple(const CorpusItem& anchor, const std::vector<CorpusItem>& exemplars,
                         const DataConfig& cfg, Rng& rng);

}  // namespace adi
