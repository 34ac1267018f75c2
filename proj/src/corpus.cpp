#include "adi/corpus.hpp"

#include "adi/io.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>

namespace adi {

namespace fs = std::filesystem;

Prompt prompt_for(int subject_id, int background_id) {
    if (subject_id < 0 || subject_id >= kMaxSubjects)
        throw std::invalid_argument("prompt_for: subject_id " + std::to_string(subject_id) + " outside vocabulary");
    if (background_id < 0 || background_id >= kMaxBackgrounds)
        throw std::invalid_argument("prompt_for: background_id " + std::to_string(background_id) +
                                    " outside vocabulary");
    Prompt p;
    p.tokens.assign(kPromptLen, kTokPad);
    p.tokens[0] = kTokSubject0 + subject_id;
    p.tokens[1] = kTokSlot;
    p.tokens[2] = kTokBackground0 + background_id;
    p.slot_pos = 1;
    return p;
}

std::vector<int64_t> tokens_with_action(const Prompt& p, int action_id) {
    if (action_id < 0 || action_id >= kNumActions)
        throw std::invalid_argument("tokens_with_action: action_id " + std::to_string(action_id) + " out of range");
    std::vector<int64_t> t = p.tokens;
    t[static_cast<size_t>(p.slot_pos)] = kTokAction0 + action_id;
    return t;
}

std::vector<int64_t> null_tokens() { return std::vector<int64_t>(kPromptLen, kTokPad); }

namespace {

void validate_config(const DataConfig& cfg) {
    if (cfg.num_actions < 2 || cfg.num_actions > kNumActions)
        throw std::invalid_argument("DataConfig: num_actions must be in [2,8]");
    if (cfg.num_subjects < 2 || cfg.num_subjects > kMaxSubjects)
        throw std::invalid_argument("DataConfig: num_subjects must be in [2,12]");
    if (cfg.num_backgrounds < 1 || cfg.num_backgrounds > kMaxBackgrounds)
        throw std::invalid_argument("DataConfig: num_backgrounds must be in [1,6]");
    if (cfg.exemplar_action < 0 || cfg.exemplar_action >= cfg.num_actions)
        throw std::invalid_argument("DataConfig: exemplar_action out of range");
    for (int h : cfg.heldout_subjects)
        if (h < 0 || h >= cfg.num_subjects)
            throw std::invalid_argument("DataConfig: held-out subject " + std::to_string(h) + " out of range");
}

std::vector<int> exemplar_subject_pool(const DataConfig& cfg) {
    std::vector<int> pool;
    for (int s = 0; s < cfg.num_subjects; ++s)
        if (std::find(cfg.heldout_subjects.begin(), cfg.heldout_subjects.end(), s) == cfg.heldout_subjects.end())
            pool.push_back(s);
    return pool;
}

CorpusItem make_item(int action, int subject, int background, uint64_t sample_seed, double jitter) {
    CorpusItem it;
    it.scene = scene_from_factors(action, subject, background, sample_seed, jitter);
    it.sample_seed = sample_seed;
    it.image = render(it.scene);
    return it;
}

}  // namespace

CorpusBundle build_corpora(const DataConfig& cfg) {
    validate_config(cfg);
    std::vector<int> pool = exemplar_subject_pool(cfg);
    if (pool.empty()) throw std::invalid_argument("build_corpora: every subject is held out");
    for (int s : pool)
        if (std::find(cfg.heldout_subjects.begin(), cfg.heldout_subjects.end(), s) != cfg.heldout_subjects.end())
            throw std::invalid_argument("build_corpora: exemplar and held-out subject sets overlap");

    CorpusBundle b;
    b.cfg = cfg;
    b.heldout_subjects = cfg.heldout_subjects;
    b.exemplar_subjects = pool;

    // pretrain grid: all actions x all subjects (held-out included) x all backgrounds
    uint64_t index = 0;
    for (int a = 0; a < cfg.num_actions; ++a)
        for (int s = 0; s < cfg.num_subjects; ++s)
            for (int g = 0; g < cfg.num_backgrounds; ++g)
                for (int r = 0; r < cfg.per_cell; ++r) {
                    uint64_t seed = mix_seed(cfg.seed, index++);
                    b.pretrain.push_back(make_item(a, s, g, seed, cfg.jitter_scale));
                }

    // exemplars: one action, >= 10 distinct contexts over non-held-out subjects
    for (int i = 0; i < cfg.exemplar_count; ++i) {
        int subject = pool[static_cast<size_t>(i) % pool.size()];
        int background = cfg.vary_exemplar_background ? i % cfg.num_backgrounds : 0;
        uint64_t seed = mix_seed(cfg.seed, 0xE0E0E0ull + static_cast<uint64_t>(i));
        b.exemplars.push_back(make_item(cfg.exemplar_action, subject, background, seed, cfg.jitter_scale));
    }
    return b;
}

namespace {

std::string item_filename(const CorpusItem& it) {
    std::ostringstream os;
    os << "s" << it.scene.context.subject_id << "_a" << it.scene.action.action_id << "_b"
       << it.scene.context.background_id << "_" << it.sample_seed << ".f64";
    return os.str();
}

CorpusItem item_from_filename(const std::string& name, double jitter, const fs::path& file) {
    // s{subject}_a{action}_b{bg}_{seed}.f64
    int subject = 0, action = 0, bg = 0;
    unsigned long long seed = 0;
    if (std::sscanf(name.c_str(), "s%d_a%d_b%d_%llu.f64", &subject, &action, &bg, &seed) != 4)
        throw std::runtime_error("corpus: unrecognized sample filename " + name);
    CorpusItem it;
    it.scene = scene_from_factors(action, subject, bg, seed, jitter);
    it.sample_seed = seed;
    auto data = read_f64_blob(file);
    if (static_cast<int64_t>(data.size()) != kImageChannels * kImageSize * kImageSize)
        throw std::runtime_error("corpus: blob " + name + " has wrong element count");
    it.image = Array({kImageChannels, kImageSize, kImageSize}, std::move(data));
    return it;
}

std::string join_ints(const std::vector<int>& v) {
    std::ostringstream os;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) os << ",";
        os << v[i];
    }
    return os.str();
}

std::vector<int> split_ints(const std::string& s) {
    std::vector<int> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ','))
        if (!tok.empty()) out.push_back(std::stoi(tok));
    return out;
}

}  // namespace

void save_corpus(const fs::path& dir, const CorpusBundle& b) {
    fs::create_directories(dir / "exemplars");
    std::ostringstream h;
    h << "version=1\n";
    h << "image_shape=" << kImageChannels << "," << kImageSize << "," << kImageSize << "\n";
    h << "num_actions=" << b.cfg.num_actions << "\n";
    h << "num_subjects=" << b.cfg.num_subjects << "\n";
    h << "num_backgrounds=" << b.cfg.num_backgrounds << "\n";
    h << "per_cell=" << b.cfg.per_cell << "\n";
    h << "exemplar_action=" << b.cfg.exemplar_action << "\n";
    h << "exemplar_count=" << b.cfg.exemplar_count << "\n";
    h << "heldout_subjects=" << join_ints(b.heldout_subjects) << "\n";
    h << "vary_exemplar_background=" << (b.cfg.vary_exemplar_background ? 1 : 0) << "\n";
    h << "jitter_scale=" << b.cfg.jitter_scale << "\n";
    h << "seed=" << b.cfg.seed << "\n";
    atomic_write(dir / "header.txt", h.str());
    for (const auto& it : b.pretrain) write_f64_blob(dir / item_filename(it), it.image);
    for (const auto& it : b.exemplars) write_f64_blob(dir / "exemplars" / item_filename(it), it.image);
}

CorpusBundle load_corpus(const fs::path& dir) {
    std::map<std::string, std::string> kv;
    std::istringstream is(read_file(dir / "header.txt"));
    std::string line;
    while (std::getline(is, line)) {
        auto eq = line.find('=');
        if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto need = [&](const std::string& k) -> const std::string& {
        auto it = kv.find(k);
        if (it == kv.end()) throw std::runtime_error("corpus header: missing key " + k);
        return it->second;
    };
    if (need("version") != "1") throw std::runtime_error("corpus header: unsupported version " + need("version"));

    CorpusBundle b;
    b.cfg.num_actions = std::stoi(need("num_actions"));
    b.cfg.num_subjects = std::stoi(need("num_subjects"));
    b.cfg.num_backgrounds = std::stoi(need("num_backgrounds"));
    b.cfg.per_cell = std::stoi(need("per_cell"));
    b.cfg.exemplar_action = std::stoi(need("exemplar_action"));
    b.cfg.exemplar_count = std::stoi(need("exemplar_count"));
    b.cfg.heldout_subjects = split_ints(need("heldout_subjects"));
    b.cfg.vary_exemplar_background = need("vary_exemplar_background") == "1";
    b.cfg.jitter_scale = std::stod(need("jitter_scale"));
    b.cfg.seed = std::stoull(need("seed"));
    b.heldout_subjects = b.cfg.heldout_subjects;
    b.exemplar_subjects = exemplar_subject_pool(b.cfg);

    std::vector<fs::path> files, exfiles;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".f64") files.push_back(e.path());
    for (const auto& e : fs::directory_iterator(dir / "exemplars"))
        if (e.is_regular_file() && e.path().extension() == ".f64") exfiles.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::sort(exfiles.begin(), exfiles.end());
    for (const auto& f : files) b.pretrain.push_back(item_from_filename(f.filename().string(), b.cfg.jitter_scale, f));
    for (const auto& f : exfiles)
        b.exemplars.push_back(item_from_filename(f.filename().string(), b.cfg.jitter_scale, f));
    if (b.pretrain.empty()) throw std::runtime_error("corpus: no pretrain samples found in " + dir.string());
    if (b.exemplars.empty()) throw std::runtime_error("corpus: no exemplar samples found in " + dir.string());
    return b;
}

SampleTriple make_triple(const CorpusItem& anchor, const std::vector<CorpusItem>& exemplars,
                         const DataConfig& cfg, Rng& rng) {
    // context-different candidates: same action, different context
    std::vector<size_t> candidates;
    for (size_t i = 0; i < exemplars.size(); ++i) {
        const auto& e = exemplars[i];
        if (e.scene.action.action_id != anchor.scene.action.action_id) continue;
        if (e.scene.context == anchor.scene.context && e.sample_seed == anchor.sample_seed) continue;
        candidates.push_back(i);
    }
    if (candidates.empty())
        throw std::invalid_argument("make_triple: corpus has " + std::to_string(exemplars.size()) +
                                    " exemplars but no second context for action " +
                                    std::to_string(anchor.scene.action.action_id));
    if (cfg.num_actions < 2) throw std::invalid_argument("make_triple: need >= 2 actions, have 1");

    SampleTriple t;
    t.anchor = anchor;
    t.context_diff = exemplars[candidates[rng.below(candidates.size())]];

    // action-different partner: anchor's context, fresh jitter, another action
    int other = static_cast<int>(rng.below(static_cast<uint64_t>(cfg.num_actions - 1)));
    if (other >= anchor.scene.action.action_id) ++other;
    Scene s;
    s.action = action_archetype(other, cfg.jitter_scale);
    s.context = anchor.scene.context;
    s.jitter_seed = rng.next_u64();
    t.action_diff.scene = s;
    t.action_diff.sample_seed = s.jitter_seed;
    t.action_diff.image = render(s);

    t.anchor_prompt = prompt_for(anchor.scene.context.subject_id, anchor.scene.context.background_id);
    return t;
}

}  // namespace adi
