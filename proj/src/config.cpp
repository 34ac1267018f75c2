#include "adi/config.hpp"

#include "adi/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

namespace adi {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_doubles(const std::vector<double>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += fmt_double(v[i]);
    }
    return s;
}

std::string fmt_ints(const std::vector<int>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i]);
    }
    return s;
}

std::string fmt_strings(const std::vector<std::string>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += v[i];
    }
    return s;
}

std::vector<double> parse_doubles(const std::string& s) {
    std::vector<double> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ','))
        if (!tok.empty()) out.push_back(std::stod(tok));
    return out;
}

std::vector<int> parse_ints(const std::string& s) {
    std::vector<int> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ','))
        if (!tok.empty()) out.push_back(std::stoi(tok));
    return out;
}

std::vector<std::string> parse_strings(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ','))
        if (!tok.empty()) out.push_back(tok);
    return out;
}

bool parse_bool(const std::string& s) {
    if (s == "1" || s == "true") return true;
    if (s == "0" || s == "false") return false;
    throw std::invalid_argument("config: bad boolean value '" + s + "'");
}

}  // namespace

void RunConfig::derive_seeds() {
    data.seed = mix_seed(master_seed, 1);
    pretrain.seed = mix_seed(master_seed, 2);
    probe.seed = mix_seed(master_seed, 3);
    invert.seed = mix_seed(master_seed, 4);
    probe.num_subjects = data.num_subjects;
    probe.num_backgrounds = data.num_backgrounds;
    probe.jitter_scale = data.jitter_scale;
}

std::string RunConfig::serialize() const {
    std::ostringstream os;
    os << "master_seed=" << master_seed << "\n";
    os << "data.num_actions=" << data.num_actions << "\n";
    os << "data.num_subjects=" << data.num_subjects << "\n";
    os << "data.num_backgrounds=" << data.num_backgrounds << "\n";
    os << "data.per_cell=" << data.per_cell << "\n";
    os << "data.exemplar_action=" << data.exemplar_action << "\n";
    os << "data.exemplar_count=" << data.exemplar_count << "\n";
    os << "data.heldout_subjects=" << fmt_ints(data.heldout_subjects) << "\n";
    os << "data.vary_exemplar_background=" << (data.vary_exemplar_background ? 1 : 0) << "\n";
    os << "data.jitter_scale=" << fmt_double(data.jitter_scale) << "\n";
    os << "model.c0=" << model.c0 << "\n";
    os << "model.c1=" << model.c1 << "\n";
    os << "model.c2=" << model.c2 << "\n";
    os << "model.cond_dim=" << model.cond_dim << "\n";
    os << "model.time_dim=" << model.time_dim << "\n";
    os << "model.T=" << model_T << "\n";
    os << "pretrain.steps=" << pretrain.steps << "\n";
    os << "pretrain.batch=" << pretrain.batch << "\n";
    os << "pretrain.lr=" << fmt_double(pretrain.lr) << "\n";
    os << "pretrain.lr_final=" << fmt_double(pretrain.lr_final) << "\n";
    os << "pretrain.weight_decay=" << fmt_double(pretrain.weight_decay) << "\n";
    os << "pretrain.cond_dropout=" << fmt_double(pretrain.cond_dropout) << "\n";
    os << "pretrain.t_band_fraction=" << fmt_double(pretrain.t_band_fraction) << "\n";
    os << "pretrain.t_band_lo=" << pretrain.t_band_lo << "\n";
    os << "pretrain.t_band_hi=" << pretrain.t_band_hi << "\n";
    os << "pretrain.gate_accuracy=" << fmt_double(pretrain_gate_accuracy) << "\n";
    os << "probe.steps=" << probe.steps << "\n";
    os << "probe.batch=" << probe.batch << "\n";
    os << "probe.lr=" << fmt_double(probe.lr) << "\n";
    os << "probe.weight_decay=" << fmt_double(probe.weight_decay) << "\n";
    os << "probe.train_seeds_per_cell=" << probe.train_seeds_per_cell << "\n";
    os << "probe.heldout_seeds_per_cell=" << probe.heldout_seeds_per_cell << "\n";
    os << "probe.gate_accuracy=" << fmt_double(probe.gate_accuracy) << "\n";
    os << "invert.steps=" << invert.steps << "\n";
    os << "invert.lr=" << fmt_double(invert.lr) << "\n";
    os << "invert.weight_decay=" << fmt_double(invert.weight_decay) << "\n";
    os << "invert.decay_masked_channels=" << (invert.decay_masked_channels ? 1 : 0) << "\n";
    os << "invert.share_t_eps=" << (invert.share_t_eps ? 1 : 0) << "\n";
    os << "invert.tie_layers=" << (invert.tie_layers ? 1 : 0) << "\n";
    os << "invert.init_noise=" << fmt_double(invert.init_noise) << "\n";
    os << "invert.max_skip_fraction=" << fmt_double(invert.max_skip_fraction) << "\n";
    os << "mask.beta=" << fmt_double(mask.beta) << "\n";
    os << "mask.merge=" << merge_name(mask.merge) << "\n";
    os << "mask.strategy=" << strategy_name(mask.strategy) << "\n";
    os << "bench.samples_per_pair=" << bench_samples_per_pair << "\n";
    os << "bench.sample_steps=" << bench_sample_steps << "\n";
    os << "bench.guidance=" << fmt_double(bench_guidance) << "\n";
    os << "sweep.betas=" << fmt_doubles(sweep_betas) << "\n";
    os << "sweep.strategies=" << fmt_strings(sweep_strategies) << "\n";
    os << "sweep.merges=" << fmt_strings(sweep_merges) << "\n";
    return os.str();
}

std::string RunConfig::hash() const {
    const std::string s = serialize();
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
    return buf;
}

RunConfig RunConfig::parse(const std::string& text) {
    RunConfig cfg;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key=value, got '" +
                                        line + "'");
        const std::string k = line.substr(0, eq);
        const std::string v = line.substr(eq + 1);
        if (k == "master_seed") cfg.master_seed = std::stoull(v);
        else if (k == "data.num_actions") cfg.data.num_actions = std::stoi(v);
        else if (k == "data.num_subjects") cfg.data.num_subjects = std::stoi(v);
        else if (k == "data.num_backgrounds") cfg.data.num_backgrounds = std::stoi(v);
        else if (k == "data.per_cell") cfg.data.per_cell = std::stoi(v);
        else if (k == "data.exemplar_action") cfg.data.exemplar_action = std::stoi(v);
        else if (k == "data.exemplar_count") cfg.data.exemplar_count = std::stoi(v);
        else if (k == "data.heldout_subjects") cfg.data.heldout_subjects = parse_ints(v);
        else if (k == "data.vary_exemplar_background") cfg.data.vary_exemplar_background = parse_bool(v);
        else if (k == "data.jitter_scale") cfg.data.jitter_scale = std::stod(v);
        else if (k == "model.c0") cfg.model.c0 = std::stoll(v);
        else if (k == "model.c1") cfg.model.c1 = std::stoll(v);
        else if (k == "model.c2") cfg.model.c2 = std::stoll(v);
        else if (k == "model.cond_dim") cfg.model.cond_dim = std::stoll(v);
        else if (k == "model.time_dim") cfg.model.time_dim = std::stoll(v);
        else if (k == "model.T") cfg.model_T = std::stoi(v);
        else if (k == "pretrain.steps") cfg.pretrain.steps = std::stoi(v);
        else if (k == "pretrain.batch") cfg.pretrain.batch = std::stoi(v);
        else if (k == "pretrain.lr") cfg.pretrain.lr = std::stod(v);
        else if (k == "pretrain.lr_final") cfg.pretrain.lr_final = std::stod(v);
        else if (k == "pretrain.weight_decay") cfg.pretrain.weight_decay = std::stod(v);
        else if (k == "pretrain.cond_dropout") cfg.pretrain.cond_dropout = std::stod(v);
        else if (k == "pretrain.t_band_fraction") cfg.pretrain.t_band_fraction = std::stod(v);
        else if (k == "pretrain.t_band_lo") cfg.pretrain.t_band_lo = std::stoi(v);
        else if (k == "pretrain.t_band_hi") cfg.pretrain.t_band_hi = std::stoi(v);
        else if (k == "pretrain.gate_accuracy") cfg.pretrain_gate_accuracy = std::stod(v);
        else if (k == "probe.steps") cfg.probe.steps = std::stoi(v);
        else if (k == "probe.batch") cfg.probe.batch = std::stoi(v);
        else if (k == "probe.lr") cfg.probe.lr = std::stod(v);
        else if (k == "probe.weight_decay") cfg.probe.weight_decay = std::stod(v);
        else if (k == "probe.train_seeds_per_cell") cfg.probe.train_seeds_per_cell = std::stoi(v);
        else if (k == "probe.heldout_seeds_per_cell") cfg.probe.heldout_seeds_per_cell = std::stoi(v);
        else if (k == "probe.gate_accuracy") cfg.probe.gate_accuracy = std::stod(v);
        else if (k == "invert.steps") cfg.invert.steps = std::stoi(v);
        else if (k == "invert.lr") cfg.invert.lr = std::stod(v);
        else if (k == "invert.weight_decay") cfg.invert.weight_decay = std::stod(v);
        else if (k == "invert.decay_masked_channels") cfg.invert.decay_masked_channels = parse_bool(v);
        else if (k == "invert.share_t_eps") cfg.invert.share_t_eps = parse_bool(v);
        else if (k == "invert.tie_layers") cfg.invert.tie_layers = parse_bool(v);
        else if (k == "invert.init_noise") cfg.invert.init_noise = std::stod(v);
        else if (k == "invert.max_skip_fraction") cfg.invert.max_skip_fraction = std::stod(v);
        else if (k == "mask.beta") cfg.mask.beta = std::stod(v);
        else if (k == "mask.merge") cfg.mask.merge = merge_from_name(v);
        else if (k == "mask.strategy") cfg.mask.strategy = strategy_from_name(v);
        else if (k == "bench.samples_per_pair") cfg.bench_samples_per_pair = std::stoi(v);
        else if (k == "bench.sample_steps") cfg.bench_sample_steps = std::stoi(v);
        else if (k == "bench.guidance") cfg.bench_guidance = std::stod(v);
        else if (k == "sweep.betas") cfg.sweep_betas = parse_doubles(v);
        else if (k == "sweep.strategies") cfg.sweep_strategies = parse_strings(v);
        else if (k == "sweep.merges") cfg.sweep_merges = parse_strings(v);
        else throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown key '" + k + "'");
    }
    cfg.derive_seeds();
    return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) { return parse(read_file(path)); }

void RunConfig::save(const std::filesystem::path& path) const { atomic_write(path, serialize()); }

}  // namespace adi
