// Experiment runner: gen-data | pretrain | invert | sample | bench | sweep | report
//
// Every subcommand reads a flat key=value config (--config), derives all
// module seeds from master_seed (--seed overrides), and works inside one run
// directory (--out). Artifacts are written atomically; downstream commands
// refuse to run on missing or ungated upstream artifacts.

#include <CLI11.hpp>

#include "adi/bench.hpp"
#include "adi/checkpoint.hpp"
#include "adi/config.hpp"
#include "adi/invert.hpp"
#include "adi/io.hpp"
#include "adi/report.hpp"

#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace adi;

namespace {

int log_level() {
    const char* env = std::getenv("ADI_LOG");
    if (!env) return 1;
    std::string v = env;
    if (v == "error") return 0;
    if (v == "debug") return 2;
    return 1;
}

void log_info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << "[adi] " << msg << "\n";
}

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "runs/default";
    std::optional<uint64_t> seed;
    bool strict = false;
};

RunConfig load_config(const CommonArgs& args) {
    RunConfig cfg = args.config_path.empty() ? RunConfig{} : RunConfig::load(args.config_path);
    if (args.seed) cfg.master_seed = *args.seed;
    cfg.derive_seeds();
    fs::create_directories(args.out_dir);
    cfg.save(fs::path(args.out_dir) / "config.cfg");
    return cfg;
}

std::map<std::string, std::string> read_kv(const fs::path& path) {
    std::map<std::string, std::string> kv;
    std::istringstream is(read_file(path));
    std::string line;
    while (std::getline(is, line)) {
        auto eq = line.find('=');
        if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

Models models_from_checkpoint(const fs::path& path, const RunConfig& cfg) {
    Models m;
    m.params = load_checkpoint(path);
    m.sched = NoiseSchedule::linear(cfg.model_T);
    m.te_cfg.vocab = m.params.at("te.embed").shape[0];
    m.te_cfg.dim = m.params.at("te.embed").shape[1];
    m.dn_cfg.c0 = m.params.at("dn.in.w").shape[0];
    m.dn_cfg.c1 = m.params.at("dn.d1.w").shape[0];
    m.dn_cfg.c2 = m.params.at("dn.d2.w").shape[0];
    m.dn_cfg.cond_dim = m.te_cfg.dim;
    m.dn_cfg.time_dim = m.params.at("dn.temb.l1.w").shape[0];
    return m;
}

void require(bool cond, const std::string& what) {
    if (!cond) {
        std::cerr << "error: " << what << "\n";
        std::exit(1);
    }
}

Models load_gated_models(const fs::path& out, const RunConfig& cfg) {
    const fs::path ckpt = out / "pretrain" / "model.ckpt";
    const fs::path gate = out / "pretrain" / "gate.txt";
    require(fs::exists(ckpt), "missing pretrain checkpoint " + ckpt.string() + " (run `pretrain` first)");
    require(fs::exists(gate), "missing gate record " + gate.string() + " (run `pretrain` first)");
    auto kv = read_kv(gate);
    require(kv.count("pretrain_gate") && kv["pretrain_gate"] == "passed",
            "pretrain checkpoint is not gated (gate.txt says '" + kv["pretrain_gate"] + "')");
    return models_from_checkpoint(ckpt, cfg);
}

ProbeParams load_gated_probe(const fs::path& out) {
    const fs::path ckpt = out / "pretrain" / "probe.ckpt";
    const fs::path gate = out / "pretrain" / "gate.txt";
    require(fs::exists(ckpt), "missing probe checkpoint " + ckpt.string() + " (run `pretrain` first)");
    auto kv = read_kv(gate);
    require(kv.count("probe_gate") && kv["probe_gate"] == "passed", "probe is not gated");
    ProbeParams probe;
    probe.params = load_checkpoint(ckpt);
    probe.num_actions = kNumActions;
    probe.num_subjects = static_cast<int>(probe.params.at("pb.hs.b").shape[1]);
    probe.gated = true;
    return probe;
}

BenchSpec bench_spec_from(const RunConfig& cfg, const CorpusBundle& corpus) {
    BenchSpec spec;
    spec.action_id = corpus.cfg.exemplar_action;
    spec.eval_subjects = corpus.heldout_subjects;
    spec.exemplar_subjects = corpus.exemplar_subjects;
    spec.num_backgrounds = corpus.cfg.num_backgrounds;
    spec.samples_per_pair = cfg.bench_samples_per_pair;
    spec.sample.steps = cfg.bench_sample_steps;
    spec.sample.guidance_scale = cfg.bench_guidance;
    spec.seed = mix_seed(cfg.master_seed, 5);
    return spec;
}

std::string invert_label(const MaskingConfig& mc, bool tie_layers) {
    std::ostringstream os;
    os << strategy_name(mc.strategy);
    if (tie_layers) os << "-single";
    os.setf(std::ios::fixed);
    os.precision(2);
    os << "_b" << mc.beta << "_" << merge_name(mc.merge);
    return os.str();
}

void write_loss_csv(const fs::path& path, const std::vector<int>& steps, const std::vector<double>& losses) {
    std::ostringstream os;
    os << "step,loss\n";
    os.setf(std::ios::fixed);
    os.precision(8);
    for (size_t i = 0; i < steps.size(); ++i) os << steps[i] << "," << losses[i] << "\n";
    atomic_write(path, os.str());
}

void run_inversion(const fs::path& out, const RunConfig& cfg, const Models& models,
                   const CorpusBundle& corpus, const MaskingConfig& mc, const std::string& label) {
    InversionResult res = invert(models, corpus.exemplars, corpus.cfg, mc, cfg.invert);
    require(!res.failed, "inversion skipped " + std::to_string(res.skipped_steps) +
                             " steps (> allowed fraction); run marked failed");
    const fs::path dir = out / "invert" / label;
    fs::create_directories(dir);
    save_checkpoint(dir / "identifiers.ckpt", res.identifiers);
    save_mask_history(dir / "mask_history.txt", res.history);
    write_loss_csv(dir / "loss_curve.csv", res.loss_steps, res.loss_curve);
    std::ostringstream meta;
    meta << "strategy=" << strategy_name(mc.strategy) << "\n";
    meta << "beta=" << mc.beta << "\n";
    meta << "merge=" << merge_name(mc.merge) << "\n";
    meta << "tie_layers=" << (cfg.invert.tie_layers ? 1 : 0) << "\n";
    meta << "overlap_rate=" << res.overlap_rate << "\n";
    meta << "skipped_steps=" << res.skipped_steps << "\n";
    atomic_write(dir / "meta.txt", meta.str());
    log_info("inversion '" + label + "' done, overlap_rate=" + std::to_string(res.overlap_rate));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"action-identifier inversion lab"};
    app.require_subcommand(1);

    CommonArgs args;
    app.add_option("--config", args.config_path, "key=value config file");
    app.add_option("--seed", args.seed, "override master_seed");
    app.add_option("--out", args.out_dir, "run directory");
    app.add_flag("--strict", args.strict, "abort on any non-finite intermediate");

    auto* cmd_gen = app.add_subcommand("gen-data", "render corpora and exemplars");
    auto* cmd_pre = app.add_subcommand("pretrain", "train the toy diffusion model and gate it");
    auto* cmd_inv = app.add_subcommand("invert", "learn layer-wise identifiers from exemplars");
    std::string inv_label;
    cmd_inv->add_option("--label", inv_label, "run label (default: strategy_beta_merge)");
    auto* cmd_sample = app.add_subcommand("sample", "draw images from the model");
    int sample_subject = 0, sample_background = 0, sample_action = -1, sample_count = 1;
    std::string sample_idents;
    cmd_sample->add_option("--subject", sample_subject, "subject id");
    cmd_sample->add_option("--background", sample_background, "background id");
    cmd_sample->add_option("--action", sample_action, "condition on an action word");
    cmd_sample->add_option("--idents", sample_idents, "identifiers checkpoint (fills the action slot)");
    cmd_sample->add_option("--count", sample_count, "number of samples");
    auto* cmd_bench = app.add_subcommand("bench", "score one identifier set on the benchmark");
    std::string bench_label;
    cmd_bench->add_option("--label", bench_label, "inversion run label to score");
    auto* cmd_sweep = app.add_subcommand("sweep", "strategy/beta/merge grids with shared seeds");
    auto* cmd_report = app.add_subcommand("report", "render sweep CSV into SVG charts");

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = load_config(args);
        const fs::path out = args.out_dir;

        if (cmd_gen->parsed()) {
            CorpusBundle bundle = build_corpora(cfg.data);
            save_corpus(out / "corpus", bundle);
            log_info("corpus: " + std::to_string(bundle.pretrain.size()) + " pretrain samples, " +
                     std::to_string(bundle.exemplars.size()) + " exemplars -> " + (out / "corpus").string());
            return 0;
        }

        if (cmd_pre->parsed()) {
            require(fs::exists(out / "corpus" / "header.txt"), "missing corpus (run `gen-data` first)");
            CorpusBundle corpus = load_corpus(out / "corpus");

            log_info("training probe...");
            ProbeGateReport probe_rep;
            ProbeParams probe = train_probe(cfg.probe, &probe_rep);
            log_info("probe heldout acc: action " + std::to_string(probe_rep.heldout_action_acc) + ", subject " +
                     std::to_string(probe_rep.heldout_subject_acc));

            log_info("pretraining diffusion model (" + std::to_string(cfg.pretrain.steps) + " steps)...");
            Models models = init_models(mix_seed(cfg.master_seed, 6), cfg.model, TextEncoderConfig{}, cfg.model_T);
            PretrainResult pres = pretrain(models, corpus.pretrain, cfg.pretrain);

            SampleConfig sc{cfg.bench_sample_steps, cfg.bench_guidance};
            std::vector<int> gate_subjects(corpus.exemplar_subjects.begin(),
                                           corpus.exemplar_subjects.begin() +
                                               std::min<size_t>(4, corpus.exemplar_subjects.size()));
            GateResult gate = pretrain_gate(models, probe, gate_subjects, corpus.cfg.num_backgrounds, sc,
                                            mix_seed(cfg.master_seed, 7));
            log_info("pretrain gate: action acc " + std::to_string(gate.action_acc) + " over " +
                     std::to_string(gate.n) + " samples (threshold " + std::to_string(cfg.pretrain_gate_accuracy) + ")");

            fs::create_directories(out / "pretrain");
            write_loss_csv(out / "pretrain" / "loss_curve.csv", pres.loss_steps, pres.loss_curve);
            std::ostringstream g;
            g << "probe_gate=passed\n";
            g << "probe_heldout_action_acc=" << probe_rep.heldout_action_acc << "\n";
            g << "probe_heldout_subject_acc=" << probe_rep.heldout_subject_acc << "\n";
            g << "pretrain_action_acc=" << gate.action_acc << "\n";
            g << "pretrain_gate_threshold=" << cfg.pretrain_gate_accuracy << "\n";
            save_checkpoint(out / "pretrain" / "probe.ckpt", probe.params);
            if (gate.action_acc >= cfg.pretrain_gate_accuracy) {
                g << "pretrain_gate=passed\n";
                save_checkpoint(out / "pretrain" / "model.ckpt", models.params);
                atomic_write(out / "pretrain" / "gate.txt", g.str());
            } else {
                g << "pretrain_gate=failed\n";
                atomic_write(out / "pretrain" / "gate.txt", g.str());
                std::cerr << "error: pretrain gate failed, measured action accuracy " << gate.action_acc
            << " < " << cfg.pretrain_gate_accuracy << "; checkpoint rejected\n";
                return 1;
            }
            return 0;
        }

        if (cmd_inv->parsed()) {
            require(fs::exists(out / "corpus" / "header.txt"), "missing corpus (run `gen-data` first)");
            CorpusBundle corpus = load_corpus(out / "corpus");
            Models models = load_gated_models(out, cfg);
            const std::string label = inv_label.empty() ? invert_label(cfg.mask, cfg.invert.tie_layers) : inv_label;
            run_inversion(out, cfg, models, corpus, cfg.mask, label);
            return 0;
        }

        if (cmd_sample->parsed()) {
            Models models = load_gated_models(out, cfg);
            Prompt prompt = prompt_for(sample_subject, sample_background);
            const Array y_null = encode_null_cond(models);
            std::array<Array, kCondLayers> y_cond;
            std::string tag;
            if (!sample_idents.empty()) {
                ParamSet idents = load_checkpoint(sample_idents);
                y_cond = encode_cond(models, prompt, &idents);
                tag = "idents";
            } else {
                require(sample_action >= 0 && sample_action < kNumActions,
                        "sample: pass --action (0..7) or --idents PATH");
                y_cond = encode_cond_action(models, prompt, sample_action);
                tag = "a" + std::to_string(sample_action);
            }
            SampleConfig sc{cfg.bench_sample_steps, cfg.bench_guidance};
            fs::create_directories(out / "samples");
            for (int k = 0; k < sample_count; ++k) {
                Array img = ddim_sample(models, y_cond, y_null, sc, mix_seed(cfg.master_seed, 8, static_cast<uint64_t>(k)));
                std::string name = "s" + std::to_string(sample_subject) + "_" + tag + "_b" +
                                   std::to_string(sample_background) + "_" + std::to_string(k);
                write_f64_blob(out / "samples" / (name + ".f64"), img);
                write_ppm(out / "samples" / (name + ".ppm"), img);
            }
            log_info("wrote " + std::to_string(sample_count) + " samples to " + (out / "samples").string());
            return 0;
        }

        if (cmd_bench->parsed()) {
            require(fs::exists(out / "corpus" / "header.txt"), "missing corpus (run `gen-data` first)");
            CorpusBundle corpus = load_corpus(out / "corpus");
            Models models = load_gated_models(out, cfg);
            ProbeParams probe = load_gated_probe(out);
            const std::string label = bench_label.empty() ? invert_label(cfg.mask, cfg.invert.tie_layers) : bench_label;
            const fs::path inv_dir = out / "invert" / label;
            require(fs::exists(inv_dir / "identifiers.ckpt"),
                    "missing identifiers " + (inv_dir / "identifiers.ckpt").string() + " (run `invert` first)");
            ParamSet idents = load_checkpoint(inv_dir / "identifiers.ckpt");
            BenchSpec spec = bench_spec_from(cfg, corpus);
            Metrics metrics = run_bench(models, idents, spec, probe);
            auto meta = read_kv(inv_dir / "meta.txt");
            if (meta.count("overlap_rate")) metrics.overlap_rate = std::stod(meta["overlap_rate"]);
            SweepRow row{cfg.hash(), strategy_name(cfg.mask.strategy), cfg.mask.beta, merge_name(cfg.mask.merge),
                         metrics};
            atomic_write(out / "bench.csv", metrics_csv_header() + "\n" + metrics_csv_row(row) + "\n");
            std::cout << metrics_csv_header() << "\n" << metrics_csv_row(row) << "\n";
            return 0;
        }

        if (cmd_sweep->parsed()) {
            require(fs::exists(out / "corpus" / "header.txt"), "missing corpus (run `gen-data` first)");
            CorpusBundle corpus = load_corpus(out / "corpus");
            Models models = load_gated_models(out, cfg);
            ProbeParams probe = load_gated_probe(out);
            BenchSpec spec = bench_spec_from(cfg, corpus);

            std::vector<SweepCell> cells;
            // strategy grid at the default beta/merge
            for (const auto& s : cfg.sweep_strategies) {
                MaskingConfig mc = cfg.mask;
                mc.strategy = strategy_from_name(s);
                cells.push_back({mc, ""});
            }
            // beta grid for the adi strategy
            for (double b : cfg.sweep_betas) {
                if (b == cfg.mask.beta) continue;  // covered by the strategy grid
                MaskingConfig mc = cfg.mask;
                mc.strategy = MaskStrategy::Adi;
                mc.beta = b;
                cells.push_back({mc, ""});
            }
            // merge grid
            for (const auto& mg : cfg.sweep_merges) {
                if (merge_from_name(mg) == cfg.mask.merge) continue;
                MaskingConfig mc = cfg.mask;
                mc.strategy = MaskStrategy::Adi;
                mc.merge = merge_from_name(mg);
                cells.push_back({mc, ""});
            }
            log_info("sweep: " + std::to_string(cells.size()) + " cells");
            std::vector<SweepRow> rows = sweep(models, corpus, probe, cells, cfg.invert, spec, cfg.hash());
            std::string csv = metrics_csv_header() + "\n";
            for (const auto& r : rows) csv += metrics_csv_row(r) + "\n";
            atomic_write(out / "sweep.csv", csv);
            std::cout << csv;
            return 0;
        }

        if (cmd_report->parsed()) {
            require(fs::exists(out / "sweep.csv"), "missing sweep.csv (run `sweep` first)");
            auto written = render_report(out / "sweep.csv", out / "report");
            for (const auto& p : written) log_info("wrote " + p.string());
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
