#include "adi/bench.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace adi {

namespace {

// Wilson 95% interval
void binomial_ci(int successes, int n, double& lo, double& hi) {
    if (n == 0) {
        lo = hi = 0;
        return;
    }
    const double z = 1.959963984540054;
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    lo = std::max(0.0, center - half);
    hi = std::min(1.0, center + half);
}

}  // namespace

Metrics run_bench(const Models& m, const ParamSet& idents, const BenchSpec& spec, const ProbeParams& probe) {
    if (!probe.gated) throw std::invalid_argument("run_bench: probe has not passed its gate");
    if (spec.eval_subjects.empty()) throw std::invalid_argument("run_bench: no eval subjects");
    for (int s : spec.eval_subjects)
        if (std::find(spec.exemplar_subjects.begin(), spec.exemplar_subjects.end(), s) !=
            spec.exemplar_subjects.end())
            throw std::invalid_argument("run_bench: eval subject " + std::to_string(s) +
                                        " also appears in the exemplar set");

    const Array y_null = encode_null_cond(m);
    int n = 0, ok_a = 0, ok_s = 0, ok_t = 0, leaks = 0;
    for (size_t si = 0; si < spec.eval_subjects.size(); ++si) {
        const int subject = spec.eval_subjects[si];
        for (int k = 0; k < spec.samples_per_pair; ++k) {
            const int background = static_cast<int>((si + static_cast<size_t>(k)) % static_cast<size_t>(spec.num_backgrounds));
            Prompt prompt = prompt_for(subject, background);
            auto y_cond = encode_cond(m, prompt, &idents);
            const uint64_t seed = mix_seed(spec.seed, static_cast<uint64_t>(subject), static_cast<uint64_t>(k));
            Array img = ddim_sample(m, y_cond, y_null, spec.sample, seed);
            auto [pa, ps] = probe_predict(probe, img);
            const bool a_ok = pa == spec.action_id;
            const bool s_ok = ps == subject;
            ok_a += a_ok;
            ok_s += s_ok;
            ok_t += a_ok && s_ok;
            if (!s_ok && std::find(spec.exemplar_subjects.begin(), spec.exemplar_subjects.end(), ps) !=
                             spec.exemplar_subjects.end())
                ++leaks;
            ++n;
        }
    }
    Metrics out;
    out.n = n;
    out.action_acc = static_cast<double>(ok_a) / n;
    out.subject_acc = static_cast<double>(ok_s) / n;
    out.total_acc = static_cast<double>(ok_t) / n;
    out.context_leak = static_cast<double>(leaks) / n;
    binomial_ci(ok_t, n, out.ci_low, out.ci_high);
    return out;
}

std::vector<SweepRow> sweep(const Models& m, const CorpusBundle& corpus, const ProbeParams& probe,
                            const std::vector<SweepCell>& cells, const InversionConfig& icfg,
                            const BenchSpec& bench_spec, const std::string& config_hash) {
    std::vector<SweepRow> rows;
    for (const auto& cell : cells) {
        InversionResult inv = invert(m, corpus.exemplars, corpus.cfg, cell.mask, icfg);
        Metrics metrics = run_bench(m, inv.identifiers, bench_spec, probe);
        metrics.overlap_rate = inv.overlap_rate;
        SweepRow row;
        row.config_hash = config_hash;
        row.strategy = cell.label.empty() ? strategy_name(cell.mask.strategy) : cell.label;
        row.beta = cell.mask.beta;
        row.merge = merge_name(cell.mask.merge);
        row.metrics = metrics;
        rows.push_back(std::move(row));
    }
    return rows;
}

GateResult pretrain_gate(const Models& m, const ProbeParams& probe, const std::vector<int>& subjects,
                         int num_backgrounds, const SampleConfig& sample, uint64_t seed, int samples_per_pair) {
    if (!probe.gated) throw std::invalid_argument("pretrain_gate: probe has not passed its gate");
    const Array y_null = encode_null_cond(m);
    GateResult out;
    int ok = 0;
    for (int a = 0; a < kNumActions; ++a)
        for (size_t si = 0; si < subjects.size(); ++si)
            for (int k = 0; k < samples_per_pair; ++k) {
                const int bg = static_cast<int>((static_cast<size_t>(a) + si + static_cast<size_t>(k)) %
                                                static_cast<size_t>(num_backgrounds));
                Prompt p = prompt_for(subjects[si], bg);
                auto y_cond = encode_cond_action(m, p, a);
                const uint64_t s = mix_seed(seed, static_cast<uint64_t>(a * 64 + subjects[si]),
                                            static_cast<uint64_t>(k));
                Array img = ddim_sample(m, y_cond, y_null, sample, s);
                auto [pa, ps] = probe_predict(probe, img);
                (void)ps;
                ok += pa == a;
                ++out.n;
            }
    out.action_acc = static_cast<double>(ok) / out.n;
    return out;
}

std::string metrics_csv_header() {
    return "config_hash,strategy,beta,merge,action_acc,subject_acc,total_acc,context_leak,overlap_rate,ci_low,ci_high";
}

std::string metrics_csv_row(const SweepRow& row) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(6);
    os << row.config_hash << "," << row.strategy << "," << row.beta << "," << row.merge << ","
       << row.metrics.action_acc << "," << row.metrics.subject_acc << "," << row.metrics.total_acc << ","
       << row.metrics.context_leak << "," << row.metrics.overlap_rate << "," << row.metrics.ci_low << ","
       << row.metrics.ci_high;
    return os.str();
}

}  // namespace adi
