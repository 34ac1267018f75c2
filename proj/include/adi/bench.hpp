#pragma once

#include "adi/diffusion.hpp"
#include "adi/invert.hpp"
#include "adi/probe.hpp"

#include <string>
#include <vector>

namespace adi {

// Miniature benchmark: the learned action paired with held-out subjects.
struct BenchSpec {
    int action_id = 0;                // the action the identifiers were learned from
    std::vector<int> eval_subjects;   // held-out, disjoint from exemplar subjects
    std::vector<int> exemplar_subjects;  // for the context-leak metric
    int num_backgrounds = 6;
    int samples_per_pair = 4;
    SampleConfig sample;              // steps=50, guidance=7.5
    uint64_t seed = 1234;
};

struct Metrics {
    double action_acc = 0, subject_acc = 0, total_acc = 0;
    double context_leak = 0;   // probe subject = an exemplar subject instead of the prompted one
    double overlap_rate = 0;   // carried over from the inversion run
    double ci_low = 0, ci_high = 0;  // 95% binomial interval on total_acc
    int n = 0;
};

// Samples `samples_per_pair` images per (eval subject, learned action) pair
// with distinct seeds and scores them with the frozen probe. Requires a gated
// probe; deterministic in spec.seed.
Metrics run_bench(const Models& m, const ParamSet& idents, const BenchSpec& spec, const ProbeParams& probe);

// ---------------- sweep ----------------
struct SweepCell {
    MaskingConfig mask;
    std::string label;  // row label, defaults to the strategy name
};

struct SweepRow {
    std::string config_hash;
    std::string strategy;
    double beta = 0;
    std::string merge;
    Metrics metrics;
};

// Runs invert + bench per cell with identical seeds across cells, so row
// differences are attributable to the masking config alone.
std::vector<SweepRow> sweep(const Models& m, const CorpusBundle& corpus, const ProbeParams& probe,
                            const std::vector<SweepCell>& cells, const InversionConfig& icfg,
                            const BenchSpec& bench_spec, const std::string& config_hash);

std::string metrics_csv_header();
std::string metrics_csv_row(const SweepRow& row);

// Pretraining gate: DDIM samples of seen (action, subject) prompts scored by
// the probe's action head.
struct GateResult {
    double action_acc = 0;
    int n = 0;
};
GateResult pretrain_gate(const Models& m, const ProbeParams& probe, const std::vector<int>& subjects,
                         int num_backgrounds, const SampleConfig& sample, uint64_t seed,
                         int samples_per_pair = 2);

}  // namespace adi
