#pragma once

#include "adi/bench.hpp"
#include "adi/corpus.hpp"
#include "adi/diffusion.hpp"
#include "adi/invert.hpp"
#include "adi/probe.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace adi {

// Flat key=value configuration with dotted section prefixes. The canonical
// serialization (fixed key order, %.17g numbers) defines config_hash.
struct RunConfig {
    uint64_t master_seed = 1;

    DataConfig data;
    DenoiserConfig model;
    int model_T = 100;
    PretrainConfig pretrain;
    double pretrain_gate_accuracy = 0.9;
    ProbeConfig probe;
    InversionConfig invert;
    MaskingConfig mask;

    int bench_samples_per_pair = 4;
    int bench_sample_steps = 50;
    double bench_guidance = 7.5;

    std::vector<double> sweep_betas = {0.2, 0.4, 0.6, 0.8};
    std::vector<std::string> sweep_strategies = {"adi", "uniform", "random", "min",
                                                 "max", "reversed-adi", "none"};
    std::vector<std::string> sweep_merges = {"intersection", "union"};

    // Derived seeds: every module stream is a fixed function of master_seed.
    void derive_seeds();

    std::string serialize() const;
    std::string hash() const;  // 16 hex chars, FNV-1a64 of serialize()

    static RunConfig parse(const std::string& text);
    static RunConfig load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

}  // namespace adi
