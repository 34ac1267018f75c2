#pragma once

#include "adi/corpus.hpp"
#include "adi/tape.hpp"

#include <array>
#include <string>
#include <vector>

namespace adi {

// Frozen two-head pixel classifier standing in for the human evaluators:
// action head (8-way) and subject head (12-way) over raw 3x32x32 pixels.
struct ProbeParams {
    ParamSet params;
    int num_actions = kNumActions;
    int num_subjects = 12;
    bool gated = false;  // set once the held-out gate passed
};

struct ProbeConfig {
    int steps = 1000;
    int batch = 48;
    double lr = 1.2e-3;
    double weight_decay = 1e-4;
    int train_seeds_per_cell = 3;  // jitter draws per (action, subject, background)
    int heldout_seeds_per_cell = 1;
    double gate_accuracy = 0.99;
    uint64_t seed = 23;
    int num_subjects = 12;
    int num_backgrounds = 6;
    double jitter_scale = kDefaultJitterScale;
};

struct ProbeGateReport {
    double train_action_acc = 0, train_subject_acc = 0;
    double heldout_action_acc = 0, heldout_subject_acc = 0;
    std::vector<std::vector<int>> action_confusion;  // heldout, [true][pred]
    std::vector<std::vector<int>> subject_confusion;
    bool passed = false;
    std::string summary() const;
};

// Trains on fresh labeled renders (probe stream seeds, disjoint from every
// corpus/generated image) and applies the 99% held-out gate. Throws on gate
// failure with the confusion matrices in the message.
ProbeParams train_probe(const ProbeConfig& cfg, ProbeGateReport* report = nullptr);

// argmax predictions (action_id, subject_id) for one {3,32,32} image.
std::pair<int, int> probe_predict(const ProbeParams& probe, const Array& image);

// Accuracy of the probe on an arbitrary labeled set; used by the pretrain gate.
struct LabeledImage {
    Array image;
    int action_id = 0;
    int subject_id = 0;
};
std::pair<double, double> probe_accuracy(const ProbeParams& probe, const std::vector<LabeledImage>& items);

}  // namespace adi
