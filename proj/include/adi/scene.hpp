#pragma once

#include "adi/array.hpp"
#include "adi/rng.hpp"

#include <cstdint>
#include <vector>

namespace adi {

constexpr int kImageChannels = 3;
constexpr int kImageSize = 32;
constexpr int kNumActions = 8;
constexpr double kDefaultJitterScale = 0.045;  // radians

// Pose archetype: absolute limb directions in radians (0 = up, positive =
// clockwise). Order: torso, L upper arm, L forearm, R upper arm, R forearm,
// L thigh, L shin, R thigh, R shin.
struct ActionSpec {
    int action_id = 0;
    std::vector<double> joint_angles;
    double jitter_scale = kDefaultJitterScale;
};

// Subject style (head shape, limb thickness, body color) plus staging
// (background pattern, translation, size). Construction validates that the
// figure stays inside the canvas for every pose.
struct ContextSpec {
    int subject_id = 0;
    int background_id = 0;
    double dx = 0.0, dy = 0.0;  // pixels
    double scale = 1.0;

    bool same_identity(const ContextSpec& o) const {
        return subject_id == o.subject_id && background_id == o.background_id;
    }
    bool operator==(const ContextSpec& o) const {
        return same_identity(o) && dx == o.dx && dy == o.dy && scale == o.scale;
    }
};

struct Scene {
    ActionSpec action;
    ContextSpec context;
    uint64_t jitter_seed = 0;
};

ActionSpec action_archetype(int action_id, double jitter_scale = kDefaultJitterScale);

// Minimum pairwise L2 distance between the joint-angle vectors of the 8
// archetypes; the ActionSpec invariant requires this > 4 * jitter_scale.
double archetype_min_separation();

ContextSpec make_context(int subject_id, int background_id, double dx, double dy, double scale);

// Legal staging ranges enforced by make_context; sized so the tallest pose at
// the largest scale plus the worst jitter stays inside the canvas.
constexpr double kMaxOffset = 1.1;
constexpr double kMinScale = 0.9;
constexpr double kMaxScale = 1.07;

// Derives staging and jitter for one sample deterministically from its seed.
Scene scene_from_factors(int action_id, int subject_id, int background_id, uint64_t sample_seed,
                         double jitter_scale = kDefaultJitterScale);

// Anti-aliased render, pure in the scene fields. Returns {3, 32, 32} in [0,1].
Array render(const Scene& scene);

// Per-subject body color, exposed for inspection/tests.
void subject_color(int subject_id, double rgb[3]);

}  // namespace adi
