#include "adi/scene.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace adi {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Limb lengths in figure units.
constexpr double kTorso = 1.0;
constexpr double kNeck = 0.16;
constexpr double kHeadR = 0.30;
constexpr double kUpperArm = 0.55;
constexpr double kForearm = 0.50;
constexpr double kThigh = 0.62;
constexpr double kShin = 0.56;

constexpr double kUnitPx = 7.0;  // pixels per figure unit at scale 1

struct Vec2 {
    double x = 0, y = 0;
};

Vec2 step(Vec2 p, double angle, double len) {
    // angle 0 points up (toward smaller y later; we keep y-up here and flip at raster time)
    return {p.x + std::sin(angle) * len, p.y + std::cos(angle) * len};
}

struct Segment {
    Vec2 a, b;
};

struct Figure {
    std::vector<Segment> segments;  // limbs + torso
    Vec2 head_center;
    double head_radius = kHeadR;
};

Figure build_figure(const std::vector<double>& ang) {
    Figure f;
    Vec2 pelvis{0, 0};
    Vec2 neck = step(pelvis, ang[0], kTorso);
    Vec2 head = step(neck, ang[0], kNeck + kHeadR);
    f.segments.push_back({pelvis, neck});
    f.head_center = head;
    Vec2 l_elbow = step(neck, ang[1], kUpperArm);
    f.segments.push_back({neck, l_elbow});
    f.segments.push_back({l_elbow, step(l_elbow, ang[2], kForearm)});
    Vec2 r_elbow = step(neck, ang[3], kUpperArm);
    f.segments.push_back({neck, r_elbow});
    f.segments.push_back({r_elbow, step(r_elbow, ang[4], kForearm)});
    Vec2 l_knee = step(pelvis, ang[5], kThigh);
    f.segments.push_back({pelvis, l_knee});
    f.segments.push_back({l_knee, step(l_knee, ang[6], kShin)});
    Vec2 r_knee = step(pelvis, ang[7], kThigh);
    f.segments.push_back({pelvis, r_knee});
    f.segments.push_back({r_knee, step(r_knee, ang[8], kShin)});
    return f;
}

double dist_to_segment(double px, double py, const Segment& s) {
    const double vx = s.b.x - s.a.x, vy = s.b.y - s.a.y;
    const double wx = px - s.a.x, wy = py - s.a.y;
    const double vv = vx * vx + vy * vy;
    double t = vv > 0 ? (wx * vx + wy * vy) / vv : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = wx - t * vx, dy = wy - t * vy;
    return std::sqrt(dx * dx + dy * dy);
}

void hsv_to_rgb(double h, double s, double v, double rgb[3]) {
    h = h - std::floor(h);
    const double i = std::floor(h * 6.0);
    const double f = h * 6.0 - i;
    const double p = v * (1.0 - s);
    const double q = v * (1.0 - s * f);
    const double t = v * (1.0 - s * (1.0 - f));
    switch (static_cast<int>(i) % 6) {
        case 0: rgb[0] = v; rgb[1] = t; rgb[2] = p; break;
        case 1: rgb[0] = q; rgb[1] = v; rgb[2] = p; break;
        case 2: rgb[0] = p; rgb[1] = v; rgb[2] = t; break;
        case 3: rgb[0] = p; rgb[1] = q; rgb[2] = v; break;
        case 4: rgb[0] = t; rgb[1] = p; rgb[2] = v; break;
        default: rgb[0] = v; rgb[1] = p; rgb[2] = q; break;
    }
}

// head shape: 0 disk, 1 square, 2 diamond
int subject_head_shape(int subject_id) { return subject_id % 3; }

double subject_limb_radius(int subject_id) {  // pixels at scale 1
    return 0.85 + 0.18 * static_cast<double>(subject_id % 4);
}

void background_color(int background_id, double x, double y, double rgb[3]) {
    const double u = x / (kImageSize - 1.0);
    const double v = y / (kImageSize - 1.0);
    switch (background_id % 6) {
        case 0: rgb[0] = 0.13; rgb[1] = 0.14; rgb[2] = 0.17; break;
        case 1: rgb[0] = 0.84; rgb[1] = 0.82; rgb[2] = 0.78; break;
        case 2: {  // horizontal gradient
            double g = 0.2 + 0.55 * u;
            rgb[0] = g; rgb[1] = g * 0.95; rgb[2] = g * 1.02;
            break;
        }
        case 3: {  // vertical gradient
            double g = 0.72 - 0.5 * v;
            rgb[0] = g * 0.96; rgb[1] = g; rgb[2] = g * 0.92;
            break;
        }
        case 4: {  // diagonal stripes, 8 px period
            double s = std::fmod(x + y, 8.0) < 4.0 ? 0.30 : 0.55;
            rgb[0] = s; rgb[1] = s; rgb[2] = s * 1.08;
            break;
        }
        default: {  // checker, 8 px cells
            int cx = static_cast<int>(x) / 8, cy = static_cast<int>(y) / 8;
            double s = ((cx + cy) % 2 == 0) ? 0.62 : 0.38;
            rgb[0] = s; rgb[1] = s * 0.97; rgb[2] = s * 0.9;
            break;
        }
    }
}

const double kArchetypes[kNumActions][9] = {
    // torso  Lua    Lfa    Rua    Rfa    Lth    Lsh    Rth    Rsh
    {0.00, -2.80, -2.95, 2.80, 2.95, -2.92, -3.02, 2.92, 3.02},   // stand, arms at sides
    {0.00, -2.80, -2.95, 0.85, 0.62, -2.92, -3.02, 2.92, 3.02},   // one arm raised diagonally
    {0.00, -0.55, -0.30, 0.55, 0.30, -2.95, -3.05, 2.95, 3.05},   // both arms up
    {0.00, -1.57, -1.57, 1.57, 1.57, -2.95, -3.05, 2.95, 3.05},   // T pose
    {0.12, -2.25, -2.45, 2.25, 2.45, -1.70, -3.00, 1.70, 3.00},   // squat, knees out
    {0.00, -2.65, -2.80, 2.65, 2.80, 1.40, 2.62, 1.58, 2.80},     // sit, legs folded right
    {0.00, -2.30, -2.45, 2.30, 2.45, -1.72, 2.30, 1.72, -2.30},   // folded legs, crossed
    {3.14159, -3.05, -3.12, 3.05, 3.12, -0.85, -0.62, 0.85, 0.62} // straddle handstand
};

}  // namespace

ActionSpec action_archetype(int action_id, double jitter_scale) {
    if (action_id < 0 || action_id >= kNumActions)
        throw std::invalid_argument("action_archetype: action_id " + std::to_string(action_id) + " outside [0," +
                                    std::to_string(kNumActions) + ")");
    ActionSpec a;
    a.action_id = action_id;
    a.joint_angles.assign(kArchetypes[action_id], kArchetypes[action_id] + 9);
    a.jitter_scale = jitter_scale;
    return a;
}

double archetype_min_separation() {
    double best = 1e30;
    for (int i = 0; i < kNumActions; ++i)
        for (int j = i + 1; j < kNumActions; ++j) {
            double d2 = 0;
            for (int k = 0; k < 9; ++k) {
                double d = kArchetypes[i][k] - kArchetypes[j][k];
                d2 += d * d;
            }
            best = std::min(best, std::sqrt(d2));
        }
    return best;
}

ContextSpec make_context(int subject_id, int background_id, double dx, double dy, double scale) {
    if (subject_id < 0) throw std::invalid_argument("make_context: negative subject_id");
    if (background_id < 0) throw std::invalid_argument("make_context: negative background_id");
    if (std::abs(dx) > kMaxOffset || std::abs(dy) > kMaxOffset)
        throw std::invalid_argument("make_context: offset (" + std::to_string(dx) + "," + std::to_string(dy) +
                                    ") exceeds +-" + std::to_string(kMaxOffset) + " px; figure could clip the canvas");
    if (scale < kMinScale || scale > kMaxScale)
        throw std::invalid_argument("make_context: scale " + std::to_string(scale) + " outside [" +
                                    std::to_string(kMinScale) + "," + std::to_string(kMaxScale) + "]");
    ContextSpec c;
    c.subject_id = subject_id;
    c.background_id = background_id;
    c.dx = dx;
    c.dy = dy;
    c.scale = scale;
    return c;
}

Scene scene_from_factors(int action_id, int subject_id, int background_id, uint64_t sample_seed,
                         double jitter_scale) {
    Rng rng(mix_seed(sample_seed, 0x5ce7e));
    const double dx = rng.uniform_in(-1.0, 1.0);
    const double dy = rng.uniform_in(-1.0, 1.0);
    const double scale = rng.uniform_in(0.94, 1.06);
    Scene s;
    s.action = action_archetype(action_id, jitter_scale);
    s.context = make_context(subject_id, background_id, dx, dy, scale);
    s.jitter_seed = mix_seed(sample_seed, 0x71773e6);
    return s;
}

void subject_color(int subject_id, double rgb[3]) {
    const double hue = static_cast<double>(subject_id) / 12.0 + 0.03;
    const double sat = 0.80 - 0.10 * static_cast<double>(subject_id % 2);
    const double val = 0.92 - 0.08 * static_cast<double>((subject_id / 2) % 2);
    hsv_to_rgb(hue, sat, val, rgb);
}

Array render(const Scene& scene) {
    Rng jrng(scene.jitter_seed);
    std::vector<double> ang = scene.action.joint_angles;
    for (double& a : ang) {
        // truncated at 2.5 sigma so worst-case limb excursions stay bounded
        double j = jrng.gauss() * scene.action.jitter_scale;
        const double lim = 2.5 * scene.action.jitter_scale;
        a += std::clamp(j, -lim, lim);
    }
    // sub-pixel staging noise, present even within "same context" pairs
    const double jdx = jrng.uniform_in(-0.12, 0.12);
    const double jdy = jrng.uniform_in(-0.12, 0.12);

    Figure fig = build_figure(ang);

    // center on the unjittered archetype's bounding box so jitter wiggles the
    // limbs without translating the whole figure
    Figure base = build_figure(scene.action.joint_angles);
    double xmin = base.head_center.x - kHeadR, xmax = base.head_center.x + kHeadR;
    double ymin = base.head_center.y - kHeadR, ymax = base.head_center.y + kHeadR;
    for (const auto& s : base.segments) {
        xmin = std::min({xmin, s.a.x, s.b.x});
        xmax = std::max({xmax, s.a.x, s.b.x});
        ymin = std::min({ymin, s.a.y, s.b.y});
        ymax = std::max({ymax, s.a.y, s.b.y});
    }
    const double cx = 0.5 * (xmin + xmax), cy = 0.5 * (ymin + ymax);

    const double unit = kUnitPx * scene.context.scale;
    const double ox = (kImageSize - 1) * 0.5 + scene.context.dx + jdx;
    const double oy = (kImageSize - 1) * 0.5 + scene.context.dy + jdy;
    auto to_px = [&](Vec2 p) -> Vec2 {
        // y-up figure space to y-down raster space
        return {ox + (p.x - cx) * unit, oy - (p.y - cy) * unit};
    };

    std::vector<Segment> segs;
    segs.reserve(fig.segments.size());
    for (const auto& s : fig.segments) segs.push_back({to_px(s.a), to_px(s.b)});
    const Vec2 head = to_px(fig.head_center);
    const double head_r = fig.head_radius * unit;
    const double limb_r = subject_limb_radius(scene.context.subject_id) * scene.context.scale;
    const int head_shape = subject_head_shape(scene.context.subject_id);

    double body_rgb[3];
    subject_color(scene.context.subject_id, body_rgb);
    double head_rgb[3] = {std::min(1.0, body_rgb[0] * 1.25 + 0.08), std::min(1.0, body_rgb[1] * 1.25 + 0.08),
                          std::min(1.0, body_rgb[2] * 1.25 + 0.08)};

    Array img({kImageChannels, kImageSize, kImageSize});
    const double aa = 1.0;  // anti-alias falloff width in px
    for (int y = 0; y < kImageSize; ++y) {
        for (int x = 0; x < kImageSize; ++x) {
            const double px = x, py = y;
            double bg[3];
            background_color(scene.context.background_id, px, py, bg);

            double limb_alpha = 0.0;
            for (const auto& s : segs) {
                const double d = dist_to_segment(px, py, s) - limb_r;
                limb_alpha = std::max(limb_alpha, std::clamp(0.5 - d / aa, 0.0, 1.0));
            }
            double hx = px - head.x, hy = py - head.y;
            double hd;
            if (head_shape == 0) {
                hd = std::sqrt(hx * hx + hy * hy) - head_r;
            } else if (head_shape == 1) {
                hd = std::max(std::abs(hx), std::abs(hy)) - head_r * 0.92;
            } else {
                hd = (std::abs(hx) + std::abs(hy)) - head_r * 1.25;
            }
            const double head_alpha = std::clamp(0.5 - hd / aa, 0.0, 1.0);

            for (int c = 0; c < kImageChannels; ++c) {
                double v = bg[c];
                v = v * (1.0 - limb_alpha) + body_rgb[c] * limb_alpha;
                v = v * (1.0 - head_alpha) + head_rgb[c] * head_alpha;
                img.data[static_cast<size_t>((c * kImageSize + y) * kImageSize + x)] = std::clamp(v, 0.0, 1.0);
            }
        }
    }
    return img;
}

}  // namespace adi
