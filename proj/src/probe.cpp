#include "adi/probe.hpp"

#include "adi/optimizer.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace adi {

namespace {

constexpr int64_t kC1 = 12, kC2 = 24, kHidden = 64;

void init_probe_params(ParamSet& p, int num_actions, int num_subjects, Rng& rng) {
    auto conv_std = [](int64_t fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); };
    p.add_randn("pb.c1.w", {kC1, 9 * 3}, conv_std(27), rng);
    p.add("pb.c1.b", Array::zeros({1, kC1}));
    p.add_randn("pb.c2.w", {kC2, 9 * kC1}, conv_std(9 * kC1), rng);
    p.add("pb.c2.b", Array::zeros({1, kC2}));
    p.add_randn("pb.fc.w", {64 * kC2, kHidden}, conv_std(64 * kC2), rng);
    p.add("pb.fc.b", Array::zeros({1, kHidden}));
    p.add_randn("pb.ha.w", {kHidden, num_actions}, conv_std(kHidden), rng);
    p.add("pb.ha.b", Array::zeros({1, num_actions}));
    p.add_randn("pb.hs.w", {kHidden, num_subjects}, conv_std(kHidden), rng);
    p.add("pb.hs.b", Array::zeros({1, num_subjects}));
}

struct ProbeLogits {
    Var action, subject;
};

// position-major adapter local to the probe (images are {3,32,32})
Array to_pm(const Array& img) {
    const int64_t C = img.shape[0], H = img.shape[1], W = img.shape[2];
    Array out({H * W, C});
    for (int64_t c = 0; c < C; ++c)
        for (int64_t i = 0; i < H * W; ++i)
            out.data[static_cast<size_t>(i * C + c)] = img.data[static_cast<size_t>(c * H * W + i)];
    return out;
}

ProbeLogits forward(Tape& t, const Array& image) {
    Var x = t.leaf(to_pm(image));
    x = t.silu(t.add(t.conv2d(x, t.param("pb.c1.w"), 32, 32, 3, 2, 1), t.param("pb.c1.b")));  // {256, c1}
    x = t.silu(t.add(t.conv2d(x, t.param("pb.c2.w"), 16, 16, 3, 2, 1), t.param("pb.c2.b")));  // {64, c2}
    Var h = t.silu(t.add(t.matmul(t.reshape(x, {1, 64 * kC2}), t.param("pb.fc.w")), t.param("pb.fc.b")));
    ProbeLogits out;
    out.action = t.add(t.matmul(h, t.param("pb.ha.w")), t.param("pb.ha.b"));
    out.subject = t.add(t.matmul(h, t.param("pb.hs.w")), t.param("pb.hs.b"));
    return out;
}

Var nll(Tape& t, Var logits, int64_t target, int64_t num_classes) {
    Array onehot({1, num_classes});
    onehot.at(0, target) = 1.0;
    Var lp = t.log_op(t.softmax(logits, 1));
    return t.scale(t.sum(t.mul(lp, t.leaf(std::move(onehot)))), -1.0);
}

int argmax_row(const Array& a) {
    int best = 0;
    for (int64_t j = 1; j < a.numel(); ++j)
        if (a[j] > a[best]) best = static_cast<int>(j);
    return best;
}

}  // namespace

std::string ProbeGateReport::summary() const {
    std::ostringstream os;
    os << "probe gate " << (passed ? "PASSED" : "FAILED") << ": heldout action acc " << heldout_action_acc
       << ", subject acc " << heldout_subject_acc << "\n";
    auto dump = [&](const char* name, const std::vector<std::vector<int>>& cm) {
        os << name << " confusion (rows=true):\n";
        for (const auto& row : cm) {
            for (size_t j = 0; j < row.size(); ++j) os << (j ? " " : "") << row[j];
            os << "\n";
        }
    };
    if (!passed) {
        dump("action", action_confusion);
        dump("subject", subject_confusion);
    }
    return os.str();
}

ProbeParams train_probe(const ProbeConfig& cfg, ProbeGateReport* report) {
    ProbeParams probe;
    probe.num_actions = kNumActions;
    probe.num_subjects = cfg.num_subjects;
    Rng rng(mix_seed(cfg.seed, 0x9b0be));
    init_probe_params(probe.params, probe.num_actions, probe.num_subjects, rng);

    // labeled corpus: fresh renders over the full factor grid, train/heldout
    // split by jitter seed stream
    std::vector<LabeledImage> train, heldout;
    for (int a = 0; a < kNumActions; ++a)
        for (int s = 0; s < cfg.num_subjects; ++s)
            for (int g = 0; g < cfg.num_backgrounds; ++g) {
                for (int r = 0; r < cfg.train_seeds_per_cell; ++r) {
                    uint64_t seed = mix_seed(cfg.seed, 0x77aa00 + static_cast<uint64_t>(((a * 16 + s) * 8 + g) * 64 + r));
                    Scene sc = scene_from_factors(a, s, g, seed, cfg.jitter_scale);
                    train.push_back({render(sc), a, s});
                }
                for (int r = 0; r < cfg.heldout_seeds_per_cell; ++r) {
                    uint64_t seed = mix_seed(cfg.seed, 0xcc5500 + static_cast<uint64_t>(((a * 16 + s) * 8 + g) * 64 + r));
                    Scene sc = scene_from_factors(a, s, g, seed, cfg.jitter_scale);
                    heldout.push_back({render(sc), a, s});
                }
            }

    AdamW opt({cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay});
    Tape tape(&probe.params);
    for (int step = 0; step < cfg.steps; ++step) {
        std::map<std::string, Array> grad_sum;
        for (int b = 0; b < cfg.batch; ++b) {
            const LabeledImage& item = train[rng.below(train.size())];
            tape.reset();
            ProbeLogits lo = forward(tape, item.image);
            Var loss = tape.add(nll(tape, lo.action, item.action_id, probe.num_actions),
                                nll(tape, lo.subject, item.subject_id, probe.num_subjects));
            BackwardResult bw = tape.backward(loss);
            if (grad_sum.empty()) {
                grad_sum = std::move(bw.grads);
            } else {
                for (auto& [name, g] : bw.grads) {
                    Array& dst = grad_sum.at(name);
                    for (size_t i = 0; i < g.data.size(); ++i) dst.data[i] += g.data[i];
                }
            }
        }
        for (auto& [name, g] : grad_sum)
            for (double& v : g.data) v /= static_cast<double>(cfg.batch);
        opt.step(probe.params, grad_sum);
    }

    ProbeGateReport rep;
    rep.action_confusion.assign(static_cast<size_t>(probe.num_actions),
                                std::vector<int>(static_cast<size_t>(probe.num_actions), 0));
    rep.subject_confusion.assign(static_cast<size_t>(probe.num_subjects),
                                 std::vector<int>(static_cast<size_t>(probe.num_subjects), 0));
    auto eval_set = [&](const std::vector<LabeledImage>& set, double& a_acc, double& s_acc, bool confusion) {
        int ok_a = 0, ok_s = 0;
        for (const auto& item : set) {
            auto [pa, ps] = probe_predict(probe, item.image);
            ok_a += pa == item.action_id;
            ok_s += ps == item.subject_id;
            if (confusion) {
                rep.action_confusion[static_cast<size_t>(item.action_id)][static_cast<size_t>(pa)]++;
                rep.subject_confusion[static_cast<size_t>(item.subject_id)][static_cast<size_t>(ps)]++;
            }
        }
        a_acc = static_cast<double>(ok_a) / static_cast<double>(set.size());
        s_acc = static_cast<double>(ok_s) / static_cast<double>(set.size());
    };
    eval_set(train, rep.train_action_acc, rep.train_subject_acc, false);
    eval_set(heldout, rep.heldout_action_acc, rep.heldout_subject_acc, true);
    rep.passed = rep.heldout_action_acc >= cfg.gate_accuracy && rep.heldout_subject_acc >= cfg.gate_accuracy;
    probe.gated = rep.passed;
    if (report) *report = rep;
    if (!rep.passed) throw std::runtime_error("train_probe: " + rep.summary());
    return probe;
}

std::pair<int, int> probe_predict(const ProbeParams& probe, const Array& image) {
    Tape t(&probe.params);
    ProbeLogits lo = forward(t, image);
    return {argmax_row(t.val(lo.action)), argmax_row(t.val(lo.subject))};
}

std::pair<double, double> probe_accuracy(const ProbeParams& probe, const std::vector<LabeledImage>& items) {
    if (items.empty()) throw std::invalid_argument("probe_accuracy: empty set");
    int ok_a = 0, ok_s = 0;
    for (const auto& it : items) {
        auto [pa, ps] = probe_predict(probe, it.image);
        ok_a += pa == it.action_id;
        ok_s += ps == it.subject_id;
    }
    return {static_cast<double>(ok_a) / static_cast<double>(items.size()),
            static_cast<double>(ok_s) / static_cast<double>(items.size())};
}

}  // namespace adi
