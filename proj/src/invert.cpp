#include "adi/invert.hpp"

#include "adi/io.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace adi {

namespace {

std::string ident_name(int layer) { return "adi.v." + std::to_string(layer); }

std::vector<LayerPrompt> layer_prompts(const Prompt& anchor_prompt, bool tie_layers) {
    std::vector<LayerPrompt> prompts;
    prompts.reserve(kCondLayers);
    for (int l = 0; l < kCondLayers; ++l) {
        LayerPrompt lp;
        lp.tokens = anchor_prompt.tokens;
        lp.slot_pos = anchor_prompt.slot_pos;
        lp.ident_param = tie_layers ? ident_name(0) : ident_name(l);
        prompts.push_back(std::move(lp));
    }
    return prompts;
}

bool grads_finite(const std::map<std::string, Array>& g) {
    for (const auto& [name, a] : g)
        if (!a.all_finite()) return false;
    return true;
}

}  // namespace

ParamSet init_identifiers(const Models& m, const InversionConfig& cfg) {
    Rng rng(mix_seed(cfg.seed, 0x1d5));
    const Array& table = m.params.at("te.embed");
    const int64_t d = table.shape[1];
    ParamSet idents;
    const int n = cfg.tie_layers ? 1 : kCondLayers;
    for (int l = 0; l < n; ++l) {
        Array v({d});
        for (int64_t j = 0; j < d; ++j) v[j] = table.at(kTokSlot, j) + cfg.init_noise * rng.gauss();
        idents.add(ident_name(l), std::move(v), true);
    }
    return idents;
}

ParamSet inversion_params(const Models& m, const ParamSet& idents) {
    ParamSet work = m.params;
    work.freeze_all();
    for (size_t i = 0; i < idents.size(); ++i) work.add(idents.name(i), idents.value(i), true);
    return work;
}

GradientTriple grads_for_triple(const Models& m, ParamSet& work_params, const SampleTriple& triple,
                                int timestep, const Array& eps, bool tie_layers) {
    GradientTriple out;
    std::vector<LayerPrompt> prompts = layer_prompts(triple.anchor_prompt, tie_layers);
    out.anchor_tokens = prompts[0].tokens;
    out.ctx_tokens = prompts[0].tokens;
    out.act_tokens = prompts[0].tokens;

    Tape tape(&work_params);
    auto eval = [&](const Array& image) {
        tape.reset();
        Var loss = denoise_loss(tape, m, image, prompts, timestep, eps);
        return tape.backward(loss).grads;
    };
    out.anchor = eval(triple.anchor.image);
    out.ctx = eval(triple.context_diff.image);
    out.act = eval(triple.action_diff.image);
    return out;
}

double overlap_rate(const std::vector<MaskRecord>& history) {
    if (history.empty()) throw std::invalid_argument("overlap_rate: empty mask history");
    double acc = 0.0;
    int64_t n = 0;
    for (const auto& rec : history) {
        if (rec.ctx.bits.empty() || rec.act.bits.empty()) continue;
        int64_t both = 0;
        for (size_t i = 0; i < rec.ctx.bits.size(); ++i) both += (rec.ctx.bits[i] & rec.act.bits[i]);
        acc += static_cast<double>(both) / static_cast<double>(rec.ctx.bits.size());
        ++n;
    }
    if (n == 0) return std::numeric_limits<double>::quiet_NaN();
    return acc / static_cast<double>(n);
}

InversionResult invert(const Models& frozen, const std::vector<CorpusItem>& exemplars, const DataConfig& dcfg,
                       const MaskingConfig& mcfg, const InversionConfig& icfg) {
    if (exemplars.empty()) throw std::invalid_argument("invert: empty exemplar set");

    InversionResult res;
    res.identifiers = init_identifiers(frozen, icfg);
    ParamSet work = inversion_params(frozen, res.identifiers);
    const std::vector<std::string> ident_names = res.identifiers.names();

    AdamW opt({icfg.lr, 0.9, 0.999, 1e-8, icfg.weight_decay});
    Rng rng(mix_seed(icfg.seed, 0x1472));
    const int64_t n_img = kImageChannels * kImageSize * kImageSize;
    const int log_every = std::max(1, icfg.steps / 50);

    for (int step = 0; step < icfg.steps; ++step) {
        const CorpusItem& anchor = exemplars[rng.below(exemplars.size())];
        SampleTriple triple = make_triple(anchor, exemplars, dcfg, rng);

        const int t = static_cast<int>(rng.range_int(1, frozen.sched.T));
        Array eps({kImageChannels, kImageSize, kImageSize});
        for (int64_t i = 0; i < n_img; ++i) eps.data[static_cast<size_t>(i)] = rng.gauss();

        GradientTriple gt;
        if (icfg.share_t_eps) {
            gt = grads_for_triple(frozen, work, triple, t, eps, icfg.tie_layers);
        } else {
            // unshared variant: fresh (t, eps) per member
            std::vector<LayerPrompt> prompts = layer_prompts(triple.anchor_prompt, icfg.tie_layers);
            Tape tape(&work);
            auto eval = [&](const Array& image) {
                const int tt = static_cast<int>(rng.range_int(1, frozen.sched.T));
                Array e({kImageChannels, kImageSize, kImageSize});
                for (int64_t i = 0; i < n_img; ++i) e.data[static_cast<size_t>(i)] = rng.gauss();
                tape.reset();
                Var loss = denoise_loss(tape, frozen, image, prompts, tt, e);
                return tape.backward(loss).grads;
            };
            gt.anchor = eval(triple.anchor.image);
            gt.ctx = eval(triple.context_diff.image);
            gt.act = eval(triple.action_diff.image);
        }

        if (!grads_finite(gt.anchor) || !grads_finite(gt.ctx) || !grads_finite(gt.act)) {
            ++res.skipped_steps;
            continue;
        }

        std::map<std::string, Array> masked;
        std::map<std::string, std::vector<uint8_t>> decay_keep;
        for (size_t li = 0; li < ident_names.size(); ++li) {
            const std::string& name = ident_names[li];
            const Array& g_a = gt.anchor.at(name);
            MaskRecord rec;
            rec.step = step;
            rec.layer = static_cast<int>(li);
            switch (mcfg.strategy) {
                case MaskStrategy::Adi:
                case MaskStrategy::ReversedAdi: {
                    rec.ctx = context_mask(g_a, gt.ctx.at(name), mcfg.beta);
                    rec.act = action_mask(g_a, gt.act.at(name), mcfg.beta);
                    rec.merged = merge_masks(rec.ctx, rec.act, mcfg.merge);
                    if (mcfg.strategy == MaskStrategy::ReversedAdi) rec.merged = complement(rec.merged);
                    break;
                }
                case MaskStrategy::None: {
                    rec.merged.bits.assign(static_cast<size_t>(g_a.numel()), 1);
                    rec.merged.provenance = "none";
                    break;
                }
                default:
                    rec.merged = baseline_mask(g_a, mcfg.beta, mcfg.strategy, rng);
            }
            masked[name] = apply_mask(g_a, rec.merged);
            if (!icfg.decay_masked_channels) decay_keep[name] = rec.merged.bits;
            res.history.push_back(std::move(rec));
        }

        opt.step(work, masked, icfg.decay_masked_channels ? nullptr : &decay_keep);

        if (step % log_every == 0 || step == icfg.steps - 1) {
            // anchor loss after the update, for the curve
            Tape tape(&work);
            Var loss = denoise_loss(tape, frozen, triple.anchor.image, layer_prompts(triple.anchor_prompt, icfg.tie_layers),
                                    t, eps);
            res.loss_curve.push_back(tape.val(loss).data[0]);
            res.loss_steps.push_back(step);
        }
    }

    res.failed = res.skipped_steps > static_cast<int>(icfg.max_skip_fraction * icfg.steps);

    // copy learned values back; tie_layers duplicates the shared token so the
    // persisted set always carries kCondLayers entries
    ParamSet learned;
    for (int l = 0; l < kCondLayers; ++l) {
        const std::string src = icfg.tie_layers ? ident_name(0) : ident_name(l);
        learned.add(ident_name(l), work.at(src), true);
    }
    res.identifiers = std::move(learned);
    res.overlap_rate = res.history.empty() ? std::numeric_limits<double>::quiet_NaN() : overlap_rate(res.history);
    return res;
}

void save_mask_history(const std::filesystem::path& path, const std::vector<MaskRecord>& history) {
    std::ostringstream os;
    for (const auto& rec : history) {
        if (!rec.ctx.bits.empty()) os << rec.step << "," << rec.layer << ",context," << rec.ctx.bitstring() << "\n";
        if (!rec.act.bits.empty()) os << rec.step << "," << rec.layer << ",action," << rec.act.bitstring() << "\n";
        os << rec.step << "," << rec.layer << "," << rec.merged.provenance << "," << rec.merged.bitstring() << "\n";
    }
    atomic_write(path, os.str());
}

std::vector<MaskRecord> load_mask_history(const std::filesystem::path& path) {
    std::istringstream is(read_file(path));
    std::vector<MaskRecord> out;
    std::string line;
    auto parse_bits = [](const std::string& s) {
        ChannelMask m;
        m.bits.reserve(s.size());
        for (char c : s) m.bits.push_back(c == '1' ? 1 : 0);
        return m;
    };
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string step_s, layer_s, prov, bits;
        std::getline(ls, step_s, ',');
        std::getline(ls, layer_s, ',');
        std::getline(ls, prov, ',');
        std::getline(ls, bits, ',');
        const int step = std::stoi(step_s);
        const int layer = std::stoi(layer_s);
        if (out.empty() || out.back().step != step || out.back().layer != layer) {
            MaskRecord rec;
            rec.step = step;
            rec.layer = layer;
            out.push_back(std::move(rec));
        }
        MaskRecord& rec = out.back();
        ChannelMask m = parse_bits(bits);
        m.provenance = prov;
        if (prov == "context")
            rec.ctx = std::move(m);
        else if (prov == "action")
            rec.act = std::move(m);
        else
            rec.merged = std::move(m);
    }
    return out;
}

}  // namespace adi
