#include "adi/diffusion.hpp"

#include <cmath>
#include <stdexcept>

namespace adi {

Models init_models(uint64_t seed, DenoiserConfig dn_cfg, TextEncoderConfig te_cfg, int T) {
    Models m;
    m.dn_cfg = dn_cfg;
    m.te_cfg = te_cfg;
    m.sched = NoiseSchedule::linear(T);
    Rng rng(mix_seed(seed, 0x90de1));
    init_text_encoder(m.params, te_cfg, rng);
    init_denoiser(m.params, dn_cfg, rng);
    return m;
}

Var denoise_loss(Tape& t, const Models& m, const Array& z0_chw, const std::vector<LayerPrompt>& prompts,
                 int timestep, const Array& eps_chw) {
    if (prompts.size() != 1 && prompts.size() != kCondLayers)
        throw std::invalid_argument("denoise_loss: expected 1 or " + std::to_string(kCondLayers) +
                                    " layer prompts, got " + std::to_string(prompts.size()));
    // images live in [0,1]; the diffusion state space is [-1,1]
    Array z0 = z0_chw;
    for (double& v : z0.data) v = 2.0 * v - 1.0;
    Array zt = q_sample(m.sched, z0, timestep, eps_chw);
    Var zt_pm = t.leaf(chw_to_pm(zt));

    std::array<Var, kCondLayers> y{};
    if (prompts.size() == 1) {
        // identical prompts: one encoding reused at every site
        Var shared = encode_prompt(t, m.te_cfg, prompts[0].tokens, prompts[0].slot_pos, prompts[0].ident_param);
        y.fill(shared);
    } else {
        for (int l = 0; l < kCondLayers; ++l)
            y[static_cast<size_t>(l)] =
                encode_prompt(t, m.te_cfg, prompts[static_cast<size_t>(l)].tokens,
                              prompts[static_cast<size_t>(l)].slot_pos, prompts[static_cast<size_t>(l)].ident_param);
    }
    Var eps_hat = denoiser_forward(t, m.dn_cfg, zt_pm, timestep, y);
    return t.mse(eps_hat, t.leaf(chw_to_pm(eps_chw)));
}

PretrainResult pretrain(Models& m, const std::vector<CorpusItem>& corpus, const PretrainConfig& cfg) {
    if (corpus.empty()) throw std::invalid_argument("pretrain: empty corpus");
    Rng rng(mix_seed(cfg.seed, 0x94e7));
    AdamW opt({cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay});
    Tape tape(&m.params);
    PretrainResult res;

    const int band_lo = std::max(1, std::min(cfg.t_band_lo, m.sched.T));
    const int band_hi = std::max(band_lo, std::min(cfg.t_band_hi, m.sched.T));
    const int64_t n_img = kImageChannels * kImageSize * kImageSize;
    for (int step = 0; step < cfg.steps; ++step) {
        // cosine learning-rate decay, moments carried across the change
        if (cfg.steps > 1) {
            const double u = static_cast<double>(step) / static_cast<double>(cfg.steps - 1);
            opt.set_lr(cfg.lr_final + 0.5 * (cfg.lr - cfg.lr_final) * (1.0 + std::cos(u * 3.14159265358979)));
        }
        std::map<std::string, Array> grad_sum;
        double loss_sum = 0.0;
        for (int b = 0; b < cfg.batch; ++b) {
            const CorpusItem& item = corpus[rng.below(corpus.size())];
            const int t = rng.uniform() < cfg.t_band_fraction
                              ? static_cast<int>(rng.range_int(band_lo, band_hi))
                              : static_cast<int>(rng.range_int(1, m.sched.T));
            Array eps({kImageChannels, kImageSize, kImageSize});
            for (int64_t i = 0; i < n_img; ++i) eps.data[static_cast<size_t>(i)] = rng.gauss();
            const bool drop = rng.uniform() < cfg.cond_dropout;

            LayerPrompt lp;
            if (drop) {
                lp.tokens = null_tokens();
            } else {
                Prompt p = prompt_for(item.scene.context.subject_id, item.scene.context.background_id);
                lp.tokens = tokens_with_action(p, item.scene.action.action_id);
            }
            tape.reset();
            Var loss = denoise_loss(tape, m, item.image, {lp}, t, eps);
            loss_sum += tape.val(loss).data[0];
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
        opt.step(m.params, grad_sum);
        if (step % cfg.log_every == 0 || step == cfg.steps - 1) {
            res.loss_curve.push_back(loss_sum / static_cast<double>(cfg.batch));
            res.loss_steps.push_back(step);
        }
    }
    return res;
}

Array denoiser_predict(const Models& m, const Array& zt_pm, int timestep,
                       const std::array<Array, kCondLayers>& y_layers) {
    Tape t(&m.params);
    std::array<Var, kCondLayers> y{};
    for (int l = 0; l < kCondLayers; ++l) y[static_cast<size_t>(l)] = t.leaf(y_layers[static_cast<size_t>(l)]);
    Var out = denoiser_forward(t, m.dn_cfg, t.leaf(zt_pm), timestep, y);
    return t.val(out);
}

std::array<Array, kCondLayers> encode_cond(const Models& m, const Prompt& prompt, const ParamSet* idents) {
    std::array<Array, kCondLayers> out;
    for (int l = 0; l < kCondLayers; ++l) {
        if (idents) {
            // substitute this layer's identifier into a copy of the model params
            ParamSet combined = m.params;
            const std::string name = "adi.v." + std::to_string(l);
            combined.add(name, idents->at(name));
            Tape t(&combined);
            Var y = encode_prompt(t, m.te_cfg, prompt.tokens, prompt.slot_pos, name);
            out[static_cast<size_t>(l)] = t.val(y);
        } else {
            Tape t(&m.params);
            Var y = encode_prompt(t, m.te_cfg, prompt.tokens);
            out[static_cast<size_t>(l)] = t.val(y);
        }
    }
    return out;
}

std::array<Array, kCondLayers> encode_cond_action(const Models& m, const Prompt& prompt, int action_id) {
    std::array<Array, kCondLayers> out;
    Tape t(&m.params);
    Var y = encode_prompt(t, m.te_cfg, tokens_with_action(prompt, action_id));
    out.fill(t.val(y));
    return out;
}

Array encode_null_cond(const Models& m) {
    Tape t(&m.params);
    Var y = encode_prompt(t, m.te_cfg, null_tokens());
    return t.val(y);
}

Array ddim_sample(const Models& m, const std::array<Array, kCondLayers>& y_cond, const Array& y_null,
                  const SampleConfig& cfg, uint64_t seed) {
    if (cfg.steps < 1 || cfg.steps > m.sched.T)
        throw std::invalid_argument("ddim_sample: steps must be in [1," + std::to_string(m.sched.T) + "]");
    if (cfg.guidance_scale < 0.0) throw std::invalid_argument("ddim_sample: guidance_scale must be >= 0");

    Rng rng(mix_seed(seed, 0xdd1 + 0));
    const int64_t HW = kImageSize * kImageSize;
    Array z({HW, static_cast<int64_t>(kImageChannels)});
    for (double& v : z.data) v = rng.gauss();

    std::array<Array, kCondLayers> y_un;
    y_un.fill(y_null);

    // timestep subsequence T, T - T/S, ..., down to its final positive entry
    std::vector<int> taus;
    for (int i = cfg.steps; i >= 1; --i)
        taus.push_back(static_cast<int>(std::lround(static_cast<double>(i) * m.sched.T / cfg.steps)));

    for (size_t i = 0; i < taus.size(); ++i) {
        const int t = taus[i];
        const int t_prev = (i + 1 < taus.size()) ? taus[i + 1] : 0;
        Array eps_u = denoiser_predict(m, z, t, y_un);
        Array eps(eps_u.shape);
        if (cfg.guidance_scale == 0.0) {
            eps = eps_u;
        } else {
            Array eps_c = denoiser_predict(m, z, t, y_cond);
            for (size_t j = 0; j < eps.data.size(); ++j)
                eps.data[j] = eps_u.data[j] + cfg.guidance_scale * (eps_c.data[j] - eps_u.data[j]);
        }
        const double ab_t = m.sched.alpha_bar(t);
        const double ab_p = m.sched.alpha_bar(t_prev);
        const double c_x0 = 1.0 / std::sqrt(ab_t);
        const double c_e = std::sqrt(1.0 - ab_t);
        for (size_t j = 0; j < z.data.size(); ++j) {
            const double x0 = c_x0 * (z.data[j] - c_e * eps.data[j]);
            z.data[j] = std::sqrt(ab_p) * x0 + std::sqrt(1.0 - ab_p) * eps.data[j];
        }
    }
    Array img = pm_to_chw(z);
    // decode from [-1,1] back to image range, clamping only here
    for (double& v : img.data) v = std::min(1.0, std::max(0.0, 0.5 * (v + 1.0)));
    return img;
}

}  // namespace adi
