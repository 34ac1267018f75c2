#include "adi/text_encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace adi {

void init_text_encoder(ParamSet& params, const TextEncoderConfig& cfg, Rng& rng) {
    const double s = 1.0 / std::sqrt(static_cast<double>(cfg.dim));
    params.add_randn("te.embed", {cfg.vocab, cfg.dim}, 0.02, rng);
    params.add_randn("te.wq", {cfg.dim, cfg.dim}, s, rng);
    params.add_randn("te.wk", {cfg.dim, cfg.dim}, s, rng);
    params.add_randn("te.wv", {cfg.dim, cfg.dim}, s, rng);
    params.add_randn("te.wo", {cfg.dim, cfg.dim}, s, rng);
    params.add("te.ln_g", Array::full({cfg.dim}, 1.0));
    params.add("te.ln_b", Array::zeros({cfg.dim}));
}

Var encode_prompt(Tape& t, const TextEncoderConfig& cfg, const std::vector<int64_t>& tokens,
                  int slot_pos, const std::string& ident_param) {
    if (static_cast<int>(tokens.size()) != kPromptLen)
        throw std::invalid_argument("encode_prompt: expected " + std::to_string(kPromptLen) + " tokens, got " +
                                    std::to_string(tokens.size()));
    Var e = t.embed(t.param("te.embed"), tokens);
    if (!ident_param.empty()) {
        if (slot_pos < 0 || slot_pos >= kPromptLen) throw std::invalid_argument("encode_prompt: bad slot position");
        e = t.row_sub(e, slot_pos, t.param(ident_param));
    }
    (void)cfg;
    Var q = t.matmul(e, t.param("te.wq"));
    Var k = t.matmul(e, t.param("te.wk"));
    Var v = t.matmul(e, t.param("te.wv"));
    Var a = t.matmul(sdpa(t, q, k, v), t.param("te.wo"));
    return t.layernorm(t.add(e, a), t.param("te.ln_g"), t.param("te.ln_b"));
}

}  // namespace adi
