#pragma once

#include "adi/corpus.hpp"
#include "adi/tape.hpp"

#include <string>
#include <vector>

namespace adi {

struct TextEncoderConfig {
    int64_t vocab = kVocabSize;
    int64_t dim = 64;  // matches the identifier dimension
};

// Adds te.* parameters: embedding table, one self-attention block, layer norm.
void init_text_encoder(ParamSet& params, const TextEncoderConfig& cfg, Rng& rng);

// Encodes a token sequence. When `ident_param` is non-empty, the embedding row
// at `slot_pos` is replaced by that parameter before the attention block, so
// gradients reach the identifier.
Var encode_prompt(Tape& t, const TextEncoderConfig& cfg, const std::vector<int64_t>& tokens,
                  int slot_pos = -1, const std::string& ident_param = "");

}  // namespace adi
