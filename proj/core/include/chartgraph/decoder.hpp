#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chartgraph/matrix.hpp"
#include "chartgraph/rng.hpp"
#include "chartgraph/synthetic.hpp"

namespace chartgraph {

/// Minimal teacher-forced answer decoder. For answer position j:
///   x_j = [mean_rows(states) | mean(embed[question]) | embed[prev_j]]
///   logits_j = ReLU(x_j * Wh + bh) * Wo + bo
/// with prev_0 = BOS and prev_j = answer[j-1].
struct DecoderParams {
  Matrix embed;  // vocab x embed_dim
  Matrix wh;     // (state_dim + 2*embed_dim) x hidden
  std::vector<double> bh;
  Matrix wo;  // hidden x vocab
  std::vector<double> bo;

  static DecoderParams init(std::size_t state_dim, std::size_t embed_dim, std::size_t hidden,
                            std::size_t vocab, Rng& rng);
  static DecoderParams zeros_like(const DecoderParams& like);

  std::size_t vocab_size() const noexcept { return embed.rows(); }
  std::size_t embed_dim() const noexcept { return embed.cols(); }
  std::size_t state_dim() const noexcept { return wh.rows() - 2 * embed.cols(); }

  std::vector<std::pair<std::string, std::span<double>>> tensors();
};

using DecoderGrads = DecoderParams;

struct DecoderTape {
  std::size_t num_states = 0;
  std::vector<TokenId> question;
  std::vector<TokenId> prev;  // teacher-forced inputs per position
  Matrix x;
  Matrix pre;
  Matrix hidden;
};

struct DecoderOutput {
  Matrix logits;  // answer_len x vocab
  DecoderTape tape;
};

struct DecoderBackward {
  Matrix d_states;
  DecoderGrads grads;
};

DecoderOutput decoder_forward(const Matrix& states, std::span<const TokenId> question,
                              std::span<const TokenId> answer, const DecoderParams& params);
DecoderBackward decoder_backward(const DecoderTape& tape, const DecoderParams& params, const Matrix& dlogits);

/// Greedy decoding until EOS or max_len tokens.
std::vector<TokenId> decoder_greedy(const Matrix& states, std::span<const TokenId> question,
                                    const DecoderParams& params, TokenId bos, TokenId eos, std::size_t max_len);

struct NllResult {
  double loss = 0.0;
  Matrix dlogits;
};

/// sum_j -log softmax(logits_j)[answer_j]; throws Error(IndexOutOfVocab).
NllResult nll_loss(const Matrix& logits, std::span<const TokenId> answer);

}  // namespace chartgraph
