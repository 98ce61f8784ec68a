#include "chartgraph/decoder.hpp"

#include <algorithm>
#include <cmath>

#include "chartgraph/error.hpp"
#include "chartgraph/gnn.hpp"

namespace chartgraph {

namespace {

void check_token(TokenId t, std::size_t vocab) {
  if (t >= vocab) {
    throw Error(ErrorCode::IndexOutOfVocab, "token " + std::to_string(t) + " outside vocabulary of " +
                                                std::to_string(vocab));
  }
}

std::vector<double> mean_rows(const Matrix& m) {
  std::vector<double> mean(m.cols(), 0.0);
  if (m.rows() == 0) return mean;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) mean[c] += row[c];
  }
  for (double& v : mean) v /= static_cast<double>(m.rows());
  return mean;
}

std::vector<double> question_mean(std::span<const TokenId> question, const DecoderParams& p) {
  std::vector<double> q(p.embed_dim(), 0.0);
  if (question.empty()) return q;
  for (TokenId t : question) {
    check_token(t, p.vocab_size());
    auto e = p.embed.row(t);
    for (std::size_t k = 0; k < q.size(); ++k) q[k] += e[k];
  }
  for (double& v : q) v /= static_cast<double>(question.size());
  return q;
}

// Builds x rows for the given previous tokens.
Matrix assemble_inputs(const std::vector<double>& pooled, const std::vector<double>& q,
                       std::span<const TokenId> prev, const DecoderParams& p) {
  const std::size_t sd = pooled.size();
  const std::size_t ed = p.embed_dim();
  Matrix x(prev.size(), sd + 2 * ed);
  for (std::size_t j = 0; j < prev.size(); ++j) {
    check_token(prev[j], p.vocab_size());
    auto row = x.row(j);
    std::copy(pooled.begin(), pooled.end(), row.begin());
    std::copy(q.begin(), q.end(), row.begin() + sd);
    auto e = p.embed.row(prev[j]);
    std::copy(e.begin(), e.end(), row.begin() + sd + ed);
  }
  return x;
}

void check_params(const Matrix& states, const DecoderParams& p) {
  if (p.wh.rows() != states.cols() + 2 * p.embed_dim() || p.bh.size() != p.wh.cols() ||
      p.wo.rows() != p.wh.cols() || p.wo.cols() != p.vocab_size() || p.bo.size() != p.vocab_size()) {
    throw Error(ErrorCode::ShapeMismatch, "decoder parameters do not match state width " +
                                              std::to_string(states.cols()));
  }
}

}  // namespace

DecoderParams DecoderParams::init(std::size_t state_dim, std::size_t embed_dim, std::size_t hidden,
                                  std::size_t vocab, Rng& rng) {
  DecoderParams p;
  p.embed = Matrix(vocab, embed_dim);
  for (double& v : p.embed.values()) v = rng.uniform(-0.1, 0.1);
  p.wh = glorot_uniform(state_dim + 2 * embed_dim, hidden, rng);
  p.bh.assign(hidden, 0.0);
  p.wo = glorot_uniform(hidden, vocab, rng);
  p.bo.assign(vocab, 0.0);
  return p;
}

DecoderParams DecoderParams::zeros_like(const DecoderParams& like) {
  DecoderParams z = like;
  for (auto& [name, values] : z.tensors()) std::fill(values.begin(), values.end(), 0.0);
  return z;
}

std::vector<std::pair<std::string, std::span<double>>> DecoderParams::tensors() {
  return {
      {"decoder.embed", embed.values()}, {"decoder.wh", wh.values()}, {"decoder.bh", bh},
      {"decoder.wo", wo.values()},       {"decoder.bo", bo},
  };
}

DecoderOutput decoder_forward(const Matrix& states, std::span<const TokenId> question,
                              std::span<const TokenId> answer, const DecoderParams& params) {
  check_params(states, params);
  DecoderOutput out;
  DecoderTape& t = out.tape;
  t.num_states = states.rows();
  t.question.assign(question.begin(), question.end());
  t.prev.reserve(answer.size());
  // BOS is id 1 in the standard vocabulary; the decoder only needs it to
  // be a valid row of the embedding table.
  const TokenId bos = Vocabulary::standard().bos();
  for (std::size_t j = 0; j < answer.size(); ++j) t.prev.push_back(j == 0 ? bos : answer[j - 1]);
  for (TokenId a : answer) check_token(a, params.vocab_size());

  t.x = assemble_inputs(mean_rows(states), question_mean(question, params), t.prev, params);
  t.pre = matmul(t.x, params.wh);
  add_row_broadcast(t.pre, params.bh);
  t.hidden = relu(t.pre);
  out.logits = matmul(t.hidden, params.wo);
  add_row_broadcast(out.logits, params.bo);
  return out;
}

DecoderBackward decoder_backward(const DecoderTape& tape, const DecoderParams& params, const Matrix& dlogits) {
  if (dlogits.rows() != tape.hidden.rows() || dlogits.cols() != params.vocab_size()) {
    throw Error(ErrorCode::TapeMismatch, "logit gradient does not match the decoder forward pass");
  }
  DecoderBackward back;
  back.grads = DecoderParams::zeros_like(params);
  DecoderGrads& g = back.grads;
  g.wo = matmul_tn(tape.hidden, dlogits);
  g.bo = column_sums(dlogits);
  const Matrix dpre = relu_backward(tape.pre, matmul_nt(dlogits, params.wo));
  g.wh = matmul_tn(tape.x, dpre);
  g.bh = column_sums(dpre);
  const Matrix dx = matmul_nt(dpre, params.wh);

  const std::size_t ed = params.embed_dim();
  const std::size_t sd = params.state_dim();
  std::vector<double> dpooled(sd, 0.0);
  std::vector<double> dq(ed, 0.0);
  for (std::size_t j = 0; j < dx.rows(); ++j) {
    auto row = dx.row(j);
    for (std::size_t k = 0; k < sd; ++k) dpooled[k] += row[k];
    for (std::size_t k = 0; k < ed; ++k) dq[k] += row[sd + k];
    auto de = g.embed.row(tape.prev[j]);
    for (std::size_t k = 0; k < ed; ++k) de[k] += row[sd + ed + k];
  }
  if (!tape.question.empty()) {
    const double qn = static_cast<double>(tape.question.size());
    for (TokenId t : tape.question) {
      auto de = g.embed.row(t);
      for (std::size_t k = 0; k < ed; ++k) de[k] += dq[k] / qn;
    }
  }
  back.d_states = Matrix(tape.num_states, sd);
  if (tape.num_states > 0) {
    const double n = static_cast<double>(tape.num_states);
    for (std::size_t r = 0; r < tape.num_states; ++r) {
      auto row = back.d_states.row(r);
      for (std::size_t k = 0; k < sd; ++k) row[k] = dpooled[k] / n;
    }
  }
  return back;
}

std::vector<TokenId> decoder_greedy(const Matrix& states, std::span<const TokenId> question,
                                    const DecoderParams& params, TokenId bos, TokenId eos, std::size_t max_len) {
  check_params(states, params);
  const auto pooled = mean_rows(states);
  const auto q = question_mean(question, params);
  std::vector<TokenId> out;
  TokenId prev = bos;
  for (std::size_t step = 0; step < max_len; ++step) {
    const TokenId prev_arr[1] = {prev};
    Matrix x = assemble_inputs(pooled, q, prev_arr, params);
    Matrix h = matmul(x, params.wh);
    add_row_broadcast(h, params.bh);
    h = relu(h);
    Matrix logits = matmul(h, params.wo);
    add_row_broadcast(logits, params.bo);
    auto row = logits.row(0);
    const TokenId best = static_cast<TokenId>(std::max_element(row.begin(), row.end()) - row.begin());
    out.push_back(best);
    if (best == eos) break;
    prev = best;
  }
  return out;
}

NllResult nll_loss(const Matrix& logits, std::span<const TokenId> answer) {
  if (logits.rows() != answer.size()) {
    throw Error(ErrorCode::ShapeMismatch, std::to_string(logits.rows()) + " logit rows for " +
                                              std::to_string(answer.size()) + " answer tokens");
  }
  NllResult r;
  r.dlogits = Matrix(logits.rows(), logits.cols());
  for (std::size_t j = 0; j < answer.size(); ++j) {
    check_token(answer[j], logits.cols());
    auto row = logits.row(j);
    const double m = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - m);
    const double log_z = m + std::log(z);
    r.loss += log_z - row[answer[j]];
    auto d = r.dlogits.row(j);
    for (std::size_t k = 0; k < row.size(); ++k) d[k] = std::exp(row[k] - log_z);
    d[answer[j]] -= 1.0;
  }
  if (!std::isfinite(r.loss)) throw Error(ErrorCode::DivergedLoss, "non-finite NLL");
  return r;
}

}  // namespace chartgraph
