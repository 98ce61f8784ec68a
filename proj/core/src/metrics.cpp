#include "chartgraph/metrics.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <string>

#include "chartgraph/error.hpp"

namespace chartgraph {

namespace {

__extension__ using i128 = __int128;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// value = (negative ? -1 : 1) * mantissa * 10^exponent
struct Decimal {
  bool negative = false;
  i128 mantissa = 0;
  int exponent = 0;
};

constexpr int kMaxDigits = 30;

// Grammar: [+-]? (digits [. digits?] | . digits) ([eE] [+-]? digits)?
// Returns nullopt for anything else, or when the mantissa is too long to
// hold exactly (the caller then falls back to binary floating point).
struct ParsedNumber {
  bool valid = false;
  std::optional<Decimal> exact;
};

ParsedNumber parse_decimal(std::string_view s) {
  ParsedNumber out;
  std::size_t i = 0;
  Decimal d;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) d.negative = s[i++] == '-';
  int digits = 0;
  int significant = 0;
  bool overflow = false;
  auto take_digit = [&](char c, bool fractional) {
    ++digits;
    if (significant == 0 && c == '0') {
      if (fractional) --d.exponent;
      return;
    }
    if (significant >= kMaxDigits) {
      overflow = true;
      if (!fractional) ++d.exponent;
      return;
    }
    d.mantissa = d.mantissa * 10 + (c - '0');
    ++significant;
    if (fractional) --d.exponent;
  };
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) take_digit(s[i++], false);
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) take_digit(s[i++], true);
  }
  if (digits == 0) return out;
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    ++i;
    bool neg_exp = false;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) neg_exp = s[i++] == '-';
    int e = 0;
    int exp_digits = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
      if (e < 100000) e = e * 10 + (s[i] - '0');
      ++i;
      ++exp_digits;
    }
    if (exp_digits == 0) return out;
    d.exponent += neg_exp ? -e : e;
  }
  if (i != s.size()) return out;
  out.valid = true;
  if (!overflow) out.exact = d;
  return out;
}

i128 abs128(i128 v) { return v < 0 ? -v : v; }

// Scales m by 10^k if the result stays below 10^36.
std::optional<i128> scale_up(i128 m, int k) {
  i128 limit = 1;
  for (int i = 0; i < 36; ++i) limit *= 10;
  while (k-- > 0) {
    m *= 10;
    if (abs128(m) >= limit) return std::nullopt;
  }
  return m;
}

std::optional<bool> exact_relaxed(const Decimal& pred, const Decimal& gold) {
  const int e = std::min(pred.exponent, gold.exponent);
  auto p = scale_up(pred.mantissa, pred.exponent - e);
  auto g = scale_up(gold.mantissa, gold.exponent - e);
  if (!p || !g) return std::nullopt;
  const i128 ps = pred.negative ? -*p : *p;
  const i128 gs = gold.negative ? -*g : *g;
  // |p - g| <= |g| / 20
  return abs128(ps - gs) * 20 <= abs128(gs);
}

}  // namespace

std::optional<double> parse_numeric_answer(std::string_view text) {
  const std::string_view t = trim(text);
  if (!parse_decimal(t).valid) return std::nullopt;
  const std::string owned(t);
  const double v = std::strtod(owned.c_str(), nullptr);
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

bool relaxed_match(std::string_view prediction, std::string_view gold) {
  const std::string_view p = trim(prediction);
  const std::string_view g = trim(gold);
  const ParsedNumber gold_num = parse_decimal(g);
  if (!gold_num.valid) return p == g;

  const ParsedNumber pred_num = parse_decimal(p);
  if (!pred_num.valid) return false;
  if (gold_num.exact && pred_num.exact) {
    if (auto verdict = exact_relaxed(*pred_num.exact, *gold_num.exact)) return *verdict;
  }
  const auto pv = parse_numeric_answer(p);
  const auto gv = parse_numeric_answer(g);
  if (!pv || !gv) return false;
  if (*gv == 0.0) return *pv == 0.0;
  return std::abs(*pv - *gv) <= kRelaxedTolerance * std::abs(*gv);
}

double relaxed_accuracy(std::span<const std::string> predictions, std::span<const std::string> golds) {
  if (predictions.size() != golds.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(predictions.size()) + " predictions for " +
                                               std::to_string(golds.size()) + " gold answers");
  }
  if (golds.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < golds.size(); ++i)
    if (relaxed_match(predictions[i], golds[i])) ++correct;
  return static_cast<double>(correct) / static_cast<double>(golds.size());
}

}  // namespace chartgraph
