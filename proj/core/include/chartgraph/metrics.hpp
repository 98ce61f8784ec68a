#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace chartgraph {

/// Relative tolerance granted to numeric answers.
inline constexpr double kRelaxedTolerance = 0.05;

/// Parses a plain decimal number ("12", "-3.5", "+0.25", "1e3").
/// Surrounding whitespace is ignored.
std::optional<double> parse_numeric_answer(std::string_view text);

/// Numeric gold: correct iff |pred - gold| <= 5% of |gold| (gold == 0
/// requires pred == 0); the comparison is done in exact decimal
/// arithmetic when both strings are plain decimals so that answers
/// exactly at the boundary count. Textual gold: exact match after
/// trimming whitespace.
bool relaxed_match(std::string_view prediction, std::string_view gold);

/// Fraction of relaxed matches. Throws Error(LengthMismatch) when the
/// lists differ in length; an empty pair of lists scores 0.
double relaxed_accuracy(std::span<const std::string> predictions, std::span<const std::string> golds);

}  // namespace chartgraph
