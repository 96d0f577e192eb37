#pragma once

#include <optional>
#include <string>

namespace latentseek::reward {

enum class PromptFormat { kBoxed, kJson };

PromptFormat prompt_format_from_string(const std::string& s);
std::string to_string(PromptFormat f);

/// A final answer plus its canonical form; numeric when parseable.
struct AnswerValue {
  std::string raw;
  std::string text;  // normalized canonical form
  std::optional<double> numeric;
};

// Strips whitespace, currency/percent signs, thousands separators, a
// trailing period and trailing unit words; parses numerics so that
// "366.0", "$366" and "366." all canonicalize to "366".
AnswerValue normalize_answer(const std::string& raw);

// boxed: contents of the last \boxed{...} with balanced braces.
// json:  value of key "final answer" in the last parseable JSON object.
// nullopt = no answer found (distinct from a wrong answer).
std::optional<AnswerValue> extract_answer(const std::string& text,
                                          PromptFormat format);

// Normalized match: numeric equality (tolerance 1e-9, scaled) when both
// sides parse numerically, exact canonical-string equality otherwise.
bool answers_match(const AnswerValue& a, const AnswerValue& b);

}  // namespace latentseek::reward
