#pragma once

#include <string>

#include "latentseek/answer.hpp"
#include "latentseek/model.hpp"
#include "latentseek/tokenizer.hpp"

namespace latentseek {

/// One benchmark problem: the unit of test-time adaptation.
struct ProblemInstance {
  std::string id;
  std::string question;
  std::string gold_answer;  // raw text; empty when absent
  reward::PromptFormat prompt_template = reward::PromptFormat::kBoxed;

  bool has_gold() const { return !gold_answer.empty(); }
};

namespace harness {

// Verbatim evaluation prompt templates.
const std::string& boxed_system_prompt();
const std::string& json_system_prompt();
std::string json_user_prompt(const std::string& question);

// Fills the template with the question and tokenizes. Chat structure is
// flattened with single-space separators so small printable alphabets
// still cover the rendered text.
std::string render_prompt_text(const ProblemInstance& instance);
model::Tokens render_prompt(const ProblemInstance& instance,
                            const model::Tokenizer& tokenizer,
                            int max_context);

}  // namespace harness
}  // namespace latentseek
