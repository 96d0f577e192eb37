#include "latentseek/instance.hpp"

#include "latentseek/errors.hpp"

namespace latentseek::harness {

const std::string& boxed_system_prompt() {
  static const std::string p =
      "Please reason step by step, and put your final answer within "
      "\\boxed{}.";
  return p;
}

const std::string& json_system_prompt() {
  static const std::string p =
      "You are a precise math question solver. Solve this math problem.";
  return p;
}

std::string json_user_prompt(const std::string& question) {
  return "QUESTION: " + question +
         " Let's think step by step. Please provide your thought process and "
         "your final answer separately and response in json format containing "
         "the keys thought process and final answer.  For example your "
         "response should be {'thought process': 'your thought process', "
         "'final answer': 'your final answer'}. Note that the final answer "
         "should be pure numbers, not the calculation formulas, and without "
         "any units or explanation!!!";
}

std::string render_prompt_text(const ProblemInstance& instance) {
  if (instance.question.empty()) {
    throw ConfigError("render_prompt: empty question for instance \"" +
                      instance.id + "\"");
  }
  if (instance.prompt_template == reward::PromptFormat::kBoxed) {
    return boxed_system_prompt() + " " + instance.question + " ";
  }
  return json_system_prompt() + " " + json_user_prompt(instance.question) + " ";
}

model::Tokens render_prompt(const ProblemInstance& instance,
                            const model::Tokenizer& tokenizer,
                            int max_context) {
  model::Tokens tokens = tokenizer.encode(render_prompt_text(instance));
  if (static_cast<int>(tokens.size()) >= max_context) {
    throw ContextOverflowError("render_prompt: instance \"" + instance.id +
                               "\" renders to " +
                               std::to_string(tokens.size()) +
                               " tokens, exceeding the context");
  }
  return tokens;
}

}  // namespace latentseek::harness
