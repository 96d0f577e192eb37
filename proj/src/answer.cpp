#include "latentseek/answer.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>

#include <json.hpp>

#include "latentseek/errors.hpp"

namespace latentseek::reward {

PromptFormat prompt_format_from_string(const std::string& s) {
  if (s == "boxed") return PromptFormat::kBoxed;
  if (s == "json") return PromptFormat::kJson;
  throw ConfigError("unknown prompt format \"" + s + "\" (expected boxed|json)");
}

std::string to_string(PromptFormat f) {
  return f == PromptFormat::kBoxed ? "boxed" : "json";
}

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

std::string canonical_number(double v) {
  double r = std::round(v);
  if (std::abs(v - r) <= 1e-9 * std::max(1.0, std::abs(v)) &&
      std::abs(r) < 1e15) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf),
                                   static_cast<long long>(r));
    return std::string(buf, ptr);
  }
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

bool is_unit_tail(const std::string& s) {
  // only letters, spaces and a possible percent sign
  for (char c : s) {
    if (!std::isalpha(static_cast<unsigned char>(c)) && c != ' ' && c != '%') {
      return false;
    }
  }
  return true;
}

}  // namespace

AnswerValue normalize_answer(const std::string& raw) {
  AnswerValue out;
  out.raw = raw;
  std::string s = trim(raw);
  // trailing period, currency/percent markers
  while (!s.empty() && s.back() == '.') s.pop_back();
  if (!s.empty() && s.front() == '$') s.erase(s.begin());
  while (!s.empty() && (s.back() == '%' || s.back() == '$')) s.pop_back();
  s = trim(s);
  // thousands separators: drop commas between digits
  std::string compact;
  compact.reserve(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == ',' && i > 0 && i + 1 < s.size() &&
        std::isdigit(static_cast<unsigned char>(s[i - 1])) &&
        std::isdigit(static_cast<unsigned char>(s[i + 1]))) {
      continue;
    }
    compact.push_back(s[i]);
  }
  s = compact;

  double value = 0.0;
  if (parse_number(s, value)) {
    out.numeric = value;
    out.text = canonical_number(value);
    return out;
  }
  // number followed by a unit word ("230 miles", "42 %")
  size_t split = s.find(' ');
  if (split != std::string::npos) {
    std::string head = s.substr(0, split);
    std::string tail = trim(s.substr(split + 1));
    if (!tail.empty() && is_unit_tail(tail) && parse_number(head, value)) {
      out.numeric = value;
      out.text = canonical_number(value);
      return out;
    }
  }
  out.text = s;
  return out;
}

namespace {

// [start, end) of the balanced content after "\boxed{" at open_brace.
std::optional<std::string> balanced_content(const std::string& text,
                                            size_t open_brace) {
  int depth = 0;
  for (size_t i = open_brace; i < text.size(); ++i) {
    if (text[i] == '{') {
      ++depth;
    } else if (text[i] == '}') {
      --depth;
      if (depth == 0) return text.substr(open_brace + 1, i - open_brace - 1);
    }
  }
  return std::nullopt;
}

std::optional<std::string> extract_boxed(const std::string& text) {
  const std::string needle = "\\boxed{";
  size_t pos = text.rfind(needle);
  while (pos != std::string::npos) {
    auto content = balanced_content(text, pos + needle.size() - 1);
    if (content) return content;
    if (pos == 0) break;
    pos = text.rfind(needle, pos - 1);
  }
  return std::nullopt;
}

// Matching close brace for the object starting at `start`, honoring
// double-quoted strings with escapes.
std::optional<size_t> object_end(const std::string& text, size_t start) {
  int depth = 0;
  bool in_string = false;
  for (size_t i = start; i < text.size(); ++i) {
    char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      --depth;
      if (depth == 0) return i;
    }
  }
  return std::nullopt;
}

std::optional<std::string> extract_json_answer(const std::string& text) {
  size_t pos = text.rfind('{');
  while (pos != std::string::npos) {
    auto end = object_end(text, pos);
    if (end) {
      std::string candidate = text.substr(pos, *end - pos + 1);
      nlohmann::json j = nlohmann::json::parse(candidate, nullptr, false);
      if (!j.is_discarded() && j.is_object() && j.contains("final answer")) {
        const auto& v = j["final answer"];
        if (v.is_string()) return v.get<std::string>();
        return v.dump();
      }
    }
    if (pos == 0) break;
    pos = text.rfind('{', pos - 1);
  }
  return std::nullopt;
}

}  // namespace

std::optional<AnswerValue> extract_answer(const std::string& text,
                                          PromptFormat format) {
  std::optional<std::string> raw = format == PromptFormat::kBoxed
                                       ? extract_boxed(text)
                                       : extract_json_answer(text);
  if (!raw) return std::nullopt;
  return normalize_answer(*raw);
}

bool answers_match(const AnswerValue& a, const AnswerValue& b) {
  if (a.numeric && b.numeric) {
    double x = *a.numeric, y = *b.numeric;
    return std::abs(x - y) <=
           1e-9 * std::max({1.0, std::abs(x), std::abs(y)});
  }
  return a.text == b.text;
}

}  // namespace latentseek::reward
