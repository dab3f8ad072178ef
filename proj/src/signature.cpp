#include <algorithm>
#include <array>
#include <cctype>

#include "tierroute/corpus.h"

namespace tierroute {

namespace {

// Builtins and keywords that commonly wrap the call under test in MBPP
// assertions, e.g. `assert set(f(x)) == ...` or `assert not f(x)`.
constexpr std::array<std::string_view, 22> kTransparent = {
    "set",   "sorted", "list",  "tuple", "abs", "round", "len",   "str",
    "int",   "float",  "bool",  "dict",  "frozenset", "sum", "min", "max",
    "not",   "and",    "or",    "in",    "is",  "print"};

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Index just past the string literal starting at `i` (quote char at s[i]),
// or npos if unterminated.
std::size_t skip_string(std::string_view s, std::size_t i) {
  const char q = s[i];
  const bool triple = s.substr(i, 3) == std::string(3, q);
  std::size_t j = i + (triple ? 3 : 1);
  while (j < s.size()) {
    if (s[j] == '\\') {
      j += 2;
      continue;
    }
    if (triple) {
      if (s.substr(j, 3) == std::string(3, q)) return j + 3;
    } else if (s[j] == q) {
      return j + 1;
    }
    ++j;
  }
  return std::string_view::npos;
}

// Splits the text between a call's parentheses. `open` indexes '('.
// Returns false if the parentheses are unbalanced.
bool split_args(std::string_view s, std::size_t open, std::vector<std::string_view>& args,
                std::size_t& close) {
  int depth = 0;
  std::size_t start = open + 1;
  for (std::size_t i = open; i < s.size();) {
    char c = s[i];
    if (c == '"' || c == '\'') {
      i = skip_string(s, i);
      if (i == std::string_view::npos) return false;
      continue;
    }
    if (c == '(' || c == '[' || c == '{') {
      ++depth;
    } else if (c == ')' || c == ']' || c == '}') {
      --depth;
      if (depth < 0) return false;
      if (depth == 0) {
        auto last = trim(s.substr(start, i - start));
        if (!last.empty()) args.push_back(last);
        close = i;
        return true;
      }
    } else if (c == ',' && depth == 1) {
      args.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
    ++i;
  }
  return false;
}

// Top-level `name=value` (not `==`) yields the value part.
std::string_view keyword_value(std::string_view arg) {
  if (arg.empty() || !is_ident_start(arg[0])) return arg;
  std::size_t i = 1;
  while (i < arg.size() && is_ident_char(arg[i])) ++i;
  std::size_t j = i;
  while (j < arg.size() && arg[j] == ' ') ++j;
  if (j < arg.size() && arg[j] == '=' && (j + 1 >= arg.size() || arg[j + 1] != '=')) {
    return trim(arg.substr(j + 1));
  }
  return arg;
}

bool has_top_level_colon(std::string_view s) {
  int depth = 0;
  for (std::size_t i = 0; i < s.size();) {
    char c = s[i];
    if (c == '"' || c == '\'') {
      i = skip_string(s, i);
      if (i == std::string_view::npos) return false;
      continue;
    }
    if (c == '(' || c == '[' || c == '{') ++depth;
    if (c == ')' || c == ']' || c == '}') --depth;
    if (c == ':' && depth == 1) return true;
    ++i;
  }
  return false;
}

std::string literal_type(std::string_view arg) {
  arg = trim(keyword_value(arg));
  if (arg.empty()) return "object";
  const char c = arg[0];
  if (c == '(') return "tuple";
  if (c == '[') return "list";
  if (c == '{') {
    if (arg == "{}" || has_top_level_colon(arg)) return "dict";
    return "set";
  }
  if (c == '"' || c == '\'') return "str";
  if ((c == 'b' || c == 'B') && arg.size() > 1 && (arg[1] == '"' || arg[1] == '\'')) {
    return "bytes";
  }
  if ((c == 'r' || c == 'f' || c == 'R' || c == 'F') && arg.size() > 1 &&
      (arg[1] == '"' || arg[1] == '\'')) {
    return "str";
  }
  if (arg == "True" || arg == "False") return "bool";
  if (arg == "None") return "None";
  std::string_view num = arg;
  if (num[0] == '-' || num[0] == '+') num = trim(num.substr(1));
  if (!num.empty() && (std::isdigit(static_cast<unsigned char>(num[0])) || num[0] == '.')) {
    bool is_float = false;
    bool numeric = true;
    for (char d : num) {
      if (d == '.' || d == 'e' || d == 'E') {
        is_float = true;
      } else if (!std::isdigit(static_cast<unsigned char>(d)) && d != '_' && d != '-' &&
                 d != '+') {
        numeric = false;
        break;
      }
    }
    if (numeric) return is_float ? "float" : "int";
  }
  return "object";
}

std::optional<std::string> find_call(std::string_view s, int depth_budget) {
  if (depth_budget <= 0) return std::nullopt;
  for (std::size_t i = 0; i < s.size();) {
    char c = s[i];
    if (c == '"' || c == '\'') {
      i = skip_string(s, i);
      if (i == std::string_view::npos) return std::nullopt;
      continue;
    }
    if (!is_ident_start(c) || (i > 0 && (is_ident_char(s[i - 1]) || s[i - 1] == '.'))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && (is_ident_char(s[j]) || s[j] == '.')) ++j;
    std::string_view name = s.substr(i, j - i);
    std::size_t k = j;
    while (k < s.size() && s[k] == ' ') ++k;
    if (k >= s.size() || s[k] != '(') {
      i = j;
      continue;
    }
    std::vector<std::string_view> args;
    std::size_t close = 0;
    if (!split_args(s, k, args, close)) return std::nullopt;

    const bool transparent =
        name.find('.') != std::string_view::npos ||
        std::find(kTransparent.begin(), kTransparent.end(), name) != kTransparent.end();
    if (transparent) {
      if (auto inner = find_call(s.substr(k + 1, close - k - 1), depth_budget - 1)) return inner;
      i = close + 1;
      continue;
    }

    std::string hint(name);
    hint += '(';
    for (std::size_t a = 0; a < args.size(); ++a) {
      if (a) hint += ", ";
      hint += literal_type(args[a]);
    }
    hint += ')';
    return hint;
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::string> extract_signature_hint(std::string_view assertion) {
  auto s = trim(assertion);
  if (s.substr(0, 6) == "assert" && (s.size() == 6 || !is_ident_char(s[6]))) {
    s = trim(s.substr(6));
  }
  return find_call(s, 8);
}

}  // namespace tierroute
