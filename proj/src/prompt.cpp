#include <string>

#include "tierroute/backends.h"

namespace tierroute {

std::string render_prompt(const Task& task, const PromptProfile& profile) {
  const bool with_hint = profile.include_signature && task.signature_hint.has_value();
  std::string out;
  if (profile.reduced) {
    out = task.prompt;
    out += '\n';
    if (with_hint) out += "Function format: " + *task.signature_hint + "\n";
    return out;
  }
  out = profile.system_prompt;
  out += "\n\n";
  out += task.prompt;
  out += '\n';
  if (with_hint) {
    out += "\nThe function must be callable as: " + *task.signature_hint + "\n";
  }
  return out;
}

namespace {

bool starts_definition(std::string_view line) {
  for (std::string_view prefix : {"def ", "async def ", "class ", "import ", "from ", "@"}) {
    if (line.substr(0, prefix.size()) == prefix) return true;
  }
  return false;
}

bool is_fence(std::string_view line) {
  auto first = line.find_first_not_of(" \t");
  return first != std::string_view::npos && line.substr(first, 3) == "```";
}

void strip_trailing_newlines(std::string& s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
}

}  // namespace

std::string extract_code(std::string_view raw) {
  std::vector<std::string_view> lines;
  for (std::size_t pos = 0; pos <= raw.size();) {
    auto end = raw.find('\n', pos);
    if (end == std::string_view::npos) end = raw.size();
    lines.push_back(raw.substr(pos, end - pos));
    pos = end + 1;
  }

  std::vector<std::string> blocks;
  bool in_block = false;
  std::string current;
  for (auto line : lines) {
    if (is_fence(line)) {
      if (in_block) {
        strip_trailing_newlines(current);
        blocks.push_back(std::move(current));
        current.clear();
      }
      in_block = !in_block;
      continue;
    }
    if (in_block) {
      current.append(line);
      current += '\n';
    }
  }
  if (in_block) {
    // Unterminated fence: keep what followed it.
    strip_trailing_newlines(current);
    blocks.push_back(std::move(current));
  }
  if (!blocks.empty()) {
    std::string out;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      if (i) out += "\n\n";
      out += blocks[i];
    }
    return out;
  }

  std::size_t offset = 0;
  for (auto line : lines) {
    if (starts_definition(line)) return std::string(raw.substr(offset));
    offset += line.size() + 1;
  }
  return std::string(raw);
}

}  // namespace tierroute
