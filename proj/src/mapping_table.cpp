#include <cctype>
#include <cmath>

#include "tierroute/labeling.h"

namespace tierroute {

LevelScheme LevelScheme::by_id(std::string_view id) {
  if (id == "five_level") return five_level();
  if (id == "single_trial") return single_trial();
  throw Error("unknown labeling scheme '" + std::string(id) + "'");
}

namespace {

struct Token {
  enum class Kind { ident, number, op, end } kind;
  std::string text;
  std::size_t pos;
};

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      out.push_back({Token::Kind::ident, std::string(s.substr(i, j - i)), i});
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      out.push_back({Token::Kind::number, std::string(s.substr(i, j - i)), i});
      i = j;
      continue;
    }
    for (std::string_view op : {"==", "!=", ">=", "<=", "||", "&&", ">", "<", "+"}) {
      if (s.substr(i, op.size()) == op) {
        out.push_back({Token::Kind::op, std::string(op), i});
        i += op.size();
        goto next;
      }
    }
    throw Error("condition '" + std::string(s) + "': unexpected character '" + std::string(1, c) +
                "' at " + std::to_string(i));
  next:;
  }
  out.push_back({Token::Kind::end, "", s.size()});
  return out;
}

bool is_tier_ref(const std::string& ident) {
  if (ident.size() < 2 || (ident[0] != 'X' && ident[0] != 'x')) return false;
  for (std::size_t i = 1; i < ident.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(ident[i]))) return false;
  }
  return true;
}

}  // namespace

Condition Condition::always() {
  Condition c;
  c.any_of_.push_back({});
  c.text_ = "otherwise";
  return c;
}

Condition Condition::parse(std::string_view text) {
  Condition cond;
  cond.text_ = std::string(text);
  const auto tokens = tokenize(text);
  std::size_t i = 0;
  auto fail = [&](const std::string& what) -> Error {
    return Error("condition '" + std::string(text) + "': " + what + " at " +
                 std::to_string(tokens[i].pos));
  };

  if (tokens.size() == 2 && tokens[0].kind == Token::Kind::ident &&
      (tokens[0].text == "true" || tokens[0].text == "otherwise")) {
    return always();
  }

  Conjunction conj;
  for (;;) {
    Comparison cmp;
    // sum
    for (;;) {
      const auto& t = tokens[i];
      if (t.kind == Token::Kind::ident && is_tier_ref(t.text)) {
        int k = std::stoi(t.text.substr(1));
        if (k < 1) throw fail("tier references start at X1");
        cmp.tiers.push_back(k);
      } else if (t.kind == Token::Kind::number) {
        cmp.constant += std::stoi(t.text);
      } else {
        throw fail("expected X<k> or an integer");
      }
      ++i;
      if (tokens[i].kind == Token::Kind::op && tokens[i].text == "+") {
        ++i;
        continue;
      }
      break;
    }
    const auto& op = tokens[i];
    if (op.kind != Token::Kind::op) throw fail("expected a comparison operator");
    if (op.text == "==") cmp.op = Comparison::Op::eq;
    else if (op.text == "!=") cmp.op = Comparison::Op::ne;
    else if (op.text == ">=") cmp.op = Comparison::Op::ge;
    else if (op.text == "<=") cmp.op = Comparison::Op::le;
    else if (op.text == ">") cmp.op = Comparison::Op::gt;
    else if (op.text == "<") cmp.op = Comparison::Op::lt;
    else throw fail("expected a comparison operator");
    ++i;
    if (tokens[i].kind != Token::Kind::number) throw fail("expected an integer");
    cmp.rhs = std::stoi(tokens[i].text);
    ++i;
    conj.push_back(std::move(cmp));

    const auto& t = tokens[i];
    if (t.kind == Token::Kind::end) {
      cond.any_of_.push_back(std::move(conj));
      break;
    }
    if ((t.kind == Token::Kind::ident && t.text == "and") ||
        (t.kind == Token::Kind::op && t.text == "&&")) {
      ++i;
      continue;
    }
    if ((t.kind == Token::Kind::ident && t.text == "or") ||
        (t.kind == Token::Kind::op && t.text == "||")) {
      cond.any_of_.push_back(std::move(conj));
      conj.clear();
      ++i;
      continue;
    }
    throw fail("expected 'and', 'or' or end of condition");
  }
  return cond;
}

bool Condition::matches(const std::vector<int>& counts) const {
  for (const auto& conj : any_of_) {
    bool all = true;
    for (const auto& cmp : conj) {
      int lhs = cmp.constant;
      for (int k : cmp.tiers) {
        if (k > static_cast<int>(counts.size())) {
          throw Error("condition '" + text_ + "' references X" + std::to_string(k) +
                      " but the profile has " + std::to_string(counts.size()) + " tiers");
        }
        lhs += counts[static_cast<std::size_t>(k - 1)];
      }
      bool ok = false;
      switch (cmp.op) {
        case Comparison::Op::eq: ok = lhs == cmp.rhs; break;
        case Comparison::Op::ne: ok = lhs != cmp.rhs; break;
        case Comparison::Op::ge: ok = lhs >= cmp.rhs; break;
        case Comparison::Op::le: ok = lhs <= cmp.rhs; break;
        case Comparison::Op::gt: ok = lhs > cmp.rhs; break;
        case Comparison::Op::lt: ok = lhs < cmp.rhs; break;
      }
      if (!ok) {
        all = false;
        break;
      }
    }
    if (all) return true;
  }
  return false;
}

bool Condition::is_catch_all() const {
  for (const auto& conj : any_of_) {
    if (conj.empty()) return true;
  }
  return false;
}

int Condition::max_tier_referenced() const {
  int m = 0;
  for (const auto& conj : any_of_) {
    for (const auto& cmp : conj) {
      for (int k : cmp.tiers) m = std::max(m, k);
    }
  }
  return m;
}

MappingTable::MappingTable(std::vector<Entry> entries, std::string scheme_id)
    : entries_(std::move(entries)), scheme_id_(std::move(scheme_id)) {}

MappingTable MappingTable::default_five_trial() {
  return MappingTable({
      {Condition::parse("X1 == 5 or X1 + X2 >= 7"), 1},
      {Condition::parse("X2 == 5"), 2},
      {Condition::parse("X3 == 5"), 3},
      {Condition::parse("X2 >= 2 or X3 >= 2"), 4},
      {Condition::always(), 5},
  });
}

MappingTable MappingTable::from_json(const json& j, std::string scheme_id) {
  if (!j.is_array()) throw Error("mapping table must be a JSON array");
  std::vector<Entry> entries;
  for (const auto& e : j) {
    entries.push_back({Condition::parse(e.at("when").get<std::string>()), e.at("level").get<int>()});
  }
  return MappingTable(std::move(entries), std::move(scheme_id));
}

ordered_json MappingTable::to_json() const {
  ordered_json out = ordered_json::array();
  for (const auto& e : entries_) out.push_back({{"when", e.when.text()}, {"level", e.level}});
  return out;
}

std::vector<std::string> MappingTable::validate(std::size_t tier_count, int trials) const {
  std::vector<std::string> problems;
  LevelScheme scheme;
  try {
    scheme = LevelScheme::by_id(scheme_id_);
  } catch (const Error& e) {
    problems.push_back(e.what());
    return problems;
  }
  if (entries_.empty()) {
    problems.push_back("mapping table is empty");
    return problems;
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (!scheme.contains(e.level)) {
      problems.push_back("mapping entry " + std::to_string(i + 1) + ": level " +
                         std::to_string(e.level) + " outside " + scheme.id + " range");
    }
    if (e.when.max_tier_referenced() > static_cast<int>(tier_count)) {
      problems.push_back("mapping entry " + std::to_string(i + 1) + ": '" + e.when.text() +
                         "' references a tier beyond K=" + std::to_string(tier_count));
    }
  }
  if (!entries_.back().when.is_catch_all()) {
    problems.push_back("mapping table must end with a catch-all entry ('otherwise')");
  }
  if (trials < 1) problems.push_back("M must be >= 1");
  return problems;
}

int MappingTable::level_for(const std::vector<int>& counts) const {
  for (const auto& e : entries_) {
    if (e.when.matches(counts)) return e.level;
  }
  throw Error("no mapping entry matches the profile");
}

}  // namespace tierroute
