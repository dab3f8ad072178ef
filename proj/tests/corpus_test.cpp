#include <random>
#include <set>

#include "doctest.h"
#include "tierroute/corpus.h"

using namespace tierroute;

namespace {

std::string row(const std::string& id, const std::string& text,
                const std::vector<std::string>& tests) {
  ordered_json j{{"task_id", id}, {"text", text}, {"code", "pass"}, {"test_list", tests}};
  return j.dump() + "\n";
}

std::map<std::string, SuccessProfile> profiles_for(
    const std::vector<std::pair<std::string, std::vector<int>>>& rows) {
  std::map<std::string, SuccessProfile> out;
  for (const auto& [id, counts] : rows) out[id] = {id, counts, 5, true};
  return out;
}

Corpus corpus_of(std::vector<std::string> ids) {
  std::vector<Task> tasks;
  for (auto& id : ids) tasks.push_back({id, "Write a function " + id, std::nullopt, {"assert f(1)"}, {}});
  return Corpus(std::move(tasks), "test");
}

// Random text with the characters JSON escaping has to get right.
std::string random_text(std::mt19937_64& rng) {
  static const std::vector<std::string> pieces = {
      "a", "Z", " ", "\"", "\\", "\n", "\t", "\r", "é", "→", "{", "}", "[", "'", "0", "\x01"};
  std::string s;
  auto n = 1 + rng() % 12;
  for (std::size_t i = 0; i < n; ++i) s += pieces[rng() % pieces.size()];
  return s;
}

}  // namespace

TEST_CASE("ingest keeps every well-formed record") {
  auto src = row("a", "Write a function to add.", {"assert add(1, 2) == 3"}) +
             row("b", "Write a function to sub.", {"assert sub(3, 2) == 1"}) +
             row("c", "Write a function to mul.", {"assert mul(2, 2) == 4"});
  auto res = ingest(src, "three.jsonl");
  CHECK(res.corpus.size() == 3);
  CHECK(res.rejected.empty());
  CHECK(res.corpus.tasks()[1].task_id == "b");
  CHECK(res.corpus.tasks()[0].signature_hint == "add(int, int)");
}

TEST_CASE("ingest rejects a record with an empty test list and keeps the rest") {
  auto src = row("a", "Write a function.", {"assert f(1) == 1"}) + row("b", "Write g.", {}) +
             row("c", "Write h.", {"assert h() == 2"});
  auto res = ingest(src, "mixed.jsonl");
  CHECK(res.corpus.size() == 2);
  REQUIRE(res.rejected.size() == 1);
  CHECK(res.rejected[0].line == 2);
  CHECK(res.rejected[0].message == "empty test_list");
}

TEST_CASE("ingest reports malformed lines by number") {
  auto src = row("a", "Write f.", {"assert f(1)"}) + "{not json\n" + "[1,2]\n" +
             R"x({"task_id": "x", "test_list": ["assert f()"]})x" + "\n";
  auto res = ingest(src, "bad.jsonl");
  CHECK(res.corpus.size() == 1);
  REQUIRE(res.rejected.size() == 3);
  CHECK(res.rejected[0].line == 2);
  CHECK(res.rejected[1].line == 3);
  CHECK(res.rejected[2].line == 4);
  CHECK(res.rejected[2].message == "missing text");
}

TEST_CASE("ingest errors") {
  CHECK_THROWS_WITH_AS(ingest("", "empty.jsonl"), doctest::Contains("empty corpus"), Error);
  CHECK_THROWS_WITH_AS(ingest("\n  \n", "blank.jsonl"), doctest::Contains("empty corpus"), Error);

  auto dup = row("a", "Write f.", {"assert f(1)"}) + row("b", "Write g.", {"assert g(1)"}) +
             row("a", "Write f again.", {"assert f(2)"});
  CHECK_THROWS_WITH_AS(ingest(dup, "dup.jsonl"),
                       doctest::Contains("duplicate task_id a on lines 1 and 3"), Error);
}

TEST_CASE("signature hint for MBPP row 2 comes from its first assertion") {
  // The raw file holds: assert similar_elements((3, 4, 5, 6),(5, 7, 4, 10)) == (4, 5)
  auto raw = read_file(TIERROUTE_FIXTURES "/mbpp_sample.jsonl");
  auto res = ingest(raw, "mbpp_sample.jsonl");
  const Task* t = res.corpus.find("2");
  REQUIRE(t != nullptr);
  CHECK(t->assertions.front() == "assert similar_elements((3, 4, 5, 6),(5, 7, 4, 10)) == (4, 5)");
  CHECK(t->signature_hint == "similar_elements(tuple, tuple)");
  CHECK(res.corpus.find("1")->signature_hint == "min_cost(list, int, int)");
  CHECK(res.corpus.find("7")->signature_hint == "find_char_long(str)");
}

TEST_CASE("signature hint extraction edge cases") {
  CHECK(extract_signature_hint("assert set(f([1,2], 'a,b')) == set([1])") == "f(list, str)");
  CHECK(extract_signature_hint("assert math.isclose(area(3.0), 28.27, rel_tol=0.001)") ==
        "area(float)");
  CHECK(extract_signature_hint("assert not is_odd(-4)") == "is_odd(int)");
  CHECK(extract_signature_hint("assert g({1: 2}, {3}, None, True, x=b'z')") ==
        "g(dict, set, None, bool, bytes)");
  CHECK(extract_signature_hint("assert h() == 0") == "h()");
  CHECK_FALSE(extract_signature_hint("assert x == 5").has_value());
  CHECK_FALSE(extract_signature_hint("assert foo((1, 2) == 3").has_value());
  CHECK_FALSE(extract_signature_hint("assert foo('unterminated) == 3").has_value());
}

TEST_CASE("save and ingest round-trip") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Task> tasks;
    auto n = 1 + rng() % 6;
    for (std::size_t i = 0; i < n; ++i) {
      Task t;
      t.task_id = (rng() % 2) ? std::to_string(rng() % 1000 + i * 1000) : "id-" + random_text(rng) + std::to_string(i);
      t.prompt = random_text(rng);
      if (rng() % 3) t.reference_code = random_text(rng);
      auto na = 1 + rng() % 3;
      for (std::size_t a = 0; a < na; ++a) t.assertions.push_back("assert f(" + random_text(rng) + ")");
      t.signature_hint = extract_signature_hint(t.assertions.front());
      tasks.push_back(std::move(t));
    }
    Corpus c(std::move(tasks), "rt");
    const auto text = save(c);
    auto back = ingest(text, "rt");
    CHECK(back.rejected.empty());
    CHECK(back.corpus == c);
    CHECK(save(back.corpus) == text);
  }
}

TEST_CASE("clean removes only all-zero profiles") {
  auto c = corpus_of({"a", "b"});
  auto res = clean(c, profiles_for({{"a", {0, 0, 0}}, {"b", {0, 0, 1}}}));
  CHECK(res.corpus.size() == 1);
  CHECK(res.corpus.tasks()[0].task_id == "b");
  CHECK(res.removed == std::vector<std::string>{"a"});
  CHECK(res.report().dump() == R"({"removed":["a"],"reason":"all_zero_profile"})");

  auto five = corpus_of({"1", "2", "3", "4", "5"});
  auto p = profiles_for({{"1", {0, 0, 0}}, {"2", {5, 5, 5}}, {"3", {0, 0, 0}}, {"4", {1, 0, 0}},
                         {"5", {0, 2, 0}}});
  auto once = clean(five, p);
  CHECK(once.corpus.size() == 3);
  auto twice = clean(once.corpus, p);
  CHECK(twice.corpus == once.corpus);
  CHECK(twice.removed.empty());
}

TEST_CASE("clean requires a profile for every task") {
  auto c = corpus_of({"a", "b", "c"});
  CHECK_THROWS_WITH_AS(clean(c, profiles_for({{"a", {1, 0, 0}}})),
                       doctest::Contains("b c"), Error);
}

TEST_CASE("split sizes and determinism") {
  std::vector<std::string> ids;
  for (int i = 0; i < 180; ++i) ids.push_back("t" + std::to_string(i));
  auto big = corpus_of(ids);
  auto [train, test] = split(big, {0.8, 42});
  CHECK(train.size() == 144);
  CHECK(test.size() == 36);

  auto [train2, test2] = split(big, {0.8, 42});
  CHECK(train2 == train);
  CHECK(test2 == test);

  auto one = corpus_of({"only"});
  auto [t1, s1] = split(one, {0.8, 1});
  CHECK(t1.size() == 1);
  CHECK(s1.size() == 0);

  CHECK_THROWS_AS(split(big, {0.0, 1}), Error);
  CHECK_THROWS_AS(split(big, {1.0, 1}), Error);
  CHECK_THROWS_AS(split(big, {-0.5, 1}), Error);
  CHECK_THROWS_AS(split(Corpus{}, {0.5, 1}), Error);
}

TEST_CASE("split is a partition for arbitrary sizes and seeds") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t n = 1 + rng() % 300;
    double f = 0.01 + 0.98 * static_cast<double>(rng() % 1000) / 1000.0;
    auto [train, test] = split_indices(n, {f, rng()});
    CHECK(train.size() == static_cast<std::size_t>(std::llround(f * static_cast<double>(n))));
    std::set<std::size_t> all(train.begin(), train.end());
    for (auto i : test) CHECK(all.insert(i).second);
    CHECK(all.size() == n);
    CHECK(*all.rbegin() == n - 1);
  }
}
