#include "tierroute/verifier.h"

namespace tierroute {

std::string_view to_string(VerdictKind kind) {
  switch (kind) {
    case VerdictKind::pass:
      return "pass";
    case VerdictKind::fail:
      return "fail";
    case VerdictKind::error:
      return "error";
    case VerdictKind::timeout:
      return "timeout";
  }
  return "error";
}

VerdictKind verdict_kind_from_string(std::string_view s) {
  if (s == "pass") return VerdictKind::pass;
  if (s == "fail") return VerdictKind::fail;
  if (s == "error") return VerdictKind::error;
  if (s == "timeout") return VerdictKind::timeout;
  throw Error("unknown verdict kind '" + std::string(s) + "'");
}

ordered_json Verdict::to_json() const {
  return {{"kind", to_string(kind)}, {"detail", detail}, {"duration_ms", duration_ms}};
}

Verdict Verdict::from_json(const json& j) {
  Verdict v;
  v.kind = verdict_kind_from_string(j.at("kind").get<std::string>());
  v.detail = j.value("detail", std::string());
  v.duration_ms = j.value("duration_ms", std::int64_t{0});
  return v;
}

std::string code_hash(std::string_view code) { return sha256_hex(code); }

void StubVerifier::script(std::string task_id, std::string_view code, Verdict verdict) {
  table_[{std::move(task_id), code_hash(code)}] = std::move(verdict);
}

StubVerifier StubVerifier::from_jsonl(std::string_view text, std::string_view source) {
  StubVerifier stub;
  for (const auto& line : parse_jsonl(text, source)) {
    const auto& j = line.value;
    try {
      std::string hash = j.contains("code_hash") ? j.at("code_hash").get<std::string>()
                                                 : code_hash(j.at("code").get<std::string>());
      stub.table_[{j.at("task_id").get<std::string>(), std::move(hash)}] = Verdict::from_json(j);
    } catch (const std::exception& e) {
      throw Error(std::string(source) + ":" + std::to_string(line.line_number) + ": " + e.what());
    }
  }
  return stub;
}

Verdict stub_verify(const VerifyRequest& req, const std::map<StubVerifier::Key, Verdict>& table) {
  auto it = table.find({req.task_id, code_hash(req.candidate_code)});
  if (it == table.end()) return {VerdictKind::error, "unscripted", 0};
  return it->second;
}

Verdict StubVerifier::verify(const VerifyRequest& req) { return stub_verify(req, table_); }

}  // namespace tierroute
