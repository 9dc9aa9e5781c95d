#include "pem/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace pem {

std::string hex(Value v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
  return buf;
}

Value parse_hex(const std::string& s) {
  std::size_t pos = 0;
  Value v = 0;
  try {
    v = std::stoull(s, &pos, 0);
  } catch (const std::exception&) {
    throw FormatError("bad number '" + s + "'");
  }
  if (pos != s.size()) throw FormatError("bad number '" + s + "'");
  return v;
}

nlohmann::json to_json(const RunResult& run) {
  nlohmann::json ov = nlohmann::json::array();
  for (const auto& [k, n] : run.ov.sorted())
    ov.push_back({{"kind", to_string(k.kind)}, {"value", hex(k.value)}, {"count", n}});
  nlohmann::json preds = nlohmann::json::array();
  for (const PredicateInstance& p : run.predicates)
    preds.push_back({{"ic", p.ic},
                     {"predicate", p.predicate},
                     {"selectivity", hex(p.selectivity)},
                     {"outcome", p.outcome}});
  nlohmann::json forced = nlohmann::json::object();
  if (run.path)
    for (const auto& [ic, target] : run.path->forced) forced[std::to_string(ic)] = target;
  return {{"ov", ov},
          {"predicates", preds},
          {"covered_blocks", run.covered_blocks},
          {"terminated", to_string(run.terminated)},
          {"steps", run.steps},
          {"path", forced}};
}

nlohmann::json to_json(const Signature& sig) {
  nlohmann::json values = nlohmann::json::array();
  for (const auto& [k, n] : sig.values)
    values.push_back({{"kind", to_string(k.kind)}, {"value", hex(k.value)}, {"count", n}});
  return {{"format", "pem-signature"}, {"version", kSignatureVersion}, {"program", sig.program_name},
          {"values", values}};
}

Signature signature_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "pem-signature") throw FormatError("not a signature file");
    const int version = j.at("version").get<int>();
    if (version != kSignatureVersion)
      throw FormatError("signature version " + std::to_string(version) + " is not supported (expected " +
                        std::to_string(kSignatureVersion) + ")");
    Signature sig;
    sig.program_name = j.at("program").get<std::string>();
    for (const auto& e : j.at("values")) {
      ValueKey k{value_kind_from_string(e.at("kind").get<std::string>()), parse_hex(e.at("value").get<std::string>())};
      const auto n = e.at("count").get<std::uint64_t>();
      if (n == 0) throw FormatError("signature counts must be positive");
      sig.values.emplace_back(k, n);
    }
    std::sort(sig.values.begin(), sig.values.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < sig.values.size(); ++i)
      if (sig.values[i].first == sig.values[i - 1].first) throw FormatError("duplicate signature entry");
    return sig;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed signature: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
}

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void dump(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

Program read_program(const std::filesystem::path& path) {
  return parse(slurp(path), path.stem().string());
}

void write_program(const std::filesystem::path& path, const Program& program) { dump(path, emit(program)); }

Signature read_signature(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(slurp(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return signature_from_json(j);
}

void write_signature(const std::filesystem::path& path, const Signature& sig) {
  dump(path, to_json(sig).dump(1) + "\n");
}

void write_matrix_csv(std::ostream& out, const std::vector<Signature>& queries, const std::vector<Signature>& pool) {
  out << "query,target,score\n";
  for (const Signature& q : queries)
    for (const Signature& t : pool) {
      char score[32];
      std::snprintf(score, sizeof score, "%.6f", jaccard(q, t));
      out << q.program_name << ',' << t.program_name << ',' << score << '\n';
    }
}

}  // namespace pem
