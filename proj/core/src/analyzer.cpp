#include "pem/analyzer.hpp"

#include <algorithm>
#include <stdexcept>

namespace pem {

std::uint64_t Signature::total() const {
  std::uint64_t t = 0;
  for (const auto& [k, n] : values) t += n;
  return t;
}

ObservableValues aggregate(const std::vector<RunResult>& runs) {
  ObservableValues ov;
  for (const RunResult& r : runs) ov.merge(r.ov);
  return ov;
}

Value truncate_string(Value v, std::size_t max_len) {
  Value out = 0;
  const std::size_t n = std::min<std::size_t>(max_len, sizeof(Value));
  for (std::size_t i = 0; i < n; ++i) {
    const Value byte = (v >> (8 * i)) & 0xff;
    if (byte == 0) break;
    out |= byte << (8 * i);
  }
  return out;
}

namespace {

Signature finish(std::vector<std::pair<ValueKey, std::uint64_t>> entries, std::string name,
                 const NormalizeConfig& config) {
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  // Merge keys that collapsed onto each other.
  std::vector<std::pair<ValueKey, std::uint64_t>> merged;
  for (auto& e : entries) {
    if (!merged.empty() && merged.back().first == e.first) merged.back().second += e.second;
    else merged.push_back(e);
  }
  if (merged.size() > config.top_k) {
    std::stable_sort(merged.begin(), merged.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    merged.resize(config.top_k);
    std::sort(merged.begin(), merged.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  }
  return {std::move(name), std::move(merged)};
}

bool map_key(ValueKey& k, const NormalizeConfig& config) {
  if (k.kind == ValueKind::JumpTarget) return false;
  if (k.kind == ValueKind::MemString) k.value = truncate_string(k.value, config.string_len);
  if (config.kind_blind) k.kind = ValueKind::MemVal;
  return true;
}

}  // namespace

Signature normalize(const ObservableValues& raw, std::string program_name, const NormalizeConfig& config) {
  std::vector<std::pair<ValueKey, std::uint64_t>> entries;
  entries.reserve(raw.distinct());
  for (const auto& [key, n] : raw.counts()) {
    ValueKey k = key;
    if (n == 0 || !map_key(k, config)) continue;
    entries.emplace_back(k, n);
  }
  return finish(std::move(entries), std::move(program_name), config);
}

Signature normalize(const Signature& sig, const NormalizeConfig& config) {
  std::vector<std::pair<ValueKey, std::uint64_t>> entries;
  entries.reserve(sig.values.size());
  for (const auto& [key, n] : sig.values) {
    ValueKey k = key;
    if (n == 0 || !map_key(k, config)) continue;
    entries.emplace_back(k, n);
  }
  return finish(std::move(entries), sig.program_name, config);
}

double jaccard(const Signature& a, const Signature& b) {
  std::uint64_t num = 0;
  std::uint64_t den = 0;
  auto i = a.values.begin();
  auto j = b.values.begin();
  while (i != a.values.end() || j != b.values.end()) {
    if (j == b.values.end() || (i != a.values.end() && i->first < j->first)) {
      den += i->second;
      ++i;
    } else if (i == a.values.end() || j->first < i->first) {
      den += j->second;
      ++j;
    } else {
      num += std::min(i->second, j->second);
      den += std::max(i->second, j->second);
      ++i;
      ++j;
    }
  }
  if (den == 0) return 1.0;
  return static_cast<double>(num) / static_cast<double>(den);
}

Ranking rank(const Signature& query, const std::vector<const Signature*>& pool) {
  if (pool.empty()) throw std::invalid_argument("ranking pool is empty");
  Ranking out;
  out.reserve(pool.size());
  for (const Signature* s : pool) out.emplace_back(s->program_name, jaccard(query, *s));
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    if (x.second != y.second) return x.second > y.second;
    return x.first < y.first;
  });
  return out;
}

Ranking rank(const Signature& query, const std::vector<Signature>& pool) {
  std::vector<const Signature*> ptrs;
  ptrs.reserve(pool.size());
  for (const Signature& s : pool) ptrs.push_back(&s);
  return rank(query, ptrs);
}

double pr_at_k(const std::vector<Ranking>& rankings, const std::vector<std::string>& truth, std::size_t k) {
  if (rankings.size() != truth.size()) throw std::invalid_argument("one ground-truth name per query required");
  if (rankings.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t q = 0; q < rankings.size(); ++q) {
    const std::size_t limit = std::min(k, rankings[q].size());
    for (std::size_t r = 0; r < limit; ++r)
      if (rankings[q][r].first == truth[q]) {
        ++hits;
        break;
      }
  }
  return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

}  // namespace pem
