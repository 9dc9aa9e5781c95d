#pragma once

// Signatures: aggregated, normalized observable values, and their comparison.

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pem/interp.hpp"
#include "pem/observable.hpp"

namespace pem {

struct NormalizeConfig {
  std::size_t top_k = 50'000;
  std::size_t string_len = 20;
  /// Fold every kind into one namespace before comparison.
  bool kind_blind = false;
};

struct Signature {
  std::string program_name;
  /// Sorted by key; counts positive.
  std::vector<std::pair<ValueKey, std::uint64_t>> values;

  std::uint64_t total() const;
  friend bool operator==(const Signature&, const Signature&) = default;
};

ObservableValues aggregate(const std::vector<RunResult>& runs);

/// Keeps the bytes of a string value up to its first zero byte, at most
/// `max_len` of them.
Value truncate_string(Value v, std::size_t max_len);

Signature normalize(const ObservableValues& raw, std::string program_name,
                    const NormalizeConfig& config = {});
/// Re-normalizing an existing signature; a no-op for normalized input.
Signature normalize(const Signature& sig, const NormalizeConfig& config = {});

/// Multiset Jaccard: sum of minima over sum of maxima. Two empty signatures
/// score 1.
double jaccard(const Signature& a, const Signature& b);

using Ranking = std::vector<std::pair<std::string, double>>;

/// Pool entries by descending score, ties by name.
Ranking rank(const Signature& query, const std::vector<Signature>& pool);
Ranking rank(const Signature& query, const std::vector<const Signature*>& pool);

/// Fraction of queries whose ground-truth name is in the top k of its ranking.
double pr_at_k(const std::vector<Ranking>& rankings, const std::vector<std::string>& truth, std::size_t k);

}  // namespace pem
