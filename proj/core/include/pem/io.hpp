#pragma once

// File formats: assembly programs, run results, signatures and score matrices.

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pem/analyzer.hpp"
#include "pem/interp.hpp"
#include "pem/ir.hpp"

namespace pem {

inline constexpr int kSignatureVersion = 1;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string hex(Value v);
Value parse_hex(const std::string& s);

nlohmann::json to_json(const RunResult& run);
nlohmann::json to_json(const Signature& sig);
/// Throws FormatError on malformed input or a version mismatch.
Signature signature_from_json(const nlohmann::json& j);

Program read_program(const std::filesystem::path& path);
void write_program(const std::filesystem::path& path, const Program& program);
Signature read_signature(const std::filesystem::path& path);
void write_signature(const std::filesystem::path& path, const Signature& sig);

/// CSV rows "query,target,score".
void write_matrix_csv(std::ostream& out, const std::vector<Signature>& queries, const std::vector<Signature>& pool);

}  // namespace pem
