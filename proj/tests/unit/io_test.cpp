#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "pem/io.hpp"

namespace pem {
namespace {

Signature sample_signature() {
  ObservableValues ov;
  ov.add(ValueKind::MemAddr, 0x100008, 3);
  ov.add(ValueKind::MemString, 0x6261);
  ov.add(ValueKind::ExternSymbol, symbol_hash("puts"), 2);
  ov.add(ValueKind::PredicateSel, ~Value{0});
  return normalize(ov, "f1");
}

TEST(Hex, RoundTrip) {
  for (Value v : {Value{0}, Value{1}, Value{0xdead}, ~Value{0}}) EXPECT_EQ(parse_hex(hex(v)), v);
  EXPECT_EQ(hex(255), "0xff");
  EXPECT_THROW(parse_hex("zz"), FormatError);
  EXPECT_THROW(parse_hex("0x12q"), FormatError);
}

TEST(SignatureJson, RoundTrip) {
  const Signature s = sample_signature();
  EXPECT_EQ(signature_from_json(to_json(s)), s);
  const auto dir = std::filesystem::temp_directory_path() / "pem_io_test";
  std::filesystem::create_directories(dir);
  write_signature(dir / "s.json", s);
  EXPECT_EQ(read_signature(dir / "s.json"), s);
  std::filesystem::remove_all(dir);
}

TEST(SignatureJson, RejectsMalformedInput) {
  auto j = to_json(sample_signature());
  j["version"] = kSignatureVersion + 1;
  EXPECT_THROW(signature_from_json(j), FormatError);
  j = to_json(sample_signature());
  j["values"][0]["count"] = 0;
  EXPECT_THROW(signature_from_json(j), FormatError);
  j = to_json(sample_signature());
  j.erase("program");
  EXPECT_THROW(signature_from_json(j), FormatError);
  EXPECT_THROW(signature_from_json(nlohmann::json::array()), FormatError);
}

TEST(Files, MissingFilesRaiseIoError) {
  EXPECT_THROW(read_program("/nonexistent/x.pem"), IoError);
  EXPECT_THROW(read_signature("/nonexistent/x.json"), IoError);
}

TEST(Matrix, CsvRows) {
  const Signature a = sample_signature();
  Signature b = a;
  b.program_name = "f2";
  b.values.pop_back();  // drops the extern symbol, count 2 of 7
  std::ostringstream out;
  write_matrix_csv(out, {a}, {a, b});
  EXPECT_EQ(out.str(), "query,target,score\nf1,f1,1.000000\nf1,f2,0.714286\n");
}

}  // namespace
}  // namespace pem
