#include <cstdio>
#include <fstream>
#include <string>

#include "doctest.h"
#include "csv_io.hpp"
#include "rng.hpp"

using namespace recidx;

namespace {

std::string temp_path(const char* name) {
  return std::string("csvtest_") + name;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out);
  out << text;
}

}  // namespace

TEST_CASE("round trip is exact") {
  DetRng rng(29);
  std::vector<CsvRecord> rows;
  for (int i = 0; i < 20; ++i) {
    CsvRecord r;
    r.id = "row_" + std::to_string(i);
    r.label = (i % 4 == 0) ? -1 : i % 5;
    for (int k = 0; k < 3; ++k) r.x.push_back(rng.gaussian() * std::pow(10.0, i % 7 - 3));
    rows.push_back(r);
  }
  const std::string path = temp_path("roundtrip.csv");
  write_embedding_csv(path, rows);
  const std::vector<CsvRecord> back = read_embedding_csv(path);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].id == rows[i].id);
    CHECK(back[i].label == rows[i].label);
    CHECK(back[i].x == rows[i].x);  // bit-exact through 17 significant digits
  }
  // writing the parsed rows again reproduces the file byte for byte
  const std::string again = temp_path("roundtrip2.csv");
  write_embedding_csv(again, back);
  CHECK(slurp(path) == slurp(again));
  std::remove(path.c_str());
  std::remove(again.c_str());
}

TEST_CASE("header is exact") {
  const std::string path = temp_path("header.csv");
  write_embedding_csv(path, {{"a", 0, {1.0, 2.0}}});
  const std::string text = slurp(path);
  CHECK(text.rfind("id,label,x0,x1\n", 0) == 0);
  std::remove(path.c_str());
}

TEST_CASE("malformed input diagnostics") {
  const std::string path = temp_path("bad.csv");

  spit(path, "id,label,x0\nrow,0,not_a_number\n");
  CHECK_THROWS_WITH_AS(read_embedding_csv(path),
                       doctest::Contains(":2: column 3"), Error);

  spit(path, "id,label\nrow,0\n");
  CHECK_THROWS_AS(read_embedding_csv(path), Error);  // no x columns

  spit(path, "id,label,x0,x9\nrow,0,1,2\n");
  CHECK_THROWS_AS(read_embedding_csv(path), Error);  // header names off

  spit(path, "id,label,x0\nrow,0,1.0,9.0\n");
  CHECK_THROWS_AS(read_embedding_csv(path), Error);  // extra field

  spit(path, "id,label,x0\nrow,zero,1.0\n");
  CHECK_THROWS_AS(read_embedding_csv(path), Error);  // label not an integer

  spit(path, "id,label,x0\nrow,0,inf\n");
  CHECK_THROWS_AS(read_embedding_csv(path), Error);  // non-finite value

  try {
    spit(path, "id,label,x0\nrow,0,nope\n");
    read_embedding_csv(path);
    FAIL("expected CsvError");
  } catch (const Error& e) {
    CHECK(e.code() == Err::CsvError);
    CHECK(std::string(e.what()).find(path) != std::string::npos);
  }
  std::remove(path.c_str());

  CHECK_THROWS_AS(read_embedding_csv("does_not_exist.csv"), Error);
}

TEST_CASE("carriage returns and blank lines are tolerated") {
  const std::string path = temp_path("crlf.csv");
  spit(path, "id,label,x0,x1\r\nrow,1,0.5,-0.25\r\n\n");
  const std::vector<CsvRecord> rows = read_embedding_csv(path);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].label == 1);
  CHECK(rows[0].x[1] == -0.25);
  std::remove(path.c_str());
}

TEST_CASE("difficulty marks") {
  CHECK(id_marks_hard("c003_h017"));
  CHECK_FALSE(id_marks_hard("c003_e017"));
  CHECK_FALSE(id_marks_hard("ui_0042"));
}

TEST_CASE("fmt_g17 round trips doubles") {
  DetRng rng(31);
  for (int i = 0; i < 200; ++i) {
    const double x = rng.gaussian() * std::pow(10.0, static_cast<int>(rng.uniform_below(12)) - 6);
    CHECK(std::stod(fmt_g17(x)) == x);
  }
  CHECK(fmt_g17(0.5) == "0.5");
}
