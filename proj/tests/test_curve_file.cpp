#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <limits>

#include "bcsprobe/io/curve_file.hpp"
#include "bcsprobe/version.hpp"

using namespace bcsprobe;

namespace {

io::CurveFile sample() {
  io::CurveFile f;
  f.set_meta("kind", "test");
  f.set_config_hash("{\"a\":1}");
  f.add_column("q", "k_F");
  f.add_column("gamma", "E_F");
  f.add_row({0.1, 1.0 / 3.0});
  f.add_row({0.2, std::numeric_limits<double>::quiet_NaN()});
  f.add_row({0.3, std::numeric_limits<double>::infinity()});
  f.add_row({0.4, -std::numeric_limits<double>::infinity()});
  f.add_row({5e-324, -1.2345678901234567e+300});
  return f;
}

}  // namespace

TEST_CASE("hash and number formatting") {
  CHECK(io::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(io::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(io::hex64(0xabcULL) == "0000000000000abc");
  CHECK(io::format_double(0.1) == "0.10000000000000001");
  CHECK(io::format_double(std::nan("")) == "nan");
  CHECK(io::format_double(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(std::isnan(io::parse_double("nan")));
  CHECK(io::parse_double("inf") == std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(io::parse_double("1.0x"), io::FormatError);
  CHECK_THROWS_AS(io::parse_double(""), io::FormatError);
}

TEST_CASE("metadata is always stamped") {
  const io::CurveFile f;
  CHECK(f.meta("units") == units_convention);
  CHECK(f.meta("version") == version);
  CHECK_FALSE(f.meta("missing").has_value());
  const auto s = sample();
  CHECK(s.meta("config_hash") == "fnv1a64:" + io::hex64(io::fnv1a64("{\"a\":1}")));
}

TEST_CASE("csv round trip is exact") {
  const auto f = sample();
  const auto text = io::to_csv(f);
  const auto g = io::from_csv(text);
  CHECK(io::same_contents(f, g));
  CHECK(io::to_csv(g) == text);
  CHECK(g.column("gamma").values[0] == 1.0 / 3.0);
}

TEST_CASE("json round trip is exact") {
  const auto f = sample();
  const auto j = io::to_json(f);
  CHECK(j.at("columns").at(1).at("values").at(1).is_null());
  const auto g = io::from_json(nlohmann::ordered_json::parse(j.dump()));
  CHECK(io::same_contents(f, g));
}

TEST_CASE("files on disk") {
  const auto dir = std::filesystem::temp_directory_path() / "bcsprobe_curve_test";
  std::filesystem::create_directories(dir);
  const auto f = sample();
  io::write_csv(dir / "a.csv", f);
  io::write_json(dir / "a.json", f);
  CHECK(io::same_contents(io::read_csv(dir / "a.csv"), f));
  CHECK(io::same_contents(io::read_json(dir / "a.json"), f));
  std::filesystem::remove_all(dir);
  CHECK_THROWS(io::read_text(dir / "a.csv"));
}

TEST_CASE("malformed input is rejected") {
  io::CurveFile f;
  f.add_column("x", "");
  f.add_row({1.0});
  CHECK_THROWS_AS(f.add_column("y", ""), io::FormatError);
  CHECK_THROWS_AS(f.add_row({1.0, 2.0}), io::FormatError);
  CHECK_THROWS_AS(f.column("y"), io::FormatError);
  CHECK_THROWS_AS(f.set_meta("a:b", "c"), io::FormatError);
  CHECK_THROWS_AS(f.set_meta("a", "c\nd"), io::FormatError);
  CHECK_THROWS_AS(io::from_csv("# column_units: a,b\nx,y\n1,2,3\n"), io::FormatError);
  CHECK_THROWS_AS(io::from_csv("# column_units: a\nx,y\n1,2\n"), io::FormatError);
  CHECK_THROWS_AS(io::from_csv("# just a comment\n"), io::FormatError);

  io::CurveFile g = f;
  g.set_meta("extra", "1");
  CHECK_FALSE(io::same_contents(f, g));
}
