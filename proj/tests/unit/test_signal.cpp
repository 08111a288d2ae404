#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "rcb/errors.hpp"
#include "rcb/signal.hpp"

using namespace rcb;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = RCB_FIXTURES;

std::size_t parse_row(std::string_view text) {
  try {
    parse_signal_csv(text);
  } catch (const ParseError& e) {
    return e.row();
  }
  FAIL("expected ParseError");
  return 0;
}

}  // namespace

TEST_CASE("price fixture: 96 quarter hours converted to $/kWh") {
  const SignalFile f = read_signal_file(kFixtures / "price_day.csv");
  CHECK(f.kind == SignalKind::Price);
  CHECK(f.unit == "$/MWh");
  REQUIRE(f.values.size() == 96);
  CHECK(f.values[0] == doctest::Approx(0.030));
  CHECK(f.values[52] == doctest::Approx(-0.015));
  CHECK(f.values[76] == doctest::Approx(0.150));
}

TEST_CASE("parse errors name the offending row") {
  CHECK(parse_row("") == 1);
  CHECK(parse_row("k,price[$/MWh]\n0,31.5\n1,nan\n") == 3);
  CHECK(parse_row("k,p_ref[kW]\n0,1\n2,3\n") == 3);
  CHECK(parse_row("k,p_ref[kW]\n0,1,2\n") == 2);
  CHECK(parse_row("k,p_ref[furlongs]\n0,1\n") == 1);
  CHECK(parse_row("k,p_ref[kW]\n0,abc\n") == 2);
  CHECK(parse_row("k,p_ref[kW]\n0,inf\n") == 2);
  try {
    read_signal_file(kFixtures / "price_nan.csv");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.row() == 3);
    CHECK(std::string(e.what()).find("price_nan.csv") != std::string::npos);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("power units convert to kW") {
  CHECK(parse_signal_csv("k,p_ref[W]\n0,1500\n").values[0] == doctest::Approx(1.5));
  CHECK(parse_signal_csv("k,p_ref[MW]\n0,0.25\n").values[0] == doctest::Approx(250.0));
  const SignalFile f = parse_signal_csv("k,p_ref[kW]\n0,-3\n1,4.5\n");
  CHECK(f.kind == SignalKind::PowerReference);
  CHECK(f.values == std::vector<double>{-3.0, 4.5});
  CHECK(parse_signal_csv("k,price[$/kWh]\n0,0.2\n").values[0] == 0.2);
}

TEST_CASE("load_signal truncates long files and rejects short ones") {
  CHECK(load_signal(kFixtures / "price_day.csv", 8).size() == 8);
  CHECK(load_signal(kFixtures / "price_day.csv", 96).size() == 96);
  try {
    load_signal(kFixtures / "price_day.csv", 97);
    FAIL("expected LengthMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LengthMismatch);
  }
  try {
    load_signal(kFixtures / "missing.csv", 4);
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Io);
  }
}

TEST_CASE("format and parse round trip") {
  const std::vector<double> v{1.0 / 3.0, -2.5, 0.0, 1e-7};
  for (SignalKind kind : {SignalKind::PowerReference, SignalKind::Price}) {
    const SignalFile f = parse_signal_csv(format_signal_csv(kind, v));
    CHECK(f.kind == kind);
    REQUIRE(f.values.size() == v.size());
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(f.values[i] == doctest::Approx(v[i]).epsilon(1e-11));
  }
  const fs::path tmp = fs::temp_directory_path() / "rcb_signal_roundtrip.csv";
  write_signal_file(tmp, SignalKind::Price, v);
  CHECK(read_signal_file(tmp).values.size() == 4);
  fs::remove(tmp);
}

TEST_CASE("synthetic tracking reference: deterministic and sized to the fleet") {
  const FleetParams fleet = FleetParams::uniform(100, ElementParams::powerwall(), 6.75);
  const TimeGrid grid = TimeGrid::build(0.05, 1, 480);
  const auto a = synthetic_tracking_reference(fleet, grid, 3);
  const auto b = synthetic_tracking_reference(fleet, grid, 3);
  const auto c = synthetic_tracking_reference(fleet, grid, 4);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  REQUIRE(a.size() == 480);
  double lo = 0.0;
  double hi = 0.0;
  for (double v : a) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(hi < 500.0);
  CHECK(lo > -500.0);
  CHECK(hi > 150.0);
  CHECK(lo < -250.0);
}

TEST_CASE("synthetic price day: two peaks and a negative trough") {
  const TimeGrid grid = TimeGrid::build(0.25, 1, 96);
  const auto p = synthetic_price_day(grid, 5);
  REQUIRE(p.size() == 96);
  CHECK(p == synthetic_price_day(grid, 5));
  CHECK(p[76] > p[32]);  // evening over morning
  CHECK(p[32] > p[0]);
  CHECK(p[52] < 0.0);
}

TEST_CASE("resolve_signal: synthetic sources and kind checks") {
  const FleetParams fleet = FleetParams::uniform(4, ElementParams::powerwall(), 6.75);
  const TimeGrid grid = TimeGrid::build(0.25, 1, 12);
  CHECK(resolve_signal("synthetic:zero", SignalKind::Price, fleet, grid, 0, {}) ==
        std::vector<double>(12, 0.0));
  CHECK(resolve_signal("synthetic:price", SignalKind::Price, fleet, grid, 1, {}).size() == 12);
  CHECK(resolve_signal("price_day.csv", SignalKind::Price, fleet, grid, 0, kFixtures).size() == 12);
  auto code = [&](std::string_view src, SignalKind kind) {
    try {
      resolve_signal(src, kind, fleet, grid, 0, kFixtures);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;
  };
  CHECK(code("synthetic:price", SignalKind::PowerReference) == ErrorCode::InvalidConfig);
  CHECK(code("synthetic:tracking", SignalKind::Price) == ErrorCode::InvalidConfig);
  CHECK(code("synthetic:wind", SignalKind::Price) == ErrorCode::InvalidConfig);
  CHECK(code("price_day.csv", SignalKind::PowerReference) == ErrorCode::InvalidConfig);
}
