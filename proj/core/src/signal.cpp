#include "rcb/signal.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "rcb/errors.hpp"
#include "rcb/problem_io.hpp"

namespace rcb {

namespace {

ParseError row_error(std::size_t line, const std::string& message) {
  return ParseError(line, "line " + std::to_string(line) + ": " + message);
}

struct UnitInfo {
  SignalKind kind;
  double scale;  // multiply file values by this
};

UnitInfo unit_info(std::string_view unit, std::size_t line) {
  if (unit == "kW") return {SignalKind::PowerReference, 1.0};
  if (unit == "MW") return {SignalKind::PowerReference, 1000.0};
  if (unit == "W") return {SignalKind::PowerReference, 0.001};
  if (unit == "$/kWh") return {SignalKind::Price, 1.0};
  if (unit == "$/MWh") return {SignalKind::Price, 0.001};
  throw row_error(line, "unknown unit '" + std::string(unit) + "'");
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

SignalFile parse_signal_csv(std::string_view text) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto next_line = [&](std::string_view& out) {
    if (pos >= text.size()) return false;
    const std::size_t end = text.find('\n', pos);
    out = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = end == std::string_view::npos ? text.size() : end + 1;
    ++line_no;
    return true;
  };

  std::string_view header;
  if (!next_line(header) || trim(header).empty()) throw row_error(1, "missing header line");
  header = trim(header);
  const std::size_t comma = header.find(',');
  const std::size_t open = header.find('[');
  const std::size_t close = header.rfind(']');
  if (comma == std::string_view::npos || open == std::string_view::npos ||
      close == std::string_view::npos || close < open || open < comma) {
    throw row_error(1, "header must look like 'k,name[unit]'");
  }
  SignalFile file;
  file.unit = std::string(header.substr(open + 1, close - open - 1));
  const UnitInfo info = unit_info(file.unit, 1);
  file.kind = info.kind;

  std::string_view line;
  while (next_line(line)) {
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t c = line.find(',');
    if (c == std::string_view::npos) throw row_error(line_no, "expected 'index,value'");
    const std::string_view idx_text = trim(line.substr(0, c));
    const std::string value_text(trim(line.substr(c + 1)));
    std::size_t index = 0;
    auto [ptr, ec] = std::from_chars(idx_text.data(), idx_text.data() + idx_text.size(), index);
    if (ec != std::errc() || ptr != idx_text.data() + idx_text.size()) {
      throw row_error(line_no, "index is not a nonnegative integer");
    }
    if (index != file.values.size()) {
      throw row_error(line_no, "expected index " + std::to_string(file.values.size()));
    }
    double value = 0.0;
    std::size_t used = 0;
    try {
      value = std::stod(value_text, &used);
    } catch (const std::exception&) {
      throw row_error(line_no, "value is not a number");
    }
    if (used != value_text.size()) throw row_error(line_no, "trailing characters after value");
    if (!std::isfinite(value)) throw row_error(line_no, "value is not finite");
    file.values.push_back(value * info.scale);
  }
  return file;
}

SignalFile read_signal_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open signal file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_signal_csv(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(e.row(), path.string() + ": " + e.what());
  }
}

std::vector<double> load_signal(const std::filesystem::path& path, std::size_t expected_length) {
  SignalFile file = read_signal_file(path);
  if (file.values.size() < expected_length) {
    throw Error(ErrorCode::LengthMismatch, path.string() + " has " +
                                               std::to_string(file.values.size()) +
                                               " values, need " + std::to_string(expected_length));
  }
  file.values.resize(expected_length);
  return file.values;
}

std::string format_signal_csv(SignalKind kind, const std::vector<double>& values) {
  std::ostringstream out;
  out << (kind == SignalKind::Price ? "k,price[$/kWh]\n" : "k,p_ref[kW]\n");
  for (std::size_t k = 0; k < values.size(); ++k) out << k << ',' << format_number(values[k]) << '\n';
  return out.str();
}

void write_signal_file(const std::filesystem::path& path, SignalKind kind,
                       const std::vector<double>& values) {
  std::ofstream out(path, std::ios::binary);
  out << format_signal_csv(kind, values);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
}

std::vector<double> synthetic_tracking_reference(const FleetParams& fleet, const TimeGrid& grid,
                                                 std::uint64_t seed) {
  const double p = static_cast<double>(fleet.n) * fleet.element.p_c_max;
  const double dt = grid.delta_t_sched();
  const double horizon = dt * static_cast<double>(grid.k_steps());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(-0.00994, 0.00994);

  std::vector<double> ref(grid.k_steps());
  for (std::size_t k = 0; k < ref.size(); ++k) {
    const double t = dt * static_cast<double>(k);
    const double x = t / horizon;
    double r = 0.03976 + 0.2982 * std::sin(2.0 * std::numbers::pi * t / 8.0);
    if (x >= 0.25 && x < 0.35) r += 0.2982;
    if (x >= 0.55 && x < 0.70) r -= 0.497;
    r += noise(rng);
    ref[k] = p * r;
  }
  return ref;
}

std::vector<double> synthetic_price_day(const TimeGrid& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(-3.0, 3.0);
  auto bump = [](double h, double centre, double width) {
    const double z = (h - centre) / width;
    return std::exp(-z * z);
  };
  std::vector<double> price(grid.k_steps());
  for (std::size_t k = 0; k < price.size(); ++k) {
    const double h = std::fmod(grid.delta_t_sched() * static_cast<double>(k), 24.0);
    const double usd_per_mwh = 30.0 + 60.0 * bump(h, 8.0, 1.5) + 120.0 * bump(h, 19.0, 1.5) -
                               45.0 * bump(h, 13.0, 1.8) + noise(rng);
    price[k] = usd_per_mwh / 1000.0;
  }
  return price;
}

std::vector<double> resolve_signal(std::string_view source, SignalKind kind,
                                   const FleetParams& fleet, const TimeGrid& grid,
                                   std::uint64_t seed, const std::filesystem::path& base_dir) {
  if (source == "synthetic:zero") return std::vector<double>(grid.k_steps(), 0.0);
  if (source == "synthetic:tracking") {
    if (kind != SignalKind::PowerReference) {
      throw Error(ErrorCode::InvalidConfig, "synthetic:tracking is a power reference, not a price");
    }
    return synthetic_tracking_reference(fleet, grid, seed);
  }
  if (source == "synthetic:price") {
    if (kind != SignalKind::Price) {
      throw Error(ErrorCode::InvalidConfig, "synthetic:price is a price, not a power reference");
    }
    return synthetic_price_day(grid, seed);
  }
  if (source.starts_with("synthetic:")) {
    throw Error(ErrorCode::InvalidConfig, "unknown synthetic signal '" + std::string(source) + "'");
  }
  std::filesystem::path path(source);
  if (path.is_relative()) path = base_dir / path;
  const SignalFile file = read_signal_file(path);
  if (file.kind != kind) {
    throw Error(ErrorCode::InvalidConfig, path.string() + " declares unit " + file.unit +
                                              ", which does not match the objective");
  }
  if (file.values.size() < grid.k_steps()) {
    throw Error(ErrorCode::LengthMismatch, path.string() + " has " +
                                               std::to_string(file.values.size()) +
                                               " values, need " + std::to_string(grid.k_steps()));
  }
  return {file.values.begin(), file.values.begin() + static_cast<std::ptrdiff_t>(grid.k_steps())};
}

}  // namespace rcb
