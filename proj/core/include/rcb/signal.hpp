#pragma once

// Time-series inputs: power references and energy prices.
//
// CSV layout, one header line declaring the unit, then (index, value) rows:
//
//   k,p_ref[kW]        k,price[$/MWh]
//   0,12.5             0,31.2
//   1,13.0             1,29.8
//
// Power units: W, kW, MW (returned in kW). Price units: $/kWh, $/MWh
// (returned in $/kWh). Indices must count up from 0.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rcb/types.hpp"

namespace rcb {

enum class SignalKind { PowerReference, Price };

struct SignalFile {
  SignalKind kind;
  std::string unit;            ///< as declared in the header
  std::vector<double> values;  ///< converted to kW or $/kWh
};

/// Throws ParseError carrying the 1-based line number of the offending row.
SignalFile parse_signal_csv(std::string_view text);
SignalFile read_signal_file(const std::filesystem::path& path);

/// First `expected_length` values of a signal file. Longer files are
/// truncated; shorter ones throw Error(LengthMismatch).
std::vector<double> load_signal(const std::filesystem::path& path, std::size_t expected_length);

/// Writes in kW or $/kWh with a matching header.
std::string format_signal_csv(SignalKind kind, const std::vector<double>& values);
void write_signal_file(const std::filesystem::path& path, SignalKind kind,
                       const std::vector<double>& values);

/// Slow sinusoid with a net charging bias, a discharge block and a charge
/// step, plus small seeded noise. Sized to the fleet's aggregate power so
/// the tracked energy overruns the composite capacity. kW per scheduler step.
std::vector<double> synthetic_tracking_reference(const FleetParams& fleet, const TimeGrid& grid,
                                                 std::uint64_t seed);

/// Day-ahead style price curve in $/kWh: morning and evening peaks, a
/// negative-price solar trough at midday, and seeded noise.
std::vector<double> synthetic_price_day(const TimeGrid& grid, std::uint64_t seed);

/// Resolves "synthetic:tracking", "synthetic:price" or "synthetic:zero";
/// anything else is read as a file path relative to `base_dir`.
std::vector<double> resolve_signal(std::string_view source, SignalKind kind,
                                   const FleetParams& fleet, const TimeGrid& grid,
                                   std::uint64_t seed, const std::filesystem::path& base_dir);

}  // namespace rcb
