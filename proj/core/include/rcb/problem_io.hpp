#pragma once

// Text serialization of OptProblem in two formats:
//
//   Lp   CPLEX-style LP subset: Minimize|Maximize, Subject To, Bounds,
//        Binaries, End. Every variable appears in Bounds in declaration
//        order, which fixes the variable order on parse. Quadratic
//        objective terms use "[ q x ^2 ] / 2".
//   Mps  free MPS ("NAME <name> FREE"): ROWS, COLUMNS with integer MARKER
//        blocks, RHS, BOUNDS, QUADOBJ (diagonal only), optional OBJSENSE.
//
// Numbers are printed with 12 significant digits, so write -> parse ->
// write is byte-identical.

#include <string>
#include <string_view>

#include "rcb/opt_problem.hpp"

namespace rcb {

enum class FileFormat { Lp, Mps };

std::string write_problem(const OptProblem& problem, FileFormat format);

/// Throws ParseError with a 1-based line number.
OptProblem parse_problem(std::string_view text, FileFormat format);

/// Canonical number formatting shared by every writer in the library.
std::string format_number(double value);

}  // namespace rcb
