#include "rcb/problem_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

#include "rcb/errors.hpp"

namespace rcb {

std::string format_number(double value) {
  if (value == kInf) return "+inf";
  if (value == -kInf) return "-inf";
  if (value == 0.0) return "0";  // folds -0
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

namespace {

constexpr std::size_t kTermsPerLine = 6;

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

double parse_number(const std::string& token, std::size_t line) {
  if (token == "+inf" || token == "inf" || token == "+infinity" || token == "infinity") return kInf;
  if (token == "-inf" || token == "-infinity") return -kInf;
  const char* begin = token.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || errno == ERANGE || std::isnan(v)) {
    throw ParseError(line, "line " + std::to_string(line) + ": expected a number, got '" + token + "'");
  }
  return v;
}

bool is_number(const std::string& token) {
  if (token.empty()) return false;
  const char* begin = token.c_str();
  char* end = nullptr;
  std::strtod(begin, &end);
  return end != begin && *end == '\0';
}

std::string_view sense_token(RowSense s) {
  switch (s) {
    case RowSense::LessEqual: return "<=";
    case RowSense::GreaterEqual: return ">=";
    case RowSense::Equal: return "=";
  }
  return "=";
}

// ---------------------------------------------------------------- LP writer

void write_terms(std::ostringstream& out, const OptProblem& p, const std::vector<Term>& terms) {
  std::size_t on_line = 0;
  for (const Term& t : terms) {
    if (on_line == kTermsPerLine) {
      out << "\n  ";
      on_line = 0;
    }
    out << ' ' << (t.coef < 0 ? '-' : '+') << ' ' << format_number(std::abs(t.coef)) << ' '
        << p.variables()[t.var].name;
    ++on_line;
  }
}

std::string write_lp(const OptProblem& p) {
  std::ostringstream out;
  out << "\\ Problem: " << p.name() << '\n';
  out << (p.sense() == ObjectiveSense::Maximize ? "Maximize" : "Minimize") << '\n';
  out << " obj:";
  std::vector<Term> linear;
  for (std::size_t j = 0; j < p.num_variables(); ++j) {
    if (p.linear_objective()[j] != 0.0) linear.push_back({j, p.linear_objective()[j]});
  }
  if (linear.empty() && !p.has_quadratic()) out << " 0";
  write_terms(out, p, linear);
  if (p.has_quadratic()) {
    out << "\n  + [";
    std::size_t on_line = 0;
    for (std::size_t j = 0; j < p.num_variables(); ++j) {
      const double q = p.quadratic_objective()[j];
      if (q == 0.0) continue;
      if (on_line == kTermsPerLine) {
        out << "\n  ";
        on_line = 0;
      }
      out << ' ' << (q < 0 ? '-' : '+') << ' ' << format_number(std::abs(q)) << ' '
          << p.variables()[j].name << " ^2";
      ++on_line;
    }
    out << " ] / 2";
  }
  out << "\nSubject To\n";
  for (const Constraint& row : p.constraints()) {
    out << ' ' << row.name << ':';
    if (row.terms.empty()) out << " 0";
    write_terms(out, p, row.terms);
    out << ' ' << sense_token(row.sense) << ' ' << format_number(row.rhs) << '\n';
  }
  out << "Bounds\n";
  for (const Variable& v : p.variables()) {
    if (v.lower == -kInf && v.upper == kInf) {
      out << ' ' << v.name << " free\n";
    } else {
      out << ' ' << format_number(v.lower) << " <= " << v.name << " <= " << format_number(v.upper)
          << '\n';
    }
  }
  if (p.num_binaries() > 0) {
    out << "Binaries\n";
    for (const Variable& v : p.variables()) {
      if (v.type == VarType::Binary) out << ' ' << v.name << '\n';
    }
  }
  out << "End\n";
  return out.str();
}

// ---------------------------------------------------------------- LP parser

struct LpLine {
  std::size_t number;
  std::vector<std::string> tokens;
};

std::vector<Term> parse_lp_terms(const OptProblem& p, const std::vector<std::string>& toks,
                                 std::size_t& pos, std::size_t stop, std::size_t line) {
  std::vector<Term> terms;
  while (pos < stop) {
    double sign = 1.0;
    if (toks[pos] == "+" || toks[pos] == "-") {
      sign = toks[pos] == "-" ? -1.0 : 1.0;
      ++pos;
    }
    if (pos >= stop) throw ParseError(line, "line " + std::to_string(line) + ": dangling sign");
    double coef = 1.0;
    if (is_number(toks[pos])) {
      coef = parse_number(toks[pos], line);
      ++pos;
      if (pos >= stop || toks[pos] == "+" || toks[pos] == "-") {
        if (coef != 0.0) {
          throw ParseError(line, "line " + std::to_string(line) + ": constants are not supported");
        }
        continue;
      }
    }
    auto var = p.find_variable(toks[pos]);
    if (!var) {
      throw ParseError(line, "line " + std::to_string(line) + ": undeclared variable '" + toks[pos] + "'");
    }
    terms.push_back({*var, sign * coef});
    ++pos;
  }
  return terms;
}

OptProblem parse_lp(std::string_view text) {
  enum class Section { None, Objective, Constraints, Bounds, Binaries, End };
  Section section = Section::None;
  std::string name = "rcb";
  ObjectiveSense sense = ObjectiveSense::Minimize;
  std::vector<LpLine> objective;
  std::vector<LpLine> rows;  // each entry is one full row (continuations merged)
  std::vector<LpLine> bounds;
  std::vector<LpLine> binaries;

  const auto lines = split_lines(text);
  for (std::size_t idx = 0; idx < lines.size(); ++idx) {
    const std::size_t number = idx + 1;
    std::string_view raw = lines[idx];
    if (!raw.empty() && raw.front() == '\\') {
      const std::string_view tag = "\\ Problem: ";
      if (raw.substr(0, tag.size()) == tag) name = std::string(raw.substr(tag.size()));
      continue;
    }
    auto toks = split_ws(raw);
    if (toks.empty()) continue;
    const bool indented = raw.front() == ' ' || raw.front() == '\t';
    if (!indented) {
      const std::string& head = toks[0];
      if (head == "Minimize" || head == "Maximize") {
        sense = head == "Maximize" ? ObjectiveSense::Maximize : ObjectiveSense::Minimize;
        section = Section::Objective;
      } else if (head == "Subject" && toks.size() == 2 && toks[1] == "To") {
        section = Section::Constraints;
      } else if (head == "Bounds") {
        section = Section::Bounds;
      } else if (head == "Binaries") {
        section = Section::Binaries;
      } else if (head == "End") {
        section = Section::End;
      } else {
        throw ParseError(number, "line " + std::to_string(number) + ": unknown section '" + head + "'");
      }
      continue;
    }
    switch (section) {
      case Section::Objective:
        objective.push_back({number, std::move(toks)});
        break;
      case Section::Constraints:
        if (toks[0].back() == ':') {
          rows.push_back({number, std::move(toks)});
        } else {
          if (rows.empty()) throw ParseError(number, "line " + std::to_string(number) + ": continuation without a row");
          auto& dst = rows.back().tokens;
          dst.insert(dst.end(), toks.begin(), toks.end());
        }
        break;
      case Section::Bounds:
        bounds.push_back({number, std::move(toks)});
        break;
      case Section::Binaries:
        binaries.push_back({number, std::move(toks)});
        break;
      case Section::None:
      case Section::End:
        throw ParseError(number, "line " + std::to_string(number) + ": content outside a section");
    }
  }
  if (section != Section::End) throw ParseError(lines.size(), "missing End");

  std::map<std::string, bool> is_binary;
  for (const auto& b : binaries) {
    for (const auto& t : b.tokens) is_binary[t] = true;
  }

  OptProblem p(name);
  p.set_sense(sense);
  for (const auto& b : bounds) {
    const auto& t = b.tokens;
    if (t.size() == 2 && t[1] == "free") {
      p.add_variable(t[0], -kInf, kInf);
    } else if (t.size() == 5 && t[1] == "<=" && t[3] == "<=") {
      const VarType type = is_binary.contains(t[2]) ? VarType::Binary : VarType::Continuous;
      p.add_variable(t[2], parse_number(t[0], b.number), parse_number(t[4], b.number), type);
    } else {
      throw ParseError(b.number, "line " + std::to_string(b.number) + ": malformed bound");
    }
  }
  for (const auto& [var, flag] : is_binary) {
    if (!p.find_variable(var)) throw ParseError(0, "binary '" + var + "' has no bound line");
  }

  // Objective: "obj:" label, linear terms, optional "+ [ ... ] / 2" block.
  std::vector<std::string> otoks;
  std::size_t oline = objective.empty() ? 0 : objective.front().number;
  for (const auto& o : objective) otoks.insert(otoks.end(), o.tokens.begin(), o.tokens.end());
  if (otoks.empty() || otoks[0] != "obj:") throw ParseError(oline, "objective must start with 'obj:'");
  std::size_t quad_start = otoks.size();
  for (std::size_t i = 1; i < otoks.size(); ++i) {
    if (otoks[i] == "[") {
      quad_start = i - 1;  // the '+' before '['
      break;
    }
  }
  std::size_t pos = 1;
  for (const Term& t : parse_lp_terms(p, otoks, pos, quad_start, oline)) {
    p.add_linear_objective(t.var, t.coef);
  }
  if (quad_start < otoks.size()) {
    if (otoks.size() < quad_start + 5 || otoks[quad_start] != "+" ||
        otoks[otoks.size() - 3] != "]" || otoks[otoks.size() - 2] != "/" || otoks.back() != "2") {
      throw ParseError(oline, "malformed quadratic objective block");
    }
    std::size_t q = quad_start + 2;
    const std::size_t qend = otoks.size() - 3;
    while (q < qend) {
      if (q + 3 >= qend + 1 || (otoks[q] != "+" && otoks[q] != "-") || otoks[q + 3] != "^2") {
        throw ParseError(oline, "malformed quadratic term");
      }
      const double sign = otoks[q] == "-" ? -1.0 : 1.0;
      const double coef = parse_number(otoks[q + 1], oline);
      auto var = p.find_variable(otoks[q + 2]);
      if (!var) throw ParseError(oline, "undeclared variable '" + otoks[q + 2] + "'");
      p.set_quadratic_objective(*var, sign * coef);
      q += 4;
    }
  }

  for (const auto& r : rows) {
    const auto& t = r.tokens;
    std::size_t sense_pos = t.size();
    for (std::size_t i = 1; i < t.size(); ++i) {
      if (t[i] == "<=" || t[i] == ">=" || t[i] == "=") {
        sense_pos = i;
        break;
      }
    }
    if (sense_pos + 2 != t.size()) {
      throw ParseError(r.number, "line " + std::to_string(r.number) + ": malformed constraint");
    }
    std::size_t tp = 1;
    auto terms = parse_lp_terms(p, t, tp, sense_pos, r.number);
    const RowSense rs = t[sense_pos] == "<=" ? RowSense::LessEqual
                        : t[sense_pos] == ">=" ? RowSense::GreaterEqual
                                               : RowSense::Equal;
    std::string rname = t[0].substr(0, t[0].size() - 1);
    p.add_constraint(std::move(rname), std::move(terms), rs, parse_number(t.back(), r.number));
  }
  return p;
}

// --------------------------------------------------------------- MPS writer

std::string write_mps(const OptProblem& p) {
  std::ostringstream out;
  out << "NAME " << p.name() << " FREE\n";
  if (p.sense() == ObjectiveSense::Maximize) out << "OBJSENSE\n    MAX\n";
  out << "ROWS\n N obj\n";
  for (const Constraint& row : p.constraints()) {
    const char tag = row.sense == RowSense::LessEqual ? 'L' : row.sense == RowSense::GreaterEqual ? 'G' : 'E';
    out << ' ' << tag << ' ' << row.name << '\n';
  }

  std::vector<std::vector<std::pair<std::size_t, double>>> columns(p.num_variables());
  for (std::size_t r = 0; r < p.constraints().size(); ++r) {
    for (const Term& t : p.constraints()[r].terms) columns[t.var].emplace_back(r, t.coef);
  }
  out << "COLUMNS\n";
  bool in_int = false;
  for (std::size_t j = 0; j < p.num_variables(); ++j) {
    const Variable& v = p.variables()[j];
    const bool binary = v.type == VarType::Binary;
    if (binary != in_int) {
      out << " MARKER 'MARKER' '" << (binary ? "INTORG" : "INTEND") << "'\n";
      in_int = binary;
    }
    const double c = p.linear_objective()[j];
    if (c != 0.0 || columns[j].empty()) out << ' ' << v.name << " obj " << format_number(c) << '\n';
    for (auto [r, coef] : columns[j]) {
      out << ' ' << v.name << ' ' << p.constraints()[r].name << ' ' << format_number(coef) << '\n';
    }
  }
  if (in_int) out << " MARKER 'MARKER' 'INTEND'\n";

  out << "RHS\n";
  for (const Constraint& row : p.constraints()) {
    if (row.rhs != 0.0) out << " rhs " << row.name << ' ' << format_number(row.rhs) << '\n';
  }
  out << "BOUNDS\n";
  for (const Variable& v : p.variables()) {
    if (v.lower == -kInf && v.upper == kInf) {
      out << " FR bnd " << v.name << '\n';
    } else if (v.lower == v.upper) {
      out << " FX bnd " << v.name << ' ' << format_number(v.lower) << '\n';
    } else {
      if (v.lower == -kInf) {
        out << " MI bnd " << v.name << '\n';
      } else if (v.lower != 0.0 || v.upper < 0.0) {
        out << " LO bnd " << v.name << ' ' << format_number(v.lower) << '\n';
      }
      if (v.upper != kInf) out << " UP bnd " << v.name << ' ' << format_number(v.upper) << '\n';
    }
  }
  if (p.has_quadratic()) {
    out << "QUADOBJ\n";
    for (std::size_t j = 0; j < p.num_variables(); ++j) {
      const double q = p.quadratic_objective()[j];
      if (q != 0.0) out << ' ' << p.variables()[j].name << ' ' << p.variables()[j].name << ' ' << format_number(q) << '\n';
    }
  }
  out << "ENDATA\n";
  return out.str();
}

// --------------------------------------------------------------- MPS parser

OptProblem parse_mps(std::string_view text) {
  enum class Section { None, ObjSense, Rows, Columns, Rhs, Bounds, QuadObj, End };
  Section section = Section::None;
  std::string name = "rcb";
  ObjectiveSense sense = ObjectiveSense::Minimize;
  std::string objective_row;

  struct RowDecl {
    std::string name;
    RowSense sense;
    std::vector<std::pair<std::string, double>> entries;  // column name, coef
    double rhs = 0.0;
  };
  std::vector<RowDecl> rows;
  std::map<std::string, std::size_t> row_lookup;

  struct ColDecl {
    std::string name;
    bool integer = false;
    double lower = 0.0;
    double upper = kInf;
    double obj = 0.0;
    double quad = 0.0;
    bool binary_marker = false;
  };
  std::vector<ColDecl> cols;
  std::map<std::string, std::size_t> col_lookup;
  bool in_int = false;

  auto col_of = [&](const std::string& c, std::size_t line, bool create) -> ColDecl& {
    auto it = col_lookup.find(c);
    if (it != col_lookup.end()) return cols[it->second];
    if (!create) throw ParseError(line, "line " + std::to_string(line) + ": unknown column '" + c + "'");
    col_lookup.emplace(c, cols.size());
    cols.push_back({c, in_int});
    return cols.back();
  };

  const auto lines = split_lines(text);
  for (std::size_t idx = 0; idx < lines.size(); ++idx) {
    const std::size_t line = idx + 1;
    std::string_view raw = lines[idx];
    auto t = split_ws(raw);
    if (t.empty() || t[0][0] == '*') continue;
    const bool indented = raw.front() == ' ' || raw.front() == '\t';
    if (!indented) {
      const std::string& head = t[0];
      if (head == "NAME") {
        if (t.size() >= 2) name = t[1];
      } else if (head == "OBJSENSE") {
        section = Section::ObjSense;
        if (t.size() >= 2) sense = t[1] == "MAX" ? ObjectiveSense::Maximize : ObjectiveSense::Minimize;
      } else if (head == "ROWS") {
        section = Section::Rows;
      } else if (head == "COLUMNS") {
        section = Section::Columns;
      } else if (head == "RHS") {
        section = Section::Rhs;
      } else if (head == "BOUNDS") {
        section = Section::Bounds;
      } else if (head == "QUADOBJ") {
        section = Section::QuadObj;
      } else if (head == "ENDATA") {
        section = Section::End;
      } else {
        throw ParseError(line, "line " + std::to_string(line) + ": unknown section '" + head + "'");
      }
      continue;
    }
    switch (section) {
      case Section::ObjSense:
        sense = t[0] == "MAX" || t[0] == "MAXIMIZE" ? ObjectiveSense::Maximize : ObjectiveSense::Minimize;
        break;
      case Section::Rows: {
        if (t.size() != 2) throw ParseError(line, "line " + std::to_string(line) + ": malformed row");
        if (t[0] == "N") {
          if (!objective_row.empty()) throw ParseError(line, "multiple objective rows");
          objective_row = t[1];
          break;
        }
        RowSense rs;
        if (t[0] == "L") rs = RowSense::LessEqual;
        else if (t[0] == "G") rs = RowSense::GreaterEqual;
        else if (t[0] == "E") rs = RowSense::Equal;
        else throw ParseError(line, "line " + std::to_string(line) + ": unknown row type '" + t[0] + "'");
        row_lookup.emplace(t[1], rows.size());
        rows.push_back({t[1], rs, {}, 0.0});
        break;
      }
      case Section::Columns: {
        if (t.size() == 3 && t[1] == "'MARKER'") {
          if (t[2] == "'INTORG'") in_int = true;
          else if (t[2] == "'INTEND'") in_int = false;
          else throw ParseError(line, "line " + std::to_string(line) + ": unknown marker");
          break;
        }
        if (t.size() != 3 && t.size() != 5) {
          throw ParseError(line, "line " + std::to_string(line) + ": malformed column entry");
        }
        ColDecl& col = col_of(t[0], line, true);
        for (std::size_t f = 1; f + 1 < t.size(); f += 2) {
          const double v = parse_number(t[f + 1], line);
          if (t[f] == objective_row) {
            col.obj = v;
          } else {
            auto it = row_lookup.find(t[f]);
            if (it == row_lookup.end()) {
              throw ParseError(line, "line " + std::to_string(line) + ": unknown row '" + t[f] + "'");
            }
            rows[it->second].entries.emplace_back(t[0], v);
          }
        }
        break;
      }
      case Section::Rhs: {
        if (t.size() != 3 && t.size() != 5) throw ParseError(line, "line " + std::to_string(line) + ": malformed rhs");
        for (std::size_t f = 1; f + 1 < t.size(); f += 2) {
          auto it = row_lookup.find(t[f]);
          if (it == row_lookup.end()) {
            throw ParseError(line, "line " + std::to_string(line) + ": unknown row '" + t[f] + "'");
          }
          rows[it->second].rhs = parse_number(t[f + 1], line);
        }
        break;
      }
      case Section::Bounds: {
        if (t.size() < 3) throw ParseError(line, "line " + std::to_string(line) + ": malformed bound");
        ColDecl& col = col_of(t[2], line, false);
        const std::string& kind = t[0];
        auto value = [&]() {
          if (t.size() != 4) throw ParseError(line, "line " + std::to_string(line) + ": bound needs a value");
          return parse_number(t[3], line);
        };
        if (kind == "UP") col.upper = value();
        else if (kind == "LO") col.lower = value();
        else if (kind == "FX") col.lower = col.upper = value();
        else if (kind == "FR") { col.lower = -kInf; col.upper = kInf; }
        else if (kind == "MI") col.lower = -kInf;
        else if (kind == "PL") col.upper = kInf;
        else if (kind == "BV") { col.lower = 0.0; col.upper = 1.0; col.integer = true; }
        else throw ParseError(line, "line " + std::to_string(line) + ": unknown bound type '" + kind + "'");
        break;
      }
      case Section::QuadObj: {
        if (t.size() != 3) throw ParseError(line, "line " + std::to_string(line) + ": malformed QUADOBJ entry");
        if (t[0] != t[1]) {
          throw ParseError(line, "line " + std::to_string(line) + ": only diagonal quadratic terms are supported");
        }
        col_of(t[0], line, false).quad = parse_number(t[2], line);
        break;
      }
      case Section::None:
      case Section::End:
        throw ParseError(line, "line " + std::to_string(line) + ": content outside a section");
    }
  }
  if (section != Section::End) throw ParseError(lines.size(), "missing ENDATA");

  OptProblem p(name);
  p.set_sense(sense);
  for (const ColDecl& c : cols) {
    if (c.integer && (c.lower < 0.0 || c.upper > 1.0)) {
      throw ParseError(0, "integer column '" + c.name + "' is not binary; only binaries are supported");
    }
    const std::size_t j = p.add_variable(c.name, c.lower, c.upper, c.integer ? VarType::Binary : VarType::Continuous);
    if (c.obj != 0.0) p.add_linear_objective(j, c.obj);
    if (c.quad != 0.0) p.set_quadratic_objective(j, c.quad);
  }
  for (const RowDecl& r : rows) {
    std::vector<Term> terms;
    terms.reserve(r.entries.size());
    for (const auto& [col, coef] : r.entries) terms.push_back({col_lookup.at(col), coef});
    p.add_constraint(r.name, std::move(terms), r.sense, r.rhs);
  }
  return p;
}

}  // namespace

std::string write_problem(const OptProblem& problem, FileFormat format) {
  return format == FileFormat::Lp ? write_lp(problem) : write_mps(problem);
}

OptProblem parse_problem(std::string_view text, FileFormat format) {
  try {
    return format == FileFormat::Lp ? parse_lp(text) : parse_mps(text);
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(0, e.what());
  }
}

}  // namespace rcb
