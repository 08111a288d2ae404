#include "rcb/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include "rcb/errors.hpp"

namespace rcb {

namespace {

struct Option {
  double p_c;
  double p_d;
};

std::vector<Option> power_options(const ElementParams& el, double resolution) {
  std::vector<Option> opts{{0.0, 0.0}};
  auto levels = [resolution](double pmax) {
    std::vector<double> out;
    const auto steps = static_cast<std::size_t>(std::floor(pmax / resolution + 1e-9));
    for (std::size_t s = 1; s <= steps; ++s) out.push_back(static_cast<double>(s) * resolution);
    if (out.empty() || pmax - out.back() > 1e-12 * pmax) out.push_back(pmax);
    return out;
  };
  for (double p : levels(el.p_c_max)) opts.push_back({p, 0.0});
  for (double p : levels(el.p_d_max)) opts.push_back({0.0, p});
  return opts;
}

const std::vector<double>& signal_of(const OracleObjective& objective) {
  return std::visit([](const auto& o) -> const std::vector<double>& {
    if constexpr (std::is_same_v<std::decay_t<decltype(o)>, OracleRevenue>) return o.prices;
    else return o.reference;
  }, objective);
}

// Depth-first search over decisions ordered step-major: decision t sets the
// powers of element t % N at scheduler step t / N.
class Search {
 public:
  Search(const FleetParams& fleet, const TimeGrid& grid, const std::vector<Option>& options,
         const OracleObjective* objective)
      : el_(fleet.element),
        n_(static_cast<std::size_t>(fleet.n)),
        k_(grid.k_steps()),
        m_(grid.m()),
        dt_(grid.delta_t_ctrl()),
        options_(options),
        soe_(fleet.e0),
        choice_(n_ * k_, 0) {
    if (objective) {
      maximize_ = oracle_maximizes(*objective);
      revenue_ = maximize_;
      signal_ = &signal_of(*objective);
    }
  }

  std::size_t decisions() const noexcept { return n_ * k_; }

  /// Applies decision t = option o; false if an SOE bound is crossed.
  bool push(std::size_t t, std::size_t o, double& e_saved) {
    const std::size_t i = t % n_;
    const Option& opt = options_[o];
    double e = soe_[i];
    for (std::size_t s = 0; s < m_; ++s) e = step_soe(e, opt.p_c, opt.p_d, el_, dt_);
    if (e < -kEqualityTol || e > el_.e_max + kEqualityTol) return false;
    e_saved = soe_[i];
    soe_[i] = e;
    choice_[t] = o;
    return true;
  }
  void pop(std::size_t t, double e_saved) { soe_[t % n_] = e_saved; }

  template <class Leaf>
  void descend(std::size_t t, const Leaf& leaf) {
    if (t == decisions()) {
      leaf(choice_);
      return;
    }
    for (std::size_t o = 0; o < options_.size(); ++o) {
      double saved = 0.0;
      if (!push(t, o, saved)) continue;
      descend(t + 1, leaf);
      pop(t, saved);
    }
  }

  double value_of(const std::vector<std::size_t>& choice) const {
    double v = 0.0;
    for (std::size_t k = 0; k < k_; ++k) {
      double net = 0.0;
      for (std::size_t i = 0; i < n_; ++i) {
        const Option& o = options_[choice[k * n_ + i]];
        net += o.p_c - o.p_d;
      }
      v += revenue_ ? -(*signal_)[k] * net : std::abs(net - (*signal_)[k]);
    }
    return v;
  }

  bool better(double a, double b) const noexcept { return maximize_ ? a > b : a < b; }
  double worst() const noexcept {
    return maximize_ ? -std::numeric_limits<double>::infinity()
                     : std::numeric_limits<double>::infinity();
  }

  void to_matrices(const std::vector<std::size_t>& choice, Matrix<double>& pc,
                   Matrix<double>& pd) const {
    pc = Matrix<double>(n_, k_, 0.0);
    pd = Matrix<double>(n_, k_, 0.0);
    for (std::size_t t = 0; t < choice.size(); ++t) {
      const Option& o = options_[choice[t]];
      pc(t % n_, t / n_) = o.p_c;
      pd(t % n_, t / n_) = o.p_d;
    }
  }

 private:
  ElementParams el_;
  std::size_t n_;
  std::size_t k_;
  std::size_t m_;
  double dt_;
  const std::vector<Option>& options_;
  std::vector<double> soe_;
  std::vector<std::size_t> choice_;
  bool maximize_ = false;
  bool revenue_ = false;
  const std::vector<double>* signal_ = nullptr;
};

void check_size(const FleetParams& fleet, const TimeGrid& grid, std::size_t options,
                const OracleLimits& limits) {
  const double decisions = static_cast<double>(fleet.n) * static_cast<double>(grid.k_steps());
  const double bound = std::pow(static_cast<double>(options), decisions);
  if (bound > limits.max_candidates) {
    throw Error(ErrorCode::TooLarge, "enumeration would visit up to " + std::to_string(bound) +
                                         " candidates (limit " +
                                         std::to_string(limits.max_candidates) + ")");
  }
}

void check_inputs(const FleetParams& fleet, double resolution) {
  fleet.element.validate();
  if (!(resolution > 0.0)) throw Error(ErrorCode::InvalidParams, "grid resolution must be positive");
  if (fleet.n < 1 || fleet.e0.size() != static_cast<std::size_t>(fleet.n)) {
    throw Error(ErrorCode::DimensionMismatch, "initial SOE vector length differs from N");
  }
}

}  // namespace

double oracle_resolution(const ElementParams& params) {
  return 0.25 * std::max(params.p_c_max, params.p_d_max);
}

bool oracle_maximizes(const OracleObjective& objective) noexcept {
  return std::holds_alternative<OracleRevenue>(objective);
}

double oracle_value(const OracleObjective& objective, const CompositeSchedule& schedule) {
  const auto& signal = signal_of(objective);
  if (signal.size() != schedule.size()) {
    throw Error(ErrorCode::DimensionMismatch, "signal length differs from schedule length");
  }
  double v = 0.0;
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    v += oracle_maximizes(objective) ? -signal[k] * schedule.net(k)
                                     : std::abs(schedule.net(k) - signal[k]);
  }
  return v;
}

double oracle_grid_tolerance(const OracleObjective& objective, std::size_t n, double resolution) {
  const auto& signal = signal_of(objective);
  double slope = 0.0;
  for (double s : signal) slope += oracle_maximizes(objective) ? std::abs(s) : 1.0;
  return 2.0 * static_cast<double>(n) * resolution * slope;
}

std::uint64_t enumerate_dispatches(
    const FleetParams& fleet, const TimeGrid& grid, double resolution,
    const std::function<void(const Matrix<double>&, const Matrix<double>&)>& visit,
    OracleLimits limits) {
  check_inputs(fleet, resolution);
  const auto options = power_options(fleet.element, resolution);
  check_size(fleet, grid, options.size(), limits);
  Search search(fleet, grid, options, nullptr);
  std::uint64_t count = 0;
  Matrix<double> pc;
  Matrix<double> pd;
  search.descend(0, [&](const std::vector<std::size_t>& choice) {
    search.to_matrices(choice, pc, pd);
    visit(pc, pd);
    ++count;
  });
  return count;
}

OracleResult brute_force_dispatch(const FleetParams& fleet, const TimeGrid& grid,
                                  const OracleObjective& objective, double resolution,
                                  OracleLimits limits) {
  check_inputs(fleet, resolution);
  if (signal_of(objective).size() != grid.k_steps()) {
    throw Error(ErrorCode::DimensionMismatch, "signal length differs from K");
  }
  const auto options = power_options(fleet.element, resolution);
  check_size(fleet, grid, options.size(), limits);

  // Work items are feasible prefixes of up to two decisions.
  Search root(fleet, grid, options, &objective);
  const std::size_t depth = std::min<std::size_t>(2, root.decisions());
  std::vector<std::vector<std::size_t>> prefixes;
  {
    std::vector<std::size_t> prefix;
    std::function<void(std::size_t)> collect = [&](std::size_t t) {
      if (t == depth) {
        prefixes.push_back(prefix);
        return;
      }
      for (std::size_t o = 0; o < options.size(); ++o) {
        double saved = 0.0;
        if (!root.push(t, o, saved)) continue;
        prefix.push_back(o);
        collect(t + 1);
        prefix.pop_back();
        root.pop(t, saved);
      }
    };
    collect(0);
  }

  struct Partial {
    double value;
    std::vector<std::size_t> choice;
    std::uint64_t count = 0;
  };
  std::vector<Partial> partials(prefixes.size(), Partial{root.worst(), {}, 0});
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t w; (w = next.fetch_add(1)) < prefixes.size();) {
      Search s(fleet, grid, options, &objective);
      for (std::size_t t = 0; t < depth; ++t) {
        double saved = 0.0;
        s.push(t, prefixes[w][t], saved);
      }
      Partial& part = partials[w];
      s.descend(depth, [&](const std::vector<std::size_t>& choice) {
        ++part.count;
        const double v = s.value_of(choice);
        if (part.choice.empty() || s.better(v, part.value)) {
          part.value = v;
          part.choice = choice;
        }
      });
    }
  };
  unsigned threads = limits.threads ? limits.threads : std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, prefixes.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  // Merge in prefix order so ties resolve the same way on every run.
  OracleResult result;
  const Partial* best = nullptr;
  for (const Partial& p : partials) {
    result.candidates += p.count;
    if (p.choice.empty()) continue;
    if (!best || root.better(p.value, best->value)) best = &p;
  }
  if (!best) throw Error(ErrorCode::InvalidProblem, "no SOE-feasible candidate exists");

  root.to_matrices(best->choice, result.p_c, result.p_d);
  result.dispatch = hold_element_powers(fleet, grid, result.p_c, result.p_d);
  const std::size_t n = static_cast<std::size_t>(fleet.n);
  std::vector<double> pc(grid.k_steps(), 0.0);
  std::vector<double> pd(grid.k_steps(), 0.0);
  for (std::size_t k = 0; k < grid.k_steps(); ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      pc[k] += result.p_c(i, k);
      pd[k] += result.p_d(i, k);
    }
  }
  result.composite = CompositeSchedule(std::move(pc), std::move(pd));
  result.report = check_admissibility(fleet, grid, result.dispatch, result.composite);
  result.value = oracle_value(objective, result.composite);
  return result;
}

std::vector<CompositeSchedule> sample_rcb_feasible(const FleetParams& fleet, const TimeGrid& grid,
                                                   std::size_t count, std::uint64_t seed) {
  const ValidatedFleet vf = validate_fleet(fleet, grid);
  const ElementParams& el = fleet.element;
  const double n = static_cast<double>(fleet.n);
  const double lower = n * vf.epsilon;
  const double upper = n * (el.e_max - vf.epsilon);
  const double e_start = fleet.total_initial_energy();
  if (e_start < lower || e_start > upper) {
    throw Error(ErrorCode::BufferInfeasible,
                "initial composite SOE lies outside the buffered energy band");
  }
  const double dt = grid.delta_t_sched();
  const double cmax = (n - 1.0) * el.p_c_max;
  const double dmax = (n - 1.0) * el.p_d_max;
  auto next_energy = [&](double e, double pc, double pd) {
    return e + dt * (el.eta_c * pc - pd / el.eta_d);
  };

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  constexpr int kMaxAttempts = 10000;

  std::vector<CompositeSchedule> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    std::vector<double> pc(grid.k_steps(), 0.0);
    std::vector<double> pd(grid.k_steps(), 0.0);
    double e = e_start;
    for (std::size_t k = 0; k < grid.k_steps(); ++k) {
      double c = 0.0;
      double d = 0.0;
      double e_next = e;
      bool accepted = false;
      for (int attempt = 0; attempt < kMaxAttempts && !accepted; ++attempt) {
        double u = unit(rng);
        double v = unit(rng);
        if (u + v > 1.0) {
          u = 1.0 - u;
          v = 1.0 - v;
        }
        c = u * cmax;
        d = v * dmax;
        e_next = next_energy(e, c, d);
        accepted = e_next >= lower && e_next <= upper;
      }
      if (!accepted) {
        // SOE moves linearly with a common scale on both powers, and zero
        // power keeps it where it is, which is inside the band.
        const double bound = e_next > upper ? upper : lower;
        double scale = (bound - e) / (e_next - e);
        for (int shrink = 0; shrink < 64; ++shrink) {
          e_next = next_energy(e, scale * c, scale * d);
          if (e_next >= lower && e_next <= upper) break;
          scale = std::nextafter(scale, 0.0) * (1.0 - 1e-12);
        }
        c *= scale;
        d *= scale;
        e_next = next_energy(e, c, d);
        if (e_next < lower || e_next > upper) {
          c = 0.0;
          d = 0.0;
          e_next = e;
        }
      }
      pc[k] = c;
      pd[k] = d;
      e = e_next;
    }
    out.emplace_back(std::move(pc), std::move(pd));
  }
  return out;
}

}  // namespace rcb
