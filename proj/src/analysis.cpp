#include "plodd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>

#include "plodd/errors.hpp"
#include "plodd/format.hpp"

namespace plodd {

namespace {

// Level whose CDD sequence has exactly n pulses, if any.
std::optional<int> cdd_level_for(int n) {
  for (int level = 0;; ++level) {
    const int count = cdd_pulse_count(level);
    if (count == n) return level;
    if (count > n) return std::nullopt;
  }
}

ScanRow evaluate_row(const PulseSequence& seq, const SpectrumExponent& ex,
                     ScanRow row) {
  try {
    row.value = spectral_prefactor(seq, ex).value;
    row.status = RowStatus::Ok;
  } catch (const DivergentIntegral&) {
    row.status = RowStatus::Infeasible;
  }
  return row;
}

std::string generator_call(Family family, int parameter) {
  return std::string(family_name(family)) + "(" + std::to_string(parameter) + ")";
}

}  // namespace

const ScanRow* ScanTable::find(Family family, int n) const {
  for (const auto& row : rows) {
    if (row.family == family && row.n == n) return &row;
  }
  return nullptr;
}

ScanTable scan_prefactor(std::span<const Family> families,
                         std::span<const int> n_values,
                         const SpectrumExponent& ex, const PloddSolver& solver) {
  const std::set<Family> family_set(families.begin(), families.end());
  const std::set<int> n_set(n_values.begin(), n_values.end());
  ScanTable table;
  table.alpha = ex.alpha();
  for (Family family : family_set) {
    for (int n : n_set) {
      ScanRow row;
      row.family = family;
      row.n = n;
      row.alpha = ex.alpha();
      switch (family) {
        case Family::Udd:
        case Family::Cpmg: {
          if (n < 1) continue;
          row.provenance = generator_call(family, n);
          table.rows.push_back(evaluate_row(make_family(family, n), ex, row));
          break;
        }
        case Family::Cdd: {
          const std::optional<int> level = cdd_level_for(n);
          if (!level) continue;
          row.provenance = generator_call(family, *level);
          table.rows.push_back(evaluate_row(make_cdd(*level), ex, row));
          break;
        }
        case Family::Plodd: {
          if (n < 2 || n % 2 != 0) continue;
          row.provenance = "plodd(n=" + std::to_string(n) + ", alpha=" +
                           format_fixed(ex.alpha()) + ")";
          if (ex.alpha() >= 2.0 * n + 2.0) {
            row.status = RowStatus::Infeasible;
            table.rows.push_back(row);
            break;
          }
          try {
            const OptimizedSequence solved =
                solver ? solver(n, ex) : optimize_plodd(plodd_problem(n, ex));
            row.value = solved.prefactor.value;
            row.status = RowStatus::Ok;
          } catch (const NonConvergence& e) {
            row.status = RowStatus::Failed;
            row.error = e.what();
          } catch (const OrderingViolation& e) {
            row.status = RowStatus::Failed;
            row.error = e.what();
          }
          table.rows.push_back(row);
          break;
        }
        case Family::Custom:
          throw std::invalid_argument("custom sequences cannot be scanned");
      }
    }
  }
  return table;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw MismatchedLength("fit_line: " + std::to_string(x.size()) + " x values, " +
                           std::to_string(y.size()) + " y values");
  }
  const std::size_t count = x.size();
  if (count < 3) {
    throw InsufficientData("a line fit with standard errors needs at least 3 points, got " +
                           std::to_string(count));
  }
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    mean_x += x[i];
    mean_y += y[i];
  }
  mean_x /= count;
  mean_y /= count;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    sxx += (x[i] - mean_x) * (x[i] - mean_x);
    sxy += (x[i] - mean_x) * (y[i] - mean_y);
    syy += (y[i] - mean_y) * (y[i] - mean_y);
  }
  if (sxx == 0.0) throw InsufficientData("fit_line: all x values coincide");
  LineFit fit;
  fit.points = static_cast<int>(count);
  fit.slope = sxy / sxx;
  fit.intercept = mean_y - fit.slope * mean_x;
  double sse = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    sse += r * r;
  }
  const double sigma2 = sse / static_cast<double>(count - 2);
  fit.se_slope = std::sqrt(sigma2 / sxx);
  fit.se_intercept = std::sqrt(sigma2 * (1.0 / count + mean_x * mean_x / sxx));
  fit.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  return fit;
}

double PowerLawFit::log_scaling_constant() const {
  if (alpha == 1.0) return std::numeric_limits<double>::quiet_NaN();
  return a0 / (alpha - 1.0);
}

PowerLawFit fit_power_law(const ScanTable& table, Family family, int n_min,
                          int n_max) {
  std::vector<double> ln_n, ln_i;
  PowerLawFit fit;
  fit.family = family;
  fit.alpha = table.alpha;
  fit.n_min = std::numeric_limits<int>::max();
  fit.n_max = std::numeric_limits<int>::min();
  for (const auto& row : table.rows) {
    if (row.family != family || row.n < n_min || row.n > n_max) continue;
    if (row.status != RowStatus::Ok || !row.value || *row.value <= 0.0 || row.n < 1) continue;
    ln_n.push_back(std::log(static_cast<double>(row.n)));
    ln_i.push_back(std::log(*row.value));
    fit.n_min = std::min(fit.n_min, row.n);
    fit.n_max = std::max(fit.n_max, row.n);
  }
  if (ln_n.size() < 3) {
    throw InsufficientData("power-law fit of " + std::string(family_name(family)) +
                           " needs at least 3 feasible rows in n=[" +
                           std::to_string(n_min) + ", " + std::to_string(n_max) +
                           "], found " + std::to_string(ln_n.size()));
  }
  const LineFit line = fit_line(ln_n, ln_i);
  fit.a1 = line.slope;
  fit.a0 = line.intercept;
  fit.se_a1 = line.se_slope;
  fit.se_a0 = line.se_intercept;
  fit.r_squared = line.r_squared;
  fit.points = line.points;
  return fit;
}

double max_instant_gap(const PulseSequence& a, const PulseSequence& b) {
  if (a.size() != b.size()) {
    throw MismatchedLength("cannot compare sequences of " + std::to_string(a.size()) +
                           " and " + std::to_string(b.size()) + " pulses");
  }
  double gap = 0.0;
  for (int j = 1; j <= a.size(); ++j) {
    gap = std::max(gap, std::abs(a.instant(j) - b.instant(j)));
  }
  return gap;
}

std::vector<TrendRow> alpha_trend(int n, std::span<const double> alpha_grid,
                                  const SolverOptions& options) {
  if (!std::is_sorted(alpha_grid.begin(), alpha_grid.end())) {
    throw std::invalid_argument("alpha grid must be sorted ascending");
  }
  const PulseSequence udd = make_udd(n);
  std::vector<TrendRow> rows;
  for (double alpha : alpha_grid) {
    const PloddProblem problem = plodd_problem(n, SpectrumExponent(alpha), options);
    std::optional<OptimizedSequence> solved;
    if (!rows.empty()) {
      const auto prev = rows.back().sequence.instants();
      PloddProblem warm = problem;
      warm.init = InitStrategy::Warm;
      warm.warm_start.assign(prev.begin(), prev.begin() + n / 2);
      try {
        solved = optimize_plodd(warm);
      } catch (const NonConvergence&) {
      } catch (const OrderingViolation&) {
      }
    }
    try {
      if (!solved) solved = optimize_plodd(problem);
    } catch (const SolverFailure& e) {
      throw SolverFailure(std::string(e.what()) + " (trend at alpha=" + format_fixed(alpha) + ")",
                          e.best());
    } catch (const NonConvergence& e) {
      throw NonConvergence(std::string(e.what()) + " (trend at alpha=" + format_fixed(alpha) + ")");
    } catch (const OrderingViolation& e) {
      throw OrderingViolation(std::string(e.what()) + " (trend at alpha=" + format_fixed(alpha) + ")");
    }
    TrendRow row;
    row.alpha = alpha;
    row.sequence = solved->sequence;
    row.prefactor = solved->prefactor.value;
    row.ln_prefactor = std::log(row.prefactor);
    row.gap_udd = max_instant_gap(row.sequence, udd);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_scan_csv(std::ostream& out, const ScanTable& table) {
  out << "family,n,alpha,I_n,feasible\n";
  for (const auto& row : table.rows) {
    out << family_name(row.family) << ',' << row.n << ',' << format_fixed(row.alpha) << ',';
    if (row.value) out << format_scientific(*row.value);
    out << ',' << (row.feasible() ? "true" : "false") << '\n';
  }
}

void write_trend_csv(std::ostream& out, std::span<const TrendRow> rows) {
  out << "alpha,gap_udd,ln_In\n";
  for (const auto& row : rows) {
    out << format_fixed(row.alpha) << ',' << format_fixed(row.gap_udd) << ','
        << format_fixed(row.ln_prefactor) << '\n';
  }
}

}  // namespace plodd
