#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "plodd/optimizer.hpp"
#include "plodd/sequence.hpp"
#include "plodd/spectral.hpp"

namespace plodd {

enum class RowStatus { Ok, Infeasible, Failed };

struct ScanRow {
  Family family = Family::Udd;
  int n = 0;
  double alpha = 0.0;
  RowStatus status = RowStatus::Ok;
  std::optional<double> value;  // I_n, only for Ok rows
  std::string provenance;       // generator call or optimizer cache key
  std::string error;            // solver message for Failed rows

  bool feasible() const { return status != RowStatus::Infeasible; }
};

/// Rows sorted by (family, n), one per key.
struct ScanTable {
  double alpha = 0.0;
  std::vector<ScanRow> rows;

  const ScanRow* find(Family family, int n) const;
};

/// Source of PLODD sequences for scans; defaults to optimize_plodd. The CLI
/// passes a cache-backed solver.
using PloddSolver = std::function<OptimizedSequence(int n, const SpectrumExponent&)>;

/// One row per (family, n). CDD rows exist only for n in the CDD pulse-count
/// set, PLODD rows only for even n >= 2. Infeasible pairs are flagged and a
/// solver failure marks only its own row.
ScanTable scan_prefactor(std::span<const Family> families,
                         std::span<const int> n_values,
                         const SpectrumExponent& ex,
                         const PloddSolver& solver = {});

/// Ordinary least squares y = slope x + intercept.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double se_slope = 0.0;
  double se_intercept = 0.0;
  double r_squared = 0.0;
  int points = 0;
};

/// Throws InsufficientData for fewer than 3 points, MismatchedLength when
/// the spans differ.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// ln I_n = a1 ln n + a0 over the Ok rows of one family with n in
/// [n_min, n_max].
struct PowerLawFit {
  Family family = Family::Udd;
  double alpha = 0.0;
  double a0 = 0.0;
  double a1 = 0.0;
  double se_a0 = 0.0;
  double se_a1 = 0.0;
  double r_squared = 0.0;
  int n_min = 0;  // smallest and largest n actually used
  int n_max = 0;
  int points = 0;

  /// ln C from I_n ~ (C/n)^(alpha-1), i.e. a0 / (alpha - 1). NaN at alpha = 1.
  double log_scaling_constant() const;
};

PowerLawFit fit_power_law(const ScanTable& table, Family family, int n_min,
                          int n_max);

/// max_j |a_j - b_j|; MismatchedLength when the pulse counts differ.
double max_instant_gap(const PulseSequence& a, const PulseSequence& b);

struct TrendRow {
  double alpha = 0.0;
  double gap_udd = 0.0;
  double prefactor = 0.0;
  double ln_prefactor = 0.0;
  PulseSequence sequence;
};

/// PLODD(n) along an ascending exponent grid, each solve warm-started from
/// the previous one. Errors carry the failing exponent.
std::vector<TrendRow> alpha_trend(int n, std::span<const double> alpha_grid,
                                  const SolverOptions& options = {});

/// family,n,alpha,I_n,feasible
void write_scan_csv(std::ostream& out, const ScanTable& table);
/// alpha,gap_udd,ln_In
void write_trend_csv(std::ostream& out, std::span<const TrendRow> rows);

}  // namespace plodd
