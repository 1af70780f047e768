#pragma once

#include <string>
#include <vector>

#include "plodd/sequence.hpp"
#include "plodd/spectral.hpp"

namespace plodd {

struct QuadratureOptions {
  /// Series/adaptive split point; 0 selects 1e-3 / (n+1).
  double epsilon = 0.0;
  /// Adaptive/tail split point; 0 selects 200 (n+1) max(1, alpha), raised
  /// to at least 40 / (smallest instant gap) so the asymptotic tail
  /// expansion stays accurate for clustered sequences.
  double tail_start = 0.0;
  /// Absolute tolerance requested from each adaptive panel.
  double panel_tolerance = 1e-10;
  /// Orders beyond the leading 2(m+1) kept in the small-z series.
  int series_extra_orders = 8;
};

/// Independent numerical value of I_n, split into its three pieces.
struct QuadratureEstimate {
  double value = 0.0;
  double error_bound = 0.0;
  double series_part = 0.0;    // [0, epsilon]
  double adaptive_part = 0.0;  // [epsilon, tail_start]
  double tail_part = 0.0;      // [tail_start, inf)
  double epsilon = 0.0;
  double tail_start = 0.0;
};

/// Regularized quadrature of integral_0^inf |y_n(z)|^2 / z^(alpha+1) dz.
///
/// The small-z piece integrates the even power series of |y_n|^2 (whose
/// coefficients are the delta moment sums) term by term. The middle piece
/// uses Gauss-Kronrod panels, evaluating y_n from its moment series below
/// z = 2 where the direct sum loses all digits. The tail uses the mean
/// value sum_j w_j^2 = 4n+2 plus an asymptotic expansion of each cosine
/// pair term, with the remainder bound folded into error_bound.
///
/// Throws DivergentIntegral on infeasible (alpha, m), NonConvergence when a
/// panel misses its tolerance.
QuadratureEstimate prefactor_quadrature(const PulseSequence& seq,
                                        const SpectrumExponent& ex,
                                        const QuadratureOptions& opts = {});

enum class DivergenceKind {
  Power,  // x^(p - alpha), p < alpha
  Log,    // ln(x), integer alpha only, paired with p = alpha
};

struct DivergenceSpecies {
  DivergenceKind kind = DivergenceKind::Power;
  int order = 0;             // p
  double coefficient = 0.0;  // sum_{i,j} w_i w_j (d_i - d_j)^p

  std::string label() const;
};

/// Weighted coefficient sums of the IR-divergent terms of the regularized
/// prefactor. They all vanish exactly when alpha < 2m+2.
struct DivergenceResidual {
  std::vector<DivergenceSpecies> species;
  double max_abs = 0.0;
};

DivergenceResidual divergence_residual(const PulseSequence& seq,
                                       const SpectrumExponent& ex);

}  // namespace plodd
