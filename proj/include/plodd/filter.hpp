#pragma once

#include <complex>
#include <vector>

#include "plodd/sequence.hpp"

namespace plodd {

/// Relative tolerance used to decide that a moment sum vanishes.
inline constexpr double kMomentTolerance = 1e-9;

/// y_n(z) = sum_{j=0}^{n+1} w_j exp(i z d_j), with z = omega * t.
std::complex<double> filter_value(const PulseSequence& seq, double z);

/// |y_n(z)|^2, taken from the complex value.
double filter_magnitude_sq(const PulseSequence& seq, double z);

/// M_p = sum_j w_j d_j^p over all n+2 instants (0^0 = 1, so M_0 = 0).
/// M_p vanishing for p <= m is equivalent to the first m derivatives of y_n
/// vanishing at z = 0.
double moment_sum(const PulseSequence& seq, int p);

/// Scale against which moment_sum(seq, p) is compared: sum_j |w_j| d_j^p.
double moment_scale(const PulseSequence& seq, int p);

/// Largest m <= n with |M_p| <= tol * moment_scale(p) for all 1 <= p <= m.
int vanishing_order(const PulseSequence& seq, double tol = kMomentTolerance);

struct MomentReport {
  std::vector<double> moments;  // M_0 .. M_pmax
  int vanishing_order = 0;
  double tol = kMomentTolerance;
};

MomentReport moment_report(const PulseSequence& seq, int p_max,
                           double tol = kMomentTolerance);

/// D_p = sum_{i,j} w_i w_j (d_i - d_j)^p. Vanishes for p <= 2m+1 when the
/// sequence has vanishing order m; odd p vanish identically.
double delta_moment_sum(const PulseSequence& seq, int p);

/// sum_{i,j} |w_i w_j| |d_i - d_j|^p, the scale of D_p.
double delta_moment_scale(const PulseSequence& seq, int p);

}  // namespace plodd
