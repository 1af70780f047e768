#include "plodd/oracle.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <numbers>

#include "plodd/errors.hpp"
#include "plodd/filter.hpp"
#include "plodd/numeric.hpp"

namespace plodd {

namespace {

constexpr double kSeriesSwitch = 2.0;  // below: moment series for y_n(z)
constexpr int kSeriesTerms = 48;       // 2^48/48! ~ 2e-47
constexpr int kPanelLimit = 200;

void disable_gsl_abort() {
  static const bool once = [] {
    gsl_set_error_handler_off();
    return true;
  }();
  (void)once;
}

struct WorkspaceDeleter {
  void operator()(gsl_integration_workspace* w) const {
    gsl_integration_workspace_free(w);
  }
};

double min_gap(const PulseSequence& seq) {
  double gap = 1.0;
  for (int j = 0; j <= seq.size(); ++j) {
    gap = std::min(gap, seq.instant(j + 1) - seq.instant(j));
  }
  return gap;
}

// |y_n(z)|^2 / z^(alpha+1) with y_n from its Taylor series at small z.
struct Integrand {
  const PulseSequence* seq;
  double alpha;
  int m;
  std::vector<long double> taylor;  // M'_k / k!, zero for k <= m

  double magnitude_sq(double z) const {
    if (z >= kSeriesSwitch) return filter_magnitude_sq(*seq, z);
    // y = sum_k (i z)^k M'_k / k!
    CompensatedSum re, im;
    long double zk = 1.0L;
    for (int k = 0; k < static_cast<int>(taylor.size()); ++k) {
      if (k > m) {
        const long double term = zk * taylor[static_cast<std::size_t>(k)];
        switch (k % 4) {
          case 0: re += term; break;
          case 1: im += term; break;
          case 2: re += -term; break;
          default: im += -term; break;
        }
      }
      zk *= z;
    }
    const long double r = re.value(), i = im.value();
    return static_cast<double>(r * r + i * i);
  }

  double operator()(double z) const {
    return magnitude_sq(z) / std::pow(z, alpha + 1.0);
  }

  static double call(double z, void* self) {
    return (*static_cast<const Integrand*>(self))(z);
  }
};

struct TailPiece {
  long double value = 0.0L;
  long double error = 0.0L;
};

// Re integral_Z^inf exp(i phi z) z^(-s) dz via repeated integration by
// parts, truncated where the remainder bound is smallest.
TailPiece oscillatory_tail(long double phi, long double s, long double z0) {
  const std::complex<long double> phase(std::cos(phi * z0), std::sin(phi * z0));
  // 1 / i^(k+1) for k mod 4 = 0..3
  static const std::complex<long double> inv_i_pow[4] = {
      {0.0L, -1.0L}, {-1.0L, 0.0L}, {0.0L, 1.0L}, {1.0L, 0.0L}};
  std::complex<long double> sum = 0.0L;
  // Term k has magnitude (s)_k / (phi^(k+1) Z^(s+k)); after including it the
  // remainder is bounded by the same magnitude.
  long double magnitude = 1.0L / (phi * std::pow(z0, s));
  long double bound = magnitude;
  for (int k = 0; k < 400; ++k) {
    sum += -phase * magnitude * inv_i_pow[k % 4];
    bound = magnitude;
    const long double ratio = (s + k) / (phi * z0);
    if (ratio >= 1.0L || bound < 1e-30L) break;
    magnitude *= ratio;
  }
  return {sum.real(), bound};
}

}  // namespace

QuadratureEstimate prefactor_quadrature(const PulseSequence& seq,
                                        const SpectrumExponent& ex,
                                        const QuadratureOptions& opts) {
  disable_gsl_abort();
  const int n = seq.size();
  const double alpha = ex.alpha();
  const int m = vanishing_order(seq);
  if (!ex.converges_with(m)) throw DivergentIntegral(alpha, m);

  QuadratureEstimate est;
  est.epsilon = opts.epsilon > 0.0 ? opts.epsilon : 1e-3 / (n + 1);
  est.tail_start = opts.tail_start > 0.0
                       ? opts.tail_start
                       : std::max(200.0 * (n + 1) * std::max(1.0, alpha),
                                  40.0 / min_gap(seq));
  const double eps = est.epsilon;
  const double z_tail = est.tail_start;
  if (!(eps < z_tail)) {
    throw std::invalid_argument("quadrature split points must satisfy epsilon < tail_start");
  }

  // Small-z piece: |y|^2 = sum_k (-1)^k z^(2k) D_2k / (2k)!.
  long double series = 0.0L;
  long double series_error = 0.0L;
  {
    const int leading = m + 1;  // first order 2k with nonzero D_2k
    for (int k = 1; k < leading; ++k) {
      if (std::abs(delta_moment_sum(seq, 2 * k)) >
          kMomentTolerance * delta_moment_scale(seq, 2 * k)) {
        throw DivergentIntegral(alpha, m);
      }
    }
    const int last = leading + opts.series_extra_orders / 2;
    long double factorial = std::tgamma(2.0L * leading + 1.0L);
    for (int k = leading; k <= last + 1; ++k) {
      const int order = 2 * k;
      const long double power = order - alpha;
      if (k == last + 1) {
        series_error = delta_moment_scale(seq, order) * std::pow(eps, power) /
                       (factorial * power);
        break;
      }
      const long double sign = (k % 2 == 0) ? 1.0L : -1.0L;
      series += sign * delta_moment_sum(seq, order) *
                std::pow(static_cast<long double>(eps), power) / (factorial * power);
      factorial *= (order + 1.0L) * (order + 2.0L);
    }
  }

  // Middle piece on geometric panels up to 1, then width-pi panels.
  Integrand integrand{&seq, alpha, m, {}};
  integrand.taylor.resize(kSeriesTerms + 1);
  {
    long double factorial = 1.0L;
    for (int k = 0; k <= kSeriesTerms; ++k) {
      if (k > 0) factorial *= k;
      integrand.taylor[static_cast<std::size_t>(k)] =
          k > m ? moment_sum(seq, k) / factorial : 0.0L;
    }
  }
  std::vector<double> edges{eps};
  while (edges.back() < 1.0 && edges.back() < z_tail) {
    edges.push_back(std::min({2.0 * edges.back(), 1.0, z_tail}));
  }
  while (edges.back() < z_tail) {
    edges.push_back(std::min(edges.back() + std::numbers::pi, z_tail));
  }

  std::unique_ptr<gsl_integration_workspace, WorkspaceDeleter> workspace(
      gsl_integration_workspace_alloc(kPanelLimit));
  gsl_function function{&Integrand::call, &integrand};
  CompensatedSum adaptive;
  long double adaptive_error = 0.0L;
  long double adaptive_abs = 0.0L;
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    double result = 0.0, abserr = 0.0;
    const int status = gsl_integration_qag(
        &function, edges[p], edges[p + 1], opts.panel_tolerance, 0.0,
        kPanelLimit, GSL_INTEG_GAUSS21, workspace.get(), &result, &abserr);
    if (status != GSL_SUCCESS && abserr > opts.panel_tolerance) {
      throw NonConvergence("quadrature panel [" + std::to_string(edges[p]) +
                           ", " + std::to_string(edges[p + 1]) +
                           "] missed its tolerance: " + gsl_strerror(status));
    }
    adaptive += result;
    adaptive_error += abserr;
    adaptive_abs += std::abs(result);
  }

  // Tail: mean (4n+2) z^(-alpha-1) plus oscillating pair terms.
  const long double s = alpha + 1.0L;
  long double tail = (4.0L * n + 2.0L) / (alpha * std::pow(static_cast<long double>(z_tail), alpha));
  long double tail_error = 0.0L;
  {
    CompensatedSum oscillating;
    for (int i = 0; i <= n + 1; ++i) {
      for (int j = i + 1; j <= n + 1; ++j) {
        const long double phi = static_cast<long double>(seq.instant(j)) - seq.instant(i);
        const long double w = 2.0L * seq.weight(i) * seq.weight(j);
        const TailPiece piece = oscillatory_tail(phi, s, z_tail);
        oscillating += w * piece.value;
        tail_error += std::fabs(w) * piece.error;
      }
    }
    tail += oscillating.value();
  }

  const long double value = series + adaptive.value() + tail;
  const long double roundoff =
      64.0L * std::numeric_limits<double>::epsilon() *
      (std::fabs(series) + adaptive_abs + std::fabs(tail));
  est.series_part = static_cast<double>(series);
  est.adaptive_part = static_cast<double>(adaptive.value());
  est.tail_part = static_cast<double>(tail);
  est.value = static_cast<double>(value);
  est.error_bound = static_cast<double>(std::fabs(series_error) + adaptive_error +
                                        tail_error + roundoff);
  if (!std::isfinite(est.value)) throw NonConvergence("quadrature produced a non-finite value");
  return est;
}

std::string DivergenceSpecies::label() const {
  if (kind == DivergenceKind::Log) return "ln(x)";
  return "x^(" + std::to_string(order) + "-alpha)";
}

DivergenceResidual divergence_residual(const PulseSequence& seq,
                                       const SpectrumExponent& ex) {
  DivergenceResidual residual;
  const int highest_power = ex.is_integer()
                                ? ex.integer_value() - 1
                                : static_cast<int>(std::ceil(ex.alpha())) - 1;
  for (int p = 0; p <= highest_power; ++p) {
    residual.species.push_back({DivergenceKind::Power, p, delta_moment_sum(seq, p)});
  }
  if (ex.is_integer()) {
    residual.species.push_back(
        {DivergenceKind::Log, ex.integer_value(), delta_moment_sum(seq, ex.integer_value())});
  }
  for (const auto& sp : residual.species) {
    residual.max_abs = std::max(residual.max_abs, std::abs(sp.coefficient));
  }
  return residual;
}

}  // namespace plodd
