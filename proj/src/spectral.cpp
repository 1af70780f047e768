#include "plodd/spectral.hpp"

#include <cassert>
#include <cmath>
#include <numbers>

#include "plodd/errors.hpp"
#include "plodd/filter.hpp"
#include "plodd/numeric.hpp"

namespace plodd {

namespace {

inline long double point(std::span<const double> d, int j) {
  const int n = static_cast<int>(d.size());
  if (j == 0) return 0.0L;
  if (j == n + 1) return 1.0L;
  return d[static_cast<std::size_t>(j - 1)];
}

// Pair kernel K(|phi|): |phi|^alpha, times ln|phi| on the even branch.
inline long double pair_kernel(long double abs_phi, const SpectrumExponent& ex) {
  if (ex.branch() == ExponentBranch::EvenInteger) {
    return ipow(abs_phi, ex.integer_value()) * std::log(abs_phi);
  }
  if (ex.branch() == ExponentBranch::OddInteger) {
    return ipow(abs_phi, ex.integer_value());
  }
  return std::pow(abs_phi, static_cast<long double>(ex.alpha()));
}

// dK(phi)/dphi for signed phi != 0.
inline long double pair_kernel_derivative(long double phi,
                                          const SpectrumExponent& ex) {
  const long double a = std::fabs(phi);
  const long double sign = phi > 0 ? 1.0L : -1.0L;
  if (ex.branch() == ExponentBranch::EvenInteger) {
    const int k = ex.integer_value();
    return sign * ipow(a, k - 1) * (k * std::log(a) + 1.0L);
  }
  if (ex.branch() == ExponentBranch::OddInteger) {
    const int k = ex.integer_value();
    return sign * k * ipow(a, k - 1);
  }
  const long double alpha = ex.alpha();
  return sign * alpha * std::pow(a, alpha - 1.0L);
}

// d^2K/dphi^2, even in phi.
inline long double pair_kernel_second(long double phi, const SpectrumExponent& ex) {
  const long double a = std::fabs(phi);
  if (ex.branch() == ExponentBranch::EvenInteger) {
    const int k = ex.integer_value();
    return ipow(a, k - 2) * (k * (k - 1) * std::log(a) + 2.0L * k - 1.0L);
  }
  if (ex.branch() == ExponentBranch::OddInteger) {
    const int k = ex.integer_value();
    return k == 1 ? 0.0L : static_cast<long double>(k) * (k - 1) * ipow(a, k - 2);
  }
  const long double alpha = ex.alpha();
  return alpha * (alpha - 1.0L) * std::pow(a, alpha - 2.0L);
}

void require_feasible(const PulseSequence& seq, const SpectrumExponent& ex,
                      int& m) {
  m = vanishing_order(seq);
  if (!ex.converges_with(m)) throw DivergentIntegral(ex.alpha(), m);
}

}  // namespace

std::string_view branch_name(ExponentBranch b) {
  switch (b) {
    case ExponentBranch::EvenInteger: return "even-integer";
    case ExponentBranch::OddInteger: return "odd-integer";
    case ExponentBranch::NonInteger: return "non-integer";
  }
  return "non-integer";
}

SpectrumExponent::SpectrumExponent(double alpha) : alpha_(alpha) {
  if (!std::isfinite(alpha) || alpha <= 0.0) {
    throw InvalidExponent("spectrum exponent must be positive, got " +
                          std::to_string(alpha));
  }
  const double nearest = std::round(alpha);
  integer_ = static_cast<int>(nearest);
  if (std::abs(alpha - nearest) < kIntegerTolerance && integer_ > 0) {
    branch_ = (integer_ % 2 == 0) ? ExponentBranch::EvenInteger
                                  : ExponentBranch::OddInteger;
  } else {
    branch_ = ExponentBranch::NonInteger;
  }
}

int SpectrumExponent::constraint_count() const {
  if (is_integer()) return integer_ / 2;
  return static_cast<int>(std::floor(alpha_ / 2.0));
}

double branch_coefficient(const SpectrumExponent& ex) {
  switch (ex.branch()) {
    case ExponentBranch::EvenInteger: {
      const int k = ex.integer_value();
      const double sign = ((1 + k / 2) % 2 == 0) ? 1.0 : -1.0;
      return sign / std::tgamma(k + 1.0);
    }
    case ExponentBranch::OddInteger: {
      const int k = ex.integer_value();
      const double sign = (((k + 1) / 2) % 2 == 0) ? 1.0 : -1.0;
      return sign * (std::numbers::pi / 2.0) / std::tgamma(k + 1.0);
    }
    case ExponentBranch::NonInteger: {
      const double a = ex.alpha();
      // Reflection: Gamma(-a) = -pi / (a sin(pi a) Gamma(a)).
      const double gamma_neg =
          -std::numbers::pi / (a * std::sin(std::numbers::pi * a) * std::tgamma(a));
      return std::cos(std::numbers::pi * a / 2.0) * gamma_neg;
    }
  }
  return 0.0;
}

double prefactor_formula(std::span<const double> instants,
                         const SpectrumExponent& ex) {
  const int n = static_cast<int>(instants.size());
  CompensatedSum sum;
  for (int i = 0; i <= n + 1; ++i) {
    const long double di = point(instants, i);
    const int wi = pulse_weight(i, n);
    for (int j = 0; j <= n + 1; ++j) {
      if (i == j) continue;
      const long double phi = std::fabs(di - point(instants, j));
      sum += static_cast<long double>(wi * pulse_weight(j, n)) *
             pair_kernel(phi, ex);
    }
  }
  return static_cast<double>(branch_coefficient(ex) * sum.value());
}

void prefactor_formula_gradient(std::span<const double> instants,
                                const SpectrumExponent& ex,
                                std::span<double> gradient) {
  const int n = static_cast<int>(instants.size());
  assert(static_cast<int>(gradient.size()) == n);
  const long double coefficient = branch_coefficient(ex);
  for (int k = 1; k <= n; ++k) {
    const long double dk = point(instants, k);
    CompensatedSum sum;
    for (int j = 0; j <= n + 1; ++j) {
      if (j == k) continue;
      sum += pulse_weight(j, n) * pair_kernel_derivative(dk - point(instants, j), ex);
    }
    // Each unordered pair (k, j) appears twice in the ordered sum.
    gradient[static_cast<std::size_t>(k - 1)] = static_cast<double>(
        coefficient * 2.0L * pulse_weight(k, n) * sum.value());
  }
}

std::vector<double> prefactor_formula_hessian(std::span<const double> instants,
                                              const SpectrumExponent& ex) {
  const int n = static_cast<int>(instants.size());
  const long double coefficient = 2.0L * branch_coefficient(ex);
  std::vector<double> hess(static_cast<std::size_t>(n) * n, 0.0);
  for (int k = 1; k <= n; ++k) {
    const long double dk = point(instants, k);
    const int wk = pulse_weight(k, n);
    CompensatedSum diagonal;
    for (int j = 0; j <= n + 1; ++j) {
      if (j == k) continue;
      const long double second = pair_kernel_second(dk - point(instants, j), ex);
      diagonal += pulse_weight(j, n) * second;
      if (j >= 1 && j <= n) {
        hess[static_cast<std::size_t>((k - 1) * n + (j - 1))] =
            static_cast<double>(-coefficient * wk * pulse_weight(j, n) * second);
      }
    }
    hess[static_cast<std::size_t>((k - 1) * n + (k - 1))] =
        static_cast<double>(coefficient * wk * diagonal.value());
  }
  return hess;
}

PrefactorResult spectral_prefactor(const PulseSequence& seq,
                                   const SpectrumExponent& ex) {
  PrefactorResult result;
  require_feasible(seq, ex, result.m);
  result.branch = ex.branch();
  result.value = prefactor_formula(seq.instants(), ex);
  return result;
}

std::vector<double> prefactor_gradient(const PulseSequence& seq,
                                       const SpectrumExponent& ex) {
  int m = 0;
  require_feasible(seq, ex, m);
  std::vector<double> gradient(static_cast<std::size_t>(seq.size()));
  prefactor_formula_gradient(seq.instants(), ex, gradient);
  return gradient;
}

double decoherence_function(const PulseSequence& seq,
                            const SpectrumExponent& ex, double s0, double t) {
  if (s0 < 0.0 || t < 0.0) {
    throw std::invalid_argument("S_0 and t must be non-negative");
  }
  const double prefactor = spectral_prefactor(seq, ex).value;
  return s0 * std::pow(t, ex.alpha()) * prefactor;
}

double coherence(const PulseSequence& seq, const SpectrumExponent& ex,
                 double s0, double t) {
  return std::exp(-2.0 * decoherence_function(seq, ex, s0, t));
}

}  // namespace plodd
