#include "plodd/filter.hpp"

#include <cmath>
#include <cstdlib>

#include "plodd/numeric.hpp"

namespace plodd {

std::complex<double> filter_value(const PulseSequence& seq, double z) {
  const int n = seq.size();
  CompensatedSum re, im;
  for (int j = 0; j <= n + 1; ++j) {
    const double phase = z * seq.instant(j);
    const double w = seq.weight(j);
    re += w * std::cos(phase);
    im += w * std::sin(phase);
  }
  return {static_cast<double>(re.value()), static_cast<double>(im.value())};
}

double filter_magnitude_sq(const PulseSequence& seq, double z) {
  return std::norm(filter_value(seq, z));
}

double moment_sum(const PulseSequence& seq, int p) {
  const int n = seq.size();
  CompensatedSum sum;
  for (int j = 0; j <= n + 1; ++j) {
    sum += seq.weight(j) * ipow(seq.instant(j), p);
  }
  return static_cast<double>(sum.value());
}

double moment_scale(const PulseSequence& seq, int p) {
  const int n = seq.size();
  long double sum = 0.0L;
  for (int j = 0; j <= n + 1; ++j) {
    sum += std::abs(seq.weight(j)) * ipow(seq.instant(j), p);
  }
  return static_cast<double>(sum);
}

int vanishing_order(const PulseSequence& seq, double tol) {
  const int n = seq.size();
  int m = 0;
  for (int p = 1; p <= n; ++p) {
    if (std::abs(moment_sum(seq, p)) > tol * moment_scale(seq, p)) break;
    m = p;
  }
  return m;
}

MomentReport moment_report(const PulseSequence& seq, int p_max, double tol) {
  MomentReport report;
  report.tol = tol;
  report.moments.reserve(static_cast<std::size_t>(p_max + 1));
  for (int p = 0; p <= p_max; ++p) report.moments.push_back(moment_sum(seq, p));
  report.vanishing_order = vanishing_order(seq, tol);
  return report;
}

double delta_moment_sum(const PulseSequence& seq, int p) {
  const int n = seq.size();
  CompensatedSum sum;
  for (int i = 0; i <= n + 1; ++i) {
    for (int j = 0; j <= n + 1; ++j) {
      const long double phi = static_cast<long double>(seq.instant(i)) -
                              seq.instant(j);
      sum += static_cast<long double>(seq.weight(i) * seq.weight(j)) *
             ipow(phi, p);
    }
  }
  return static_cast<double>(sum.value());
}

double delta_moment_scale(const PulseSequence& seq, int p) {
  const int n = seq.size();
  long double sum = 0.0L;
  for (int i = 0; i <= n + 1; ++i) {
    for (int j = 0; j <= n + 1; ++j) {
      const long double phi = static_cast<long double>(seq.instant(i)) -
                              seq.instant(j);
      sum += std::abs(seq.weight(i) * seq.weight(j)) * ipow(std::fabs(phi), p);
    }
  }
  return static_cast<double>(sum);
}

}  // namespace plodd
