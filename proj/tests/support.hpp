#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "plodd/filter.hpp"
#include "plodd/optimizer.hpp"
#include "plodd/sequence.hpp"

namespace plodd::support {

inline std::vector<double> instants_of(const PulseSequence& seq) {
  return {seq.instants().begin(), seq.instants().end()};
}

// Strictly ordered instants with every gap at least `min_gap`.
inline std::vector<double> random_instants(int n, std::mt19937_64& rng, double min_gap = 0.01) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (;;) {
    std::vector<double> d(static_cast<std::size_t>(n));
    for (auto& x : d) x = u(rng);
    std::sort(d.begin(), d.end());
    bool ok = true;
    double prev = 0.0;
    for (double x : d) {
      if (x - prev < min_gap) ok = false;
      prev = x;
    }
    if (1.0 - prev < min_gap) ok = false;
    if (ok) return d;
  }
}

// Random symmetric sequence (even n) pushed onto M_p = 0 for p <= m by
// Gauss-Newton on the free half. Empty when the projection fails.
inline std::vector<double> random_feasible(int n, int m, std::mt19937_64& rng) {
  const int h = n / 2;
  for (int attempt = 0; attempt < 200; ++attempt) {
    std::vector<double> half = random_instants(h, rng, 0.02);
    for (auto& x : half) x *= 0.5;
    if (m == 0) return expand_symmetric(half, n);
    Eigen::VectorXd x = Eigen::Map<Eigen::VectorXd>(half.data(), h);
    bool ok = false;
    for (int it = 0; it < 60; ++it) {
      std::vector<double> xs(x.data(), x.data() + h);
      std::vector<double> full;
      try {
        full = expand_symmetric(xs, n);
        PulseSequence probe(full);
      } catch (...) {
        break;
      }
      Eigen::VectorXd c(m);
      Eigen::MatrixXd jac(m, h);
      for (int p = 1; p <= m; ++p) {
        double value = 0.0;
        for (int j = 0; j <= n + 1; ++j) {
          const double d = j == 0 ? 0.0 : j == n + 1 ? 1.0 : full[static_cast<std::size_t>(j - 1)];
          value += pulse_weight(j, n) * std::pow(d, p);
        }
        c(p - 1) = value;
        for (int k = 1; k <= h; ++k) {
          const double d = x(k - 1);
          jac(p - 1, k - 1) = p * (pulse_weight(k, n) * std::pow(d, p - 1) -
                                   pulse_weight(n + 1 - k, n) * std::pow(1.0 - d, p - 1));
        }
      }
      if (c.cwiseAbs().maxCoeff() < 1e-14) {
        ok = true;
        break;
      }
      x -= jac.completeOrthogonalDecomposition().solve(c);
    }
    if (!ok) continue;
    std::vector<double> xs(x.data(), x.data() + h);
    try {
      std::vector<double> full = expand_symmetric(xs, n);
      PulseSequence seq(full);
      double gap = 1.0;
      for (int j = 0; j <= n; ++j) gap = std::min(gap, seq.instant(j + 1) - seq.instant(j));
      if (gap > 1e-3 && vanishing_order(seq) >= m) return full;
    } catch (...) {
    }
  }
  return {};
}

}  // namespace plodd::support
