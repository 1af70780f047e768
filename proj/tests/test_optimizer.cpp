#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "plodd/analysis.hpp"
#include "plodd/errors.hpp"
#include "plodd/filter.hpp"
#include "plodd/optimizer.hpp"
#include "plodd/spectral.hpp"
#include "support.hpp"

using namespace plodd;

namespace {

OptimizedSequence solve(int n, double alpha) { return optimize_plodd(plodd_problem(n, SpectrumExponent(alpha))); }

double value(const PulseSequence& seq, double alpha) {
  return spectral_prefactor(seq, SpectrumExponent(alpha)).value;
}

double objective(std::vector<double> d, double alpha) {
  return prefactor_formula(d, SpectrumExponent(alpha));
}

// Golden-section refinement of f on [lo, hi].
template <typename F>
double refine(F f, double lo, double hi) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  for (int it = 0; it < 200 && b - a > 1e-13; ++it) {
    const double c = b - r * (b - a), d = a + r * (b - a);
    if (f(c) < f(d)) b = d; else a = c;
  }
  return f(0.5 * (a + b));
}

}  // namespace

TEST(Optimize, TwoPulsesAtAlphaThreeIsExact) {
  const OptimizedSequence r = solve(2, 3.0);
  ASSERT_EQ(r.sequence.size(), 2);
  EXPECT_EQ(r.sequence.instants()[0], 0.25);
  EXPECT_EQ(r.sequence.instants()[1], 0.75);
  EXPECT_NEAR(r.prefactor.value, std::numbers::pi / 48.0, 1e-15);
}

TEST(Optimize, ConvergedStateSatisfiesContract) {
  for (double alpha : {1.5, 2.0, 3.0, 4.0, 6.0, 9.0}) {
    const PloddProblem problem = plodd_problem(10, SpectrumExponent(alpha));
    const OptimizedSequence r = optimize_plodd(problem);
    EXPECT_LE(r.kkt.residual_norm, 1e-10) << alpha;
    EXPECT_LE(kkt_residual_norm(problem, r.kkt), 1e-10) << alpha;
    EXPECT_TRUE(is_symmetric(r.sequence, 1e-12));
    for (int p = 1; p <= problem.constraint_count(); ++p) {
      EXPECT_LE(std::abs(moment_sum(r.sequence, p)), 1e-10) << "alpha=" << alpha << " p=" << p;
    }
    EXPECT_EQ(r.provenance.n, 10);
    EXPECT_EQ(r.provenance.alpha, alpha);
  }
}

TEST(KktResidual, VanishesAtHandSolvedPoint) {
  PloddProblem problem = plodd_problem(2, SpectrumExponent(3.0));
  KktState state;
  state.deltas = {0.25};
  state.multipliers = {std::numbers::pi / 16.0};
  state.constraint_orders = {1};
  const std::vector<double> r = kkt_residual(problem, state);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_NEAR(r[0], 0.0, 1e-14);
  EXPECT_NEAR(r[1], 0.0, 1e-15);
}

TEST(KktResidual, GrowsLinearlyWithPerturbation) {
  const PloddProblem problem = plodd_problem(10, SpectrumExponent(4.0));
  const OptimizedSequence r = optimize_plodd(problem);
  KktState a = r.kkt, b = r.kkt;
  a.deltas[2] += 1e-4;
  b.deltas[2] += 2e-4;
  const double ra = kkt_residual_norm(problem, a);
  const double rb = kkt_residual_norm(problem, b);
  EXPECT_GT(ra, 1e-8);
  EXPECT_NEAR(rb / ra, 2.0, 0.05);
}

TEST(Optimize, DominatesCanonicalSequences) {
  for (double alpha : {1.0, 2.0, 2.5, 3.0, 4.0, 5.0, 8.0}) {
    for (int n = 2; n <= 20; n += 2) {
      if (alpha >= 2.0 * n + 2.0) continue;
      const OptimizedSequence r = solve(n, alpha);
      EXPECT_LE(r.prefactor.value, value(make_udd(n), alpha) + 1e-12) << "n=" << n << " alpha=" << alpha;
      if (alpha < 6.0) {
        EXPECT_LE(r.prefactor.value, value(make_cpmg(n), alpha) + 1e-12) << "n=" << n << " alpha=" << alpha;
      }
    }
  }
}

TEST(Optimize, InstantsBracketedBetweenCanonicalSequences) {
  for (double alpha : {3.0, 3.5, 4.0, 4.5, 5.0}) {
    for (int n : {10, 12, 20}) {
      const OptimizedSequence r = solve(n, alpha);
      const PulseSequence udd = make_udd(n), cpmg = make_cpmg(n);
      for (int j = 1; j <= n / 2; ++j) {
        const double lo = std::min(udd.instant(j), cpmg.instant(j)) - 1e-6;
        const double hi = std::max(udd.instant(j), cpmg.instant(j)) + 1e-6;
        EXPECT_GE(r.sequence.instant(j), lo) << "n=" << n << " alpha=" << alpha << " j=" << j;
        EXPECT_LE(r.sequence.instant(j), hi) << "n=" << n << " alpha=" << alpha << " j=" << j;
      }
    }
  }
}

TEST(Optimize, ExcursionOutsideEnvelopeStaysSmallBelowThree) {
  for (double alpha : {2.0, 2.5}) {
    for (int n : {10, 12, 20}) {
      const OptimizedSequence r = solve(n, alpha);
      const PulseSequence udd = make_udd(n), cpmg = make_cpmg(n);
      for (int j = 1; j <= n / 2; ++j) {
        const double lo = std::min(udd.instant(j), cpmg.instant(j));
        const double hi = std::max(udd.instant(j), cpmg.instant(j));
        const double d = r.sequence.instant(j);
        EXPECT_LE(std::max(lo - d, d - hi), 0.01) << "n=" << n << " alpha=" << alpha << " j=" << j;
      }
    }
  }
}

TEST(Optimize, GridSearchFindsNothingBetterForTwoPulses) {
  for (double alpha : {1.5, 2.0, 2.5, 3.0, 3.5}) {
    const double solved = solve(2, alpha).prefactor.value;
    if (alpha >= 2.0) {
      EXPECT_NEAR(solved, objective({0.25, 0.75}, alpha), 1e-15);
      continue;
    }
    auto f = [alpha](double d1) { return objective({d1, 1.0 - d1}, alpha); };
    double best = f(0.001), best_d = 0.001;
    for (double d1 = 0.001; d1 < 0.5; d1 += 1e-3) {
      if (f(d1) < best) { best = f(d1); best_d = d1; }
    }
    best = std::min(best, refine(f, std::max(1e-6, best_d - 1e-3), std::min(0.5 - 1e-6, best_d + 1e-3)));
    EXPECT_LE(solved, best + 1e-6) << alpha;
  }
}

TEST(Optimize, GridSearchFindsNothingBetterForFourPulses) {
  for (double alpha : {1.5, 2.0, 2.5, 3.0, 3.5}) {
    const double solved = solve(4, alpha).prefactor.value;
    double best = std::numeric_limits<double>::infinity();
    if (alpha < 2.0) {
      double b1 = 0.0, b2 = 0.0;
      for (double d1 = 0.001; d1 < 0.5; d1 += 1e-3) {
        for (double d2 = d1 + 1e-3; d2 < 0.5; d2 += 1e-3) {
          const double v = objective({d1, d2, 1 - d2, 1 - d1}, alpha);
          if (v < best) { best = v; b1 = d1; b2 = d2; }
        }
      }
      // Coordinate refinement around the best grid point.
      for (int sweep = 0; sweep < 20; ++sweep) {
        const double c2 = b2;
        auto f1 = [&](double d1) { return objective({d1, c2, 1 - c2, 1 - d1}, alpha); };
        double lo = std::max(1e-6, b1 - 2e-3), hi = std::min(c2 - 1e-6, b1 + 2e-3);
        for (int it = 0; it < 100; ++it) {
          const double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
          if (f1(m1) < f1(m2)) hi = m2; else lo = m1;
        }
        b1 = 0.5 * (lo + hi);
        const double c1 = b1;
        auto f2 = [&](double d2) { return objective({c1, d2, 1 - d2, 1 - c1}, alpha); };
        lo = std::max(c1 + 1e-6, b2 - 2e-3);
        hi = std::min(0.5 - 1e-6, b2 + 2e-3);
        for (int it = 0; it < 100; ++it) {
          const double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
          if (f2(m1) < f2(m2)) hi = m2; else lo = m1;
        }
        b2 = 0.5 * (lo + hi);
        best = std::min(best, f2(b2));
      }
    } else {
      // The single constraint fixes d2 = d1 + 1/4.
      auto f = [alpha](double d1) { return objective({d1, d1 + 0.25, 0.75 - d1, 1 - d1}, alpha); };
      double best_d = 0.001;
      for (double d1 = 0.001; d1 < 0.125; d1 += 1e-3) {
        if (f(d1) < best) { best = f(d1); best_d = d1; }
      }
      best = std::min(best, refine(f, std::max(1e-6, best_d - 1e-3), std::min(0.125 - 1e-6, best_d + 1e-3)));
    }
    EXPECT_LE(solved, best + 1e-6) << alpha;
  }
}

TEST(Optimize, Deterministic) {
  const OptimizedSequence a = solve(12, 5.0);
  const OptimizedSequence b = solve(12, 5.0);
  EXPECT_EQ(support::instants_of(a.sequence), support::instants_of(b.sequence));
  EXPECT_EQ(a.prefactor.value, b.prefactor.value);
  EXPECT_EQ(a.kkt.multipliers, b.kkt.multipliers);
  EXPECT_EQ(a.kkt.iterations, b.kkt.iterations);
}

TEST(Optimize, CloseToCpmgAtAlphaTwo) {
  const OptimizedSequence r = solve(10, 2.0);
  EXPECT_LE(max_instant_gap(r.sequence, make_cpmg(10)), 0.02);
}

TEST(Optimize, ApproachesUddAsAlphaGrows) {
  double previous = std::numeric_limits<double>::infinity();
  for (double alpha : {2.0, 4.0, 8.0, 16.0}) {
    const double gap = max_instant_gap(solve(10, alpha).sequence, make_udd(10));
    EXPECT_LT(gap, previous) << alpha;
    previous = gap;
  }
}

TEST(Optimize, WarmStartFromCanonicalInit) {
  PloddProblem problem = plodd_problem(10, SpectrumExponent(4.0));
  const OptimizedSequence reference = optimize_plodd(problem);
  problem.init = InitStrategy::Warm;
  problem.warm_start = {0.03, 0.11, 0.2, 0.31, 0.42};
  const OptimizedSequence warm = optimize_plodd(problem);
  EXPECT_LE(max_instant_gap(warm.sequence, reference.sequence), 1e-8);
  EXPECT_EQ(warm.provenance.init, InitStrategy::Warm);
}

TEST(Optimize, RejectsInvalidProblems) {
  EXPECT_THROW(optimize_plodd(plodd_problem(3, SpectrumExponent(2.0))), std::invalid_argument);
  EXPECT_THROW(optimize_plodd(plodd_problem(0, SpectrumExponent(2.0))), std::invalid_argument);
  PloddProblem asym = plodd_problem(4, SpectrumExponent(2.0));
  asym.symmetric = false;
  EXPECT_THROW(optimize_plodd(asym), std::invalid_argument);
  EXPECT_THROW(optimize_plodd(plodd_problem(2, SpectrumExponent(6.0))), InvalidExponent);
  EXPECT_THROW(optimize_plodd(plodd_problem(4, SpectrumExponent(0.5))), OrderingViolation);
  EXPECT_THROW(SpectrumExponent(0.0), InvalidExponent);
  PloddProblem warm = plodd_problem(4, SpectrumExponent(2.0));
  warm.init = InitStrategy::Warm;
  EXPECT_THROW(optimize_plodd(warm), std::invalid_argument);
}

TEST(Optimize, IterationCapReportsBestIterate) {
  SolverOptions options;
  options.max_iterations = 1;
  options.tolerance = 1e-300;
  PloddProblem problem = plodd_problem(20, SpectrumExponent(7.0), options);
  problem.init = InitStrategy::Cpmg;
  try {
    optimize_plodd(problem);
    FAIL() << "expected SolverFailure";
  } catch (const SolverFailure& e) {
    EXPECT_EQ(e.best().deltas.size(), 10u);
  }
}

TEST(Continuation, SingleStepMatchesDirectSolve) {
  const auto path = continuation_path(10, 3.0, 6.0, 1);
  ASSERT_EQ(path.size(), 1u);
  const OptimizedSequence direct = solve(10, 6.0);
  EXPECT_EQ(support::instants_of(path[0].sequence), support::instants_of(direct.sequence));
}

TEST(Continuation, GeometricGrid) {
  const auto g = geometric_grid(2.0, 12.0, 20);
  ASSERT_EQ(g.size(), 20u);
  EXPECT_DOUBLE_EQ(g.front(), 2.0);
  EXPECT_EQ(g.back(), 12.0);
  for (std::size_t i = 2; i < g.size(); ++i) EXPECT_NEAR(g[i] / g[i - 1], g[1] / g[0], 1e-12);
  EXPECT_EQ(geometric_grid(2.0, 5.0, 1), std::vector<double>{5.0});
}

TEST(Continuation, PathTowardsUddIsMonotoneAndReversible) {
  const auto forward = continuation_path(10, 2.0, 12.0, 20);
  const auto backward = continuation_path(10, 12.0, 2.0, 20);
  ASSERT_EQ(forward.size(), 20u);
  ASSERT_EQ(backward.size(), 20u);
  const PulseSequence udd = make_udd(10);
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < forward.size(); ++i) {
    EXPECT_LE(forward[i].kkt.residual_norm, 1e-10);
    const double gap = max_instant_gap(forward[i].sequence, udd);
    EXPECT_LE(gap, previous + 1e-6) << "step " << i;
    previous = gap;
    const OptimizedSequence& mirror = backward[forward.size() - 1 - i];
    EXPECT_NEAR(mirror.provenance.alpha, forward[i].provenance.alpha, 1e-12);
    EXPECT_LE(max_instant_gap(mirror.sequence, forward[i].sequence), 1e-8) << "step " << i;
  }
  EXPECT_EQ(forward.back().provenance.continuation.size(), 19u);
}

TEST(Symmetry, ExpandMirrorsTheFirstHalf) {
  const auto full = expand_symmetric(std::vector<double>{0.1, 0.3}, 4);
  EXPECT_EQ(full, (std::vector<double>{0.1, 0.3, 0.7, 0.9}));
}
