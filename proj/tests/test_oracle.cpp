#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "plodd/errors.hpp"
#include "plodd/filter.hpp"
#include "plodd/oracle.hpp"
#include "plodd/spectral.hpp"
#include "support.hpp"

using namespace plodd;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST(Quadrature, ClosedForms) {
  const QuadratureEstimate free = prefactor_quadrature(make_custom({}), SpectrumExponent(1.0));
  EXPECT_LT(rel(free.value, std::numbers::pi), 1e-6);
  EXPECT_GT(free.error_bound, 0.0);
  const QuadratureEstimate half = prefactor_quadrature(make_custom({0.5}), SpectrumExponent(2.0));
  EXPECT_LT(rel(half.value, std::log(2.0)), 1e-6);
  EXPECT_NEAR(half.value, half.series_part + half.adaptive_part + half.tail_part, 1e-15);
}

TEST(Quadrature, FrozenReferenceValues) {
  // 30-digit reference quadrature.
  const struct {
    PulseSequence seq;
    double alpha;
    double value;
  } cases[] = {
      {make_udd(4), 3.0, 0.0190980079584661},
      {make_cpmg(10), 0.5, 24.5849795719922},
      {make_udd(10), 1.5, 0.526081104794082},
      {make_custom({0.5}), 0.5, 9.16637425798213},
  };
  for (const auto& c : cases) {
    const QuadratureEstimate q = prefactor_quadrature(c.seq, SpectrumExponent(c.alpha));
    EXPECT_LE(std::abs(q.value - c.value), std::max(1e-8, q.error_bound)) << "alpha=" << c.alpha;
  }
}

TEST(Quadrature, AgreesWithAnalyticFormula) {
  std::mt19937_64 rng(41);
  for (double alpha : {0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0}) {
    const SpectrumExponent ex(alpha);
    for (int n = 1; n <= 10; ++n) {
      std::vector<PulseSequence> seqs{make_udd(n), make_cpmg(n)};
      if (n % 2 == 0) {
        const auto d = support::random_feasible(n, ex.constraint_count(), rng);
        if (!d.empty()) seqs.emplace_back(d);
      }
      for (const auto& seq : seqs) {
        if (!ex.converges_with(vanishing_order(seq))) continue;
        const QuadratureEstimate q = prefactor_quadrature(seq, ex);
        const double analytic = spectral_prefactor(seq, ex).value;
        EXPECT_LE(std::abs(q.value - analytic), std::max(1e-8, q.error_bound))
            << "n=" << n << " alpha=" << alpha;
      }
    }
  }
}

TEST(Quadrature, RegulatorIndependence) {
  for (double alpha : {0.5, 2.0, 3.5}) {
    const SpectrumExponent ex(alpha);
    const PulseSequence seq = make_udd(6);
    const QuadratureEstimate a = prefactor_quadrature(seq, ex);
    QuadratureOptions opts;
    opts.epsilon = a.epsilon / 10.0;
    const QuadratureEstimate b = prefactor_quadrature(seq, ex, opts);
    EXPECT_LT(std::abs(a.value - b.value), std::max(a.error_bound, b.error_bound)) << alpha;
  }
}

TEST(Quadrature, TailCutoffIndependence) {
  for (double alpha : {0.5, 1.0, 2.5}) {
    const SpectrumExponent ex(alpha);
    const PulseSequence seq = make_cpmg(4);
    const QuadratureEstimate a = prefactor_quadrature(seq, ex);
    QuadratureOptions opts;
    opts.tail_start = 2.0 * a.tail_start;
    const QuadratureEstimate b = prefactor_quadrature(seq, ex, opts);
    EXPECT_LT(std::abs(a.value - b.value), std::max(a.error_bound, b.error_bound)) << alpha;
  }
}

TEST(Quadrature, InfeasibleThrows) {
  EXPECT_THROW(prefactor_quadrature(make_custom({}), SpectrumExponent(2.0)), DivergentIntegral);
  EXPECT_THROW(prefactor_quadrature(make_cpmg(6), SpectrumExponent(6.0)), DivergentIntegral);
}

TEST(DivergenceResidual, Examples) {
  std::mt19937_64 rng(42);
  const PulseSequence random_seq(support::random_instants(7, rng));
  const DivergenceResidual r = divergence_residual(random_seq, SpectrumExponent(3.5));
  ASSERT_FALSE(r.species.empty());
  EXPECT_EQ(r.species[0].order, 0);
  EXPECT_NEAR(r.species[0].coefficient, 0.0, 1e-15);

  const DivergenceResidual half = divergence_residual(make_custom({0.5}), SpectrumExponent(2.0));
  ASSERT_EQ(half.species.size(), 3u);
  EXPECT_EQ(half.species[2].kind, DivergenceKind::Log);
  EXPECT_LT(half.max_abs, 1e-15);

  const DivergenceResidual free = divergence_residual(make_custom({}), SpectrumExponent(2.0));
  ASSERT_EQ(free.species.size(), 3u);
  EXPECT_EQ(free.species[2].kind, DivergenceKind::Log);
  EXPECT_DOUBLE_EQ(free.species[2].coefficient, -2.0);
  EXPECT_DOUBLE_EQ(free.max_abs, 2.0);
}

TEST(DivergenceResidual, SpeciesFollowTheExponent) {
  const PulseSequence seq = make_udd(3);
  EXPECT_EQ(divergence_residual(seq, SpectrumExponent(0.5)).species.size(), 1u);
  EXPECT_EQ(divergence_residual(seq, SpectrumExponent(2.5)).species.size(), 3u);
  EXPECT_EQ(divergence_residual(seq, SpectrumExponent(3.0)).species.size(), 4u);
  for (const auto& s : divergence_residual(seq, SpectrumExponent(2.5)).species) {
    EXPECT_EQ(s.kind, DivergenceKind::Power);
  }
}

TEST(DivergenceResidual, CancellationMatchesFeasibility) {
  std::mt19937_64 rng(43);
  for (double alpha : {1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0}) {
    const SpectrumExponent ex(alpha);
    for (int n = 0; n <= 10; ++n) {
      std::vector<PulseSequence> seqs{PulseSequence(support::random_instants(n, rng))};
      if (n > 0) {
        seqs.push_back(make_udd(n));
        seqs.push_back(make_cpmg(n));
      }
      for (const auto& seq : seqs) {
        const bool feasible = ex.converges_with(vanishing_order(seq));
        const double residual = divergence_residual(seq, ex).max_abs;
        if (feasible) {
          EXPECT_LT(residual, 1e-9) << "n=" << n << " alpha=" << alpha;
        } else {
          EXPECT_GE(residual, 1e-9) << "n=" << n << " alpha=" << alpha;
        }
      }
    }
  }
}

TEST(DivergenceResidual, OddCpmgLogSpeciesIsSmall) {
  // Odd-n CPMG: M_1 = 0 and M_2 = 1/(2n^2), so the only surviving species at
  // alpha = 4 is D_4 = 6 M_2^2 = 1.5 / n^4.
  for (int n : {3, 5, 7, 9, 11}) {
    const DivergenceResidual r = divergence_residual(make_cpmg(n), SpectrumExponent(4.0));
    ASSERT_EQ(r.species.size(), 5u);
    EXPECT_EQ(r.species[4].kind, DivergenceKind::Log);
    EXPECT_NEAR(r.species[4].coefficient, 1.5 / std::pow(n, 4), 1e-14) << n;
    EXPECT_DOUBLE_EQ(r.max_abs, std::abs(r.species[4].coefficient));
  }
}
