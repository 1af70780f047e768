#pragma once

#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "plodd/errors.hpp"
#include "plodd/sequence.hpp"
#include "plodd/spectral.hpp"

namespace plodd {

enum class InitStrategy { Auto, Cpmg, Udd, Warm };

std::string_view init_name(InitStrategy s);
InitStrategy parse_init(std::string_view name);

struct SolverOptions {
  double tolerance = 1e-10;  // max-norm of the scaled KKT residual
  int max_iterations = 200;
  double min_gap = 1e-8;         // ordering margin kept by the line search
  double rank_tolerance = 1e-10; // relative, for dropping dependent constraints
};

/// Minimize I_n over symmetric n-pulse sequences subject to the moment
/// constraints M_p = 0 for p = 1..floor(alpha/2).
struct PloddProblem {
  int n = 2;
  SpectrumExponent exponent{1.0};
  bool symmetric = true;
  InitStrategy init = InitStrategy::Auto;
  std::vector<double> warm_start;  // first-half instants, InitStrategy::Warm
  SolverOptions options;

  int constraint_count() const { return exponent.constraint_count(); }
  int free_count() const { return n / 2; }
};

/// Default symmetric problem with automatic initialization.
inline PloddProblem plodd_problem(int n, const SpectrumExponent& ex,
                                  const SolverOptions& options = {}) {
  PloddProblem problem;
  problem.n = n;
  problem.exponent = ex;
  problem.options = options;
  return problem;
}

/// Iterate of the KKT system. The objective is I_n / objective_scale;
/// `multipliers` are reported for the unscaled I_n. residual_norm is the
/// larger of the constraint violation and the stationarity error divided by
/// max(1, |scaled gradient|).
struct KktState {
  std::vector<double> deltas;          // d_1 .. d_{n/2}
  std::vector<double> multipliers;     // one per retained constraint
  std::vector<int> constraint_orders;  // retained moment orders p
  double objective_scale = 1.0;
  double residual_norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

struct Provenance {
  int n = 0;
  double alpha = 0.0;
  InitStrategy init = InitStrategy::Auto;
  std::vector<double> continuation;  // exponents solved before this one
};

struct OptimizedSequence {
  PulseSequence sequence;
  PrefactorResult prefactor;
  KktState kkt;
  Provenance provenance;
};

/// Raised when the Newton iteration stalls; carries the best iterate seen.
class SolverFailure : public NonConvergence {
 public:
  SolverFailure(const std::string& what, KktState best)
      : NonConvergence(what), best_(std::move(best)) {}
  const KktState& best() const { return best_; }

 private:
  KktState best_;
};

/// Throws std::invalid_argument for odd n, n < 2 or asymmetric problems,
/// InvalidExponent when alpha >= 2n+2 (no n-pulse sequence converges),
/// SolverFailure on stagnation and OrderingViolation when no damped step
/// keeps the instants ordered.
OptimizedSequence optimize_plodd(const PloddProblem& problem);

/// Stationarity components (one per free instant, divided by
/// state.objective_scale) followed by the retained constraint values.
std::vector<double> kkt_residual(const PloddProblem& problem,
                                 const KktState& state);

/// The convergence measure applied to kkt_residual: the larger of the
/// constraint violation and the stationarity error relative to
/// max(1, |scaled gradient|).
double kkt_residual_norm(const PloddProblem& problem, const KktState& state);

/// Full symmetric sequence from its first half.
std::vector<double> expand_symmetric(std::span<const double> half, int n);

/// Geometric exponent grid of `steps` points ending at alpha_to (a single
/// point when steps == 1).
std::vector<double> geometric_grid(double alpha_from, double alpha_to,
                                   int steps);

/// Solves along geometric_grid(alpha_from, alpha_to, steps), warm-starting
/// every problem after the first from the previous solution. Errors carry
/// the failing exponent in their message.
std::vector<OptimizedSequence> continuation_path(int n, double alpha_from,
                                                 double alpha_to, int steps,
                                                 const SolverOptions& options = {});

}  // namespace plodd
