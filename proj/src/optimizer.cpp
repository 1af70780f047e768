#include "plodd/optimizer.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "plodd/filter.hpp"
#include "plodd/numeric.hpp"

namespace plodd {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Objective and constraints of the symmetric problem in the free half
// x = (d_1 .. d_h), h = n/2, with d_{n+1-k} = 1 - x_k.
class SymmetricModel {
 public:
  SymmetricModel(int n, const SpectrumExponent& ex) : n_(n), h_(n / 2), ex_(ex) {}

  int free_count() const { return h_; }

  std::vector<double> expand(const VectorXd& x) const {
    return expand_symmetric({x.data(), static_cast<std::size_t>(x.size())}, n_);
  }

  double prefactor(const VectorXd& x) const {
    return prefactor_formula(expand(x), ex_);
  }

  VectorXd prefactor_gradient(const VectorXd& x) const {
    const std::vector<double> full = expand(x);
    std::vector<double> g(full.size());
    prefactor_formula_gradient(full, ex_, g);
    VectorXd reduced(h_);
    for (int k = 0; k < h_; ++k) {
      reduced(k) = g[static_cast<std::size_t>(k)] -
                   g[static_cast<std::size_t>(n_ - 1 - k)];
    }
    return reduced;
  }

  MatrixXd prefactor_hessian(const VectorXd& x) const {
    const std::vector<double> full = expand(x);
    const std::vector<double> hess = prefactor_formula_hessian(full, ex_);
    auto at = [&](int i, int j) { return hess[static_cast<std::size_t>(i * n_ + j)]; };
    MatrixXd reduced(h_, h_);
    for (int a = 0; a < h_; ++a) {
      const int ma = n_ - 1 - a;
      for (int b = 0; b < h_; ++b) {
        const int mb = n_ - 1 - b;
        reduced(a, b) = at(a, b) - at(a, mb) - at(ma, b) + at(ma, mb);
      }
    }
    return reduced;
  }

  // Moment Hessians are diagonal in the free coordinates.
  VectorXd moment_hessian_diagonal(const VectorXd& x, int p) const {
    VectorXd diag(h_);
    for (int k = 1; k <= h_; ++k) {
      const long double d = x(k - 1);
      const long double mirror = 1.0L - d;
      diag(k - 1) = p < 2 ? 0.0
                          : static_cast<double>(
                                static_cast<long double>(p) * (p - 1) *
                                (pulse_weight(k, n_) * ipow(d, p - 2) +
                                 pulse_weight(n_ + 1 - k, n_) * ipow(mirror, p - 2)));
    }
    return diag;
  }

  double moment(const VectorXd& x, int p) const {
    const std::vector<double> full = expand(x);
    CompensatedSum sum;
    for (int j = 0; j <= n_ + 1; ++j) {
      const long double d = j == 0 ? 0.0L : j == n_ + 1 ? 1.0L : full[static_cast<std::size_t>(j - 1)];
      sum += pulse_weight(j, n_) * ipow(d, p);
    }
    return static_cast<double>(sum.value());
  }

  VectorXd moment_gradient(const VectorXd& x, int p) const {
    VectorXd grad(h_);
    for (int k = 1; k <= h_; ++k) {
      const long double d = x(k - 1);
      const long double mirror = 1.0L - d;
      grad(k - 1) = static_cast<double>(
          p * (pulse_weight(k, n_) * ipow(d, p - 1) -
               pulse_weight(n_ + 1 - k, n_) * ipow(mirror, p - 1)));
    }
    return grad;
  }

  MatrixXd jacobian(const VectorXd& x, const std::vector<int>& orders) const {
    MatrixXd j(static_cast<Eigen::Index>(orders.size()), h_);
    for (std::size_t r = 0; r < orders.size(); ++r) {
      j.row(static_cast<Eigen::Index>(r)) = moment_gradient(x, orders[r]).transpose();
    }
    return j;
  }

  VectorXd constraints(const VectorXd& x, const std::vector<int>& orders) const {
    VectorXd c(static_cast<Eigen::Index>(orders.size()));
    for (std::size_t r = 0; r < orders.size(); ++r) {
      c(static_cast<Eigen::Index>(r)) = moment(x, orders[r]);
    }
    return c;
  }

  // Smallest distance between consecutive points of the full sequence,
  // including the endpoints and the gap across the centre.
  double ordering_margin(const VectorXd& x) const {
    if (h_ == 0) return 1.0;
    double margin = x(0);
    for (int k = 1; k < h_; ++k) margin = std::min(margin, x(k) - x(k - 1));
    return std::min(margin, 1.0 - 2.0 * x(h_ - 1));
  }

 private:
  int n_;
  int h_;
  SpectrumExponent ex_;
};

// Moment orders whose constraint gradients are independent at x. For
// symmetric sequences every even-order constraint is implied by the lower
// ones, so the full set is rank deficient by construction.
std::vector<int> select_constraints(const SymmetricModel& model,
                                    const VectorXd& x, int count,
                                    double rank_tolerance) {
  std::vector<int> all(static_cast<std::size_t>(count));
  for (int p = 1; p <= count; ++p) all[static_cast<std::size_t>(p - 1)] = p;
  if (count == 0) return all;
  const MatrixXd jt = model.jacobian(x, all).transpose();
  Eigen::ColPivHouseholderQR<MatrixXd> qr(jt);
  qr.setThreshold(rank_tolerance);
  const Eigen::Index rank = qr.rank();
  std::vector<int> kept;
  for (Eigen::Index i = 0; i < rank; ++i) {
    kept.push_back(all[static_cast<std::size_t>(qr.colsPermutation().indices()(i))]);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

VectorXd least_squares_multipliers(const MatrixXd& jac, const VectorXd& grad) {
  if (jac.rows() == 0) return VectorXd(0);
  return jac.transpose().colPivHouseholderQr().solve(grad);
}

double max_abs(const VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

constexpr double kRestoreTolerance = 1e-14;
constexpr int kFallbackSteps = 8;
constexpr double kCollapseFactor = 100.0;

// One minimum-norm Newton step on the constraints alone, damped to keep
// the instants ordered.
VectorXd project(const SymmetricModel& model, VectorXd x,
                 const std::vector<int>& orders, double min_gap) {
  if (orders.empty()) return x;
  const MatrixXd jac = model.jacobian(x, orders);
  const VectorXd c = model.constraints(x, orders);
  const VectorXd step = -jac.completeOrthogonalDecomposition().solve(c);
  for (double t = 1.0; t > 1e-6; t *= 0.5) {
    const VectorXd trial = x + t * step;
    if (model.ordering_margin(trial) >= min_gap) return trial;
  }
  return x;
}

// Gauss-Newton return to the constraint manifold. Off the manifold the
// closed-form prefactor is not the value of any convergent integral, so
// iterates are kept feasible. Fails when ordering breaks or |c| stalls.
std::optional<VectorXd> restore(const SymmetricModel& model, VectorXd x,
                                const std::vector<int>& orders, double min_gap) {
  if (orders.empty()) return x;
  double previous = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 40; ++k) {
    const VectorXd c = model.constraints(x, orders);
    const double violation = max_abs(c);
    if (violation <= kRestoreTolerance) return x;
    if (violation >= previous) return violation <= 1e2 * kRestoreTolerance ? std::optional(x) : std::nullopt;
    previous = violation;
    x -= model.jacobian(x, orders).completeOrthogonalDecomposition().solve(c);
    if (model.ordering_margin(x) < min_gap) return std::nullopt;
  }
  return std::nullopt;
}

struct Evaluation {
  double objective = 0.0;  // scaled
  VectorXd gradient;       // scaled
  VectorXd constraints;
  MatrixXd jacobian;
};

Evaluation evaluate(const SymmetricModel& model, const VectorXd& x,
                    const std::vector<int>& orders, double scale) {
  Evaluation e;
  e.objective = model.prefactor(x) / scale;
  e.gradient = model.prefactor_gradient(x) / scale;
  e.constraints = model.constraints(x, orders);
  e.jacobian = model.jacobian(x, orders);
  return e;
}

// Stationarity is measured relative to the gradient size: near high-order
// optima the scaled gradient reaches 1e4 and cancels to roughly 1e-14 of that.
double residual_norm(const Evaluation& e, const VectorXd& lambda) {
  VectorXd stationarity = e.gradient;
  if (lambda.size() > 0) stationarity -= e.jacobian.transpose() * lambda;
  const double reference = std::max(1.0, max_abs(e.gradient));
  return std::max(max_abs(stationarity) / reference, max_abs(e.constraints));
}

// Hessian of the scaled Lagrangian.
MatrixXd lagrangian_hessian(const SymmetricModel& model, const VectorXd& x,
                            const std::vector<int>& orders,
                            const VectorXd& lambda, double scale) {
  MatrixXd hess = model.prefactor_hessian(x) / scale;
  for (std::size_t r = 0; r < orders.size(); ++r) {
    hess.diagonal() -= lambda(static_cast<Eigen::Index>(r)) *
                       model.moment_hessian_diagonal(x, orders[r]);
  }
  return 0.5 * (hess + hess.transpose());
}

// Orthonormal basis of the null space of the constraint Jacobian.
MatrixXd null_space(const MatrixXd& jac, Eigen::Index h) {
  const Eigen::Index r = jac.rows();
  if (r == 0) return MatrixXd::Identity(h, h);
  Eigen::HouseholderQR<MatrixXd> qr(jac.transpose());
  const MatrixXd q = qr.householderQ() * MatrixXd::Identity(h, h);
  return q.rightCols(h - r);
}

struct NewtonStep {
  VectorXd dx;
  VectorXd multipliers;
  double shift = 0.0;  // largest eigenvalue change made to the reduced Hessian
};

// Null-space solution of the KKT system
//   H dx - J^T lambda = -g,  J dx = -c.
// The objective curvature can exceed the constraint scale by many orders of
// magnitude, which defeats a monolithic LU of the bordered matrix.
// `damping` adds a multiple of the largest curvature to the reduced Hessian,
// turning the tangential step towards projected steepest descent.
NewtonStep newton_step(const MatrixXd& hess, const MatrixXd& jac,
                       const VectorXd& grad, const VectorXd& c, double damping) {
  const Eigen::Index h = hess.rows();
  const Eigen::Index r = jac.rows();
  NewtonStep step;
  VectorXd normal = VectorXd::Zero(h);
  if (r > 0) normal = -jac.completeOrthogonalDecomposition().solve(c);
  step.dx = normal;
  if (r < h) {
    const MatrixXd basis = null_space(jac, h);
    MatrixXd reduced = basis.transpose() * hess * basis;
    reduced = 0.5 * (reduced + reduced.transpose());
    // Negative curvature is reflected and near-zero curvature raised to a
    // floor, so the tangential step is a descent direction.
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(reduced);
    VectorXd values = eig.eigenvalues();
    const double floor = 1e-10 * std::max(1e-300, values.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < values.size(); ++i) {
      const double fixed = std::max(std::abs(values(i)), floor);
      step.shift = std::max(step.shift, fixed - values(i));
      values(i) = fixed;
    }
    if (damping > 0.0) {
      const double lift = damping * values.cwiseAbs().maxCoeff();
      values.array() += lift;
      step.shift = std::max(step.shift, lift);
    }
    reduced = eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
    const VectorXd rhs = -basis.transpose() * (grad + hess * normal);
    step.dx += basis * reduced.ldlt().solve(rhs);
  }
  if (r > 0) {
    step.multipliers = jac.transpose().colPivHouseholderQr().solve(grad + hess * step.dx);
  } else {
    step.multipliers = VectorXd(0);
  }
  return step;
}

KktState make_state(const VectorXd& x, const VectorXd& lambda,
                    const std::vector<int>& orders, double scale,
                    double residual, int iterations) {
  KktState s;
  s.deltas.assign(x.data(), x.data() + x.size());
  s.multipliers.resize(static_cast<std::size_t>(lambda.size()));
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    s.multipliers[static_cast<std::size_t>(i)] = lambda(i) * scale;
  }
  s.constraint_orders = orders;
  s.objective_scale = scale;
  s.residual_norm = residual;
  s.iterations = iterations;
  return s;
}

std::string describe(const PloddProblem& p) {
  std::ostringstream os;
  os << "PLODD n=" << p.n << " alpha=" << p.exponent.alpha();
  return os.str();
}

VectorXd initial_point(const PloddProblem& problem) {
  const int h = problem.free_count();
  std::vector<double> half;
  InitStrategy init = problem.init;
  if (init == InitStrategy::Auto) {
    init = problem.exponent.alpha() < 4.0 ? InitStrategy::Cpmg : InitStrategy::Udd;
  }
  switch (init) {
    case InitStrategy::Cpmg: {
      const PulseSequence seq = make_cpmg(problem.n);
      half.assign(seq.instants().begin(), seq.instants().begin() + h);
      break;
    }
    case InitStrategy::Udd: {
      const PulseSequence seq = make_udd(problem.n);
      half.assign(seq.instants().begin(), seq.instants().begin() + h);
      break;
    }
    case InitStrategy::Warm:
      if (static_cast<int>(problem.warm_start.size()) != h) {
        throw std::invalid_argument("warm start needs n/2 instants");
      }
      half = problem.warm_start;
      break;
    case InitStrategy::Auto:
      break;
  }
  return Eigen::Map<const VectorXd>(half.data(), h);
}


OptimizedSequence solve_direct(const PloddProblem& problem) {
  const double alpha = problem.exponent.alpha();
  const SolverOptions& opt = problem.options;
  const SymmetricModel model(problem.n, problem.exponent);
  const int h = model.free_count();

  VectorXd x = initial_point(problem);
  const std::vector<int> orders =
      select_constraints(model, x, problem.constraint_count(), opt.rank_tolerance);
  if (static_cast<int>(orders.size()) > h) {
    throw InvalidExponent(describe(problem) + ": more independent constraints than free instants");
  }
  x = project(model, x, orders, opt.min_gap);
  if (model.ordering_margin(x) < opt.min_gap) {
    throw OrderingViolation(describe(problem) + ": initial point is not ordered");
  }
  if (auto feasible = restore(model, x, orders, opt.min_gap)) {
    x = *feasible;
  } else {
    throw OrderingViolation(describe(problem) + ": initial point cannot be made feasible");
  }

  const double initial_value = std::abs(model.prefactor(x));
  const double scale = (std::isfinite(initial_value) && initial_value > 0.0) ? initial_value : 1.0;

  Evaluation cur = evaluate(model, x, orders, scale);
  VectorXd lambda = least_squares_multipliers(cur.jacobian, cur.gradient);
  double residual = residual_norm(cur, lambda);

  KktState best = make_state(x, lambda, orders, scale, residual, 0);
  int iteration = 0;
  for (; iteration < opt.max_iterations && residual > opt.tolerance; ++iteration) {
    const MatrixXd hess = lagrangian_hessian(model, x, orders, lambda, scale);
    bool accepted = false;
    bool ordered_once = false;
    for (double damping : {0.0, 1e-6, 1e-4, 1e-2, 1.0, 1e2, 1e4}) {
      const NewtonStep step =
          newton_step(hess, cur.jacobian, cur.gradient, cur.constraints, damping);
      const double slope = cur.gradient.dot(step.dx);
      for (double t = 1.0; t >= 1e-14; t *= 0.5) {
        VectorXd trial = x + t * step.dx;
        if (model.ordering_margin(trial) < opt.min_gap) continue;
        ordered_once = true;
        const std::optional<VectorXd> feasible = restore(model, trial, orders, opt.min_gap);
        if (!feasible) continue;
        trial = *feasible;
        Evaluation next = evaluate(model, trial, orders, scale);
        const VectorXd trial_lambda = lambda + t * (step.multipliers - lambda);
        const double trial_residual = residual_norm(next, trial_lambda);
        const bool armijo =
            slope < 0.0 && next.objective <= cur.objective + 1e-4 * t * slope;
        const bool newton_like =
            step.shift == 0.0 && trial_residual <= (1.0 - 1e-4 * t) * residual;
        if (armijo || newton_like) {
          x = trial;
          lambda = trial_lambda;
          cur = std::move(next);
          residual = trial_residual;
          accepted = true;
          break;
        }
      }
      if (accepted) break;
    }
    // Descent pinned against the ordering wall means adjacent pulses merge;
    // there is no interior minimizer to converge to.
    if (accepted && model.ordering_margin(x) < kCollapseFactor * opt.min_gap) {
      throw OrderingViolation(describe(problem) +
                              ": pulses merge, the iterate reached the ordering margin");
    }
    if (residual < best.residual_norm) {
      best = make_state(x, lambda, orders, scale, residual, iteration + 1);
    }
    if (!accepted) {
      if (!ordered_once) {
        throw OrderingViolation(describe(problem) +
                                ": Newton step cannot be damped into the ordered simplex");
      }
      // Multipliers re-estimated once before giving up.
      const VectorXd refit = least_squares_multipliers(cur.jacobian, cur.gradient);
      const double refit_residual = residual_norm(cur, refit);
      if (refit_residual < residual) {
        lambda = refit;
        residual = refit_residual;
        continue;
      }
      throw SolverFailure(describe(problem) + ": line search stalled at residual " +
                              std::to_string(residual),
                          best);
    }
  }

  KktState state = make_state(x, lambda, orders, scale, residual, iteration);
  if (residual > opt.tolerance) {
    throw SolverFailure(describe(problem) + ": no convergence after " +
                            std::to_string(iteration) + " iterations (residual " +
                            std::to_string(residual) + ")",
                        best.residual_norm < residual ? best : state);
  }
  // Every requested moment, including the dropped dependent ones.
  for (int p = 1; p <= problem.constraint_count(); ++p) {
    if (std::abs(model.moment(x, p)) > opt.tolerance) {
      throw SolverFailure(describe(problem) + ": moment constraint p=" +
                              std::to_string(p) + " violated at convergence",
                          state);
    }
  }

  OptimizedSequence out;
  out.sequence = PulseSequence(model.expand(x), {Family::Plodd, problem.n, 0, alpha});
  out.prefactor = spectral_prefactor(out.sequence, problem.exponent);
  out.kkt = std::move(state);
  out.provenance = {problem.n, alpha, problem.init, {}};
  return out;
}

}  // namespace

std::string_view init_name(InitStrategy s) {
  switch (s) {
    case InitStrategy::Auto: return "auto";
    case InitStrategy::Cpmg: return "cpmg";
    case InitStrategy::Udd: return "udd";
    case InitStrategy::Warm: return "warm";
  }
  return "auto";
}

InitStrategy parse_init(std::string_view name) {
  for (InitStrategy s : {InitStrategy::Auto, InitStrategy::Cpmg,
                         InitStrategy::Udd, InitStrategy::Warm}) {
    if (name == init_name(s)) return s;
  }
  throw std::invalid_argument("unknown init strategy '" + std::string(name) + "'");
}

std::vector<double> expand_symmetric(std::span<const double> half, int n) {
  std::vector<double> full(static_cast<std::size_t>(n));
  const std::size_t h = half.size();
  for (std::size_t k = 0; k < h; ++k) {
    full[k] = half[k];
    full[static_cast<std::size_t>(n) - 1 - k] = 1.0 - half[k];
  }
  return full;
}

std::vector<double> kkt_residual(const PloddProblem& problem,
                                 const KktState& state) {
  const SymmetricModel model(problem.n, problem.exponent);
  const VectorXd x = Eigen::Map<const VectorXd>(
      state.deltas.data(), static_cast<Eigen::Index>(state.deltas.size()));
  const std::vector<int>& orders = state.constraint_orders;
  VectorXd stationarity = model.prefactor_gradient(x);
  for (std::size_t i = 0; i < orders.size(); ++i) {
    stationarity -= state.multipliers[i] * model.moment_gradient(x, orders[i]);
  }
  stationarity /= state.objective_scale;
  std::vector<double> out(stationarity.data(), stationarity.data() + stationarity.size());
  for (int p : orders) out.push_back(model.moment(x, p));
  return out;
}


namespace {

PloddProblem with_init(PloddProblem problem, InitStrategy init) {
  problem.init = init;
  return problem;
}

}  // namespace

double kkt_residual_norm(const PloddProblem& problem, const KktState& state) {
  const SymmetricModel model(problem.n, problem.exponent);
  const VectorXd x = Eigen::Map<const VectorXd>(
      state.deltas.data(), static_cast<Eigen::Index>(state.deltas.size()));
  const Evaluation e = evaluate(model, x, state.constraint_orders, state.objective_scale);
  VectorXd lambda(static_cast<Eigen::Index>(state.multipliers.size()));
  for (std::size_t i = 0; i < state.multipliers.size(); ++i) {
    lambda(static_cast<Eigen::Index>(i)) = state.multipliers[i] / state.objective_scale;
  }
  return residual_norm(e, lambda);
}

OptimizedSequence optimize_plodd(const PloddProblem& problem) {
  if (!problem.symmetric) {
    throw std::invalid_argument("only symmetric PLODD sequences are supported");
  }
  if (problem.n < 2 || problem.n % 2 != 0) {
    throw std::invalid_argument("PLODD needs an even pulse count n >= 2");
  }
  const double alpha = problem.exponent.alpha();
  if (alpha >= 2.0 * problem.n + 2.0) {
    throw InvalidExponent("no " + std::to_string(problem.n) +
                          "-pulse sequence converges for alpha >= 2n+2");
  }
  try {
    return solve_direct(problem);
  } catch (const NonConvergence&) {
    if (problem.init != InitStrategy::Auto) throw;
  } catch (const OrderingViolation&) {
    if (problem.init != InitStrategy::Auto) throw;
  }
  // Fallbacks for the automatic start: the other canonical sequence, then a
  // warm-started continuation from alpha = 2 where CPMG is close to optimal.
  const InitStrategy other = alpha < 4.0 ? InitStrategy::Udd : InitStrategy::Cpmg;
  try {
    return solve_direct(with_init(problem, other));
  } catch (const NonConvergence&) {
  } catch (const OrderingViolation&) {
  }
  const double start = alpha > 2.0 ? 2.0 : 1.0;
  if (alpha <= start) return solve_direct(with_init(problem, InitStrategy::Cpmg));
  std::vector<OptimizedSequence> path =
      continuation_path(problem.n, start, alpha, kFallbackSteps, problem.options);
  OptimizedSequence out = std::move(path.back());
  out.provenance.init = InitStrategy::Auto;
  return out;
}

std::vector<double> geometric_grid(double alpha_from, double alpha_to, int steps) {
  if (steps < 1) throw std::invalid_argument("continuation needs steps >= 1");
  if (!(alpha_from > 0.0) || !(alpha_to > 0.0)) {
    throw InvalidExponent("continuation exponents must be positive");
  }
  if (steps == 1) return {alpha_to};
  std::vector<double> grid(static_cast<std::size_t>(steps));
  const double ratio = std::log(alpha_to / alpha_from);
  for (int k = 0; k < steps; ++k) {
    grid[static_cast<std::size_t>(k)] =
        alpha_from * std::exp(ratio * k / static_cast<double>(steps - 1));
  }
  grid.front() = alpha_from;
  grid.back() = alpha_to;
  return grid;
}

std::vector<OptimizedSequence> continuation_path(int n, double alpha_from,
                                                 double alpha_to, int steps,
                                                 const SolverOptions& options) {
  const std::vector<double> grid = geometric_grid(alpha_from, alpha_to, steps);
  std::vector<OptimizedSequence> path;
  path.reserve(grid.size());
  std::vector<double> visited;
  for (double alpha : grid) {
    PloddProblem problem = plodd_problem(n, SpectrumExponent(alpha), options);
    if (!path.empty()) {
      const auto prev = path.back().sequence.instants();
      problem.init = InitStrategy::Warm;
      problem.warm_start.assign(prev.begin(), prev.begin() + n / 2);
    }
    try {
      OptimizedSequence solved = optimize_plodd(problem);
      solved.provenance.continuation = visited;
      path.push_back(std::move(solved));
    } catch (const SolverFailure& e) {
      throw SolverFailure(std::string(e.what()) + " (continuation at alpha=" +
                              std::to_string(alpha) + ")",
                          e.best());
    }
    visited.push_back(alpha);
  }
  return path;
}

}  // namespace plodd
