#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "plodd/sequence.hpp"

namespace plodd {

enum class ExponentBranch { EvenInteger, OddInteger, NonInteger };

std::string_view branch_name(ExponentBranch b);

/// alpha is treated as an integer when it lies this close to one.
inline constexpr double kIntegerTolerance = 1e-9;

/// Power-law exponent of S(w)/w^2 = S_0 / w^(alpha+1).
class SpectrumExponent {
 public:
  /// Throws InvalidExponent unless alpha > 0 and finite.
  explicit SpectrumExponent(double alpha);

  double alpha() const { return alpha_; }
  ExponentBranch branch() const { return branch_; }
  bool is_integer() const { return branch_ != ExponentBranch::NonInteger; }
  /// Nearest integer; meaningful when is_integer().
  int integer_value() const { return integer_; }

  /// Number of moment constraints a sequence needs: floor(alpha / 2).
  int constraint_count() const;

  /// Feasibility of a sequence with vanishing order m: alpha < 2m + 2.
  bool converges_with(int m) const { return alpha_ < 2.0 * m + 2.0; }

 private:
  double alpha_;
  ExponentBranch branch_;
  int integer_;
};

struct PrefactorResult {
  double value = 0.0;
  ExponentBranch branch = ExponentBranch::NonInteger;
  int m = 0;  // vanishing order used in the feasibility test
};

/// Analytic I_n = integral_0^inf |y_n(z)|^2 / z^(alpha+1) dz.
///
/// Throws DivergentIntegral when alpha >= 2m+2 for the sequence's vanishing
/// order m (recomputed here with the default moment tolerance).
PrefactorResult spectral_prefactor(const PulseSequence& seq,
                                   const SpectrumExponent& ex);

/// dI_n/dd_k for the n pulse instants. Same feasibility rules.
std::vector<double> prefactor_gradient(const PulseSequence& seq,
                                       const SpectrumExponent& ex);

/// chi(t) = S_0 t^alpha I_n; s0 absorbs all bath constants.
double decoherence_function(const PulseSequence& seq,
                            const SpectrumExponent& ex, double s0, double t);

/// exp(-2 chi(t)).
double coherence(const PulseSequence& seq, const SpectrumExponent& ex,
                 double s0, double t);

/// Branch coefficient multiplying the pair sum:
///   even:        (-1)^(1+alpha/2) / alpha!
///   odd:         (-1)^((alpha+1)/2) (pi/2) / alpha!
///   non-integer: cos(pi alpha/2) Gamma(-alpha)
double branch_coefficient(const SpectrumExponent& ex);

/// The closed-form prefactor evaluated on raw interior instants without the
/// feasibility test. Outside the feasible set the number is finite but is
/// not the value of the (divergent) integral; the optimizer needs it there.
double prefactor_formula(std::span<const double> instants,
                         const SpectrumExponent& ex);

/// Gradient of prefactor_formula with respect to the interior instants.
void prefactor_formula_gradient(std::span<const double> instants,
                                const SpectrumExponent& ex,
                                std::span<double> gradient);

/// Hessian of prefactor_formula, row-major n x n.
std::vector<double> prefactor_formula_hessian(std::span<const double> instants,
                                              const SpectrumExponent& ex);

}  // namespace plodd
