#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace plodd {

enum class Family { Udd, Cpmg, Cdd, Plodd, Custom };

std::string_view family_name(Family f);
/// Case-insensitive; throws ValidationError on unknown tags.
Family parse_family(std::string_view name);

/// Family tag plus the parameter that produced a sequence.
struct SequenceFamily {
  Family family = Family::Custom;
  int n = 0;           // pulse count (UDD, CPMG, PLODD); implied count for CDD
  int level = 0;       // CDD concatenation level
  double alpha = 0.0;  // PLODD design exponent

  bool operator==(const SequenceFamily&) const = default;
};

/// Ideal pi-pulse sequence on the unit interval.
///
/// Stores the n interior instants 0 < d_1 < ... < d_n < 1 as fractions of
/// the total duration. The boundary instants d_0 = 0 and d_{n+1} = 1 are
/// implicit and reachable through instant(j) for j in [0, n+1]. Weights are
/// w_0 = 1, w_j = 2(-1)^j for 1 <= j <= n, w_{n+1} = (-1)^{n+1}; they sum
/// to zero for every n.
class PulseSequence {
 public:
  /// Free evolution (n = 0).
  PulseSequence() = default;

  /// Validates ordering and open-interval membership.
  explicit PulseSequence(std::vector<double> instants,
                         SequenceFamily family = {});

  int size() const { return static_cast<int>(instants_.size()); }
  bool empty() const { return instants_.empty(); }

  std::span<const double> instants() const { return instants_; }

  /// j in [0, n+1]; includes the implicit endpoints.
  double instant(int j) const;
  int weight(int j) const;

  /// Absolute pulse time t * d_j for 1 <= j <= n.
  double time(int j, double total_duration) const;

  const SequenceFamily& family() const { return family_; }

 private:
  std::vector<double> instants_;
  SequenceFamily family_;
};

/// Weight of boundary/pulse index j in a sequence of n pulses.
inline int pulse_weight(int j, int n) {
  if (j == 0) return 1;
  if (j == n + 1) return (n % 2 == 0) ? -1 : 1;
  return (j % 2 == 0) ? 2 : -2;
}

PulseSequence make_udd(int n);
PulseSequence make_cpmg(int n);
PulseSequence make_cdd(int level);
PulseSequence make_custom(std::vector<double> instants);

/// Pulse count of pure-dephasing CDD at the given level: 0, 1, 2, 5, 10, 21...
int cdd_pulse_count(int level);

bool is_symmetric(const PulseSequence& seq, double tol);

/// Canonical generator dispatch for UDD/CPMG (parameter n) and CDD
/// (parameter level). PLODD and CUSTOM are rejected here.
PulseSequence make_family(Family family, int parameter);

}  // namespace plodd
