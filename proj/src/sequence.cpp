#include "plodd/sequence.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <cmath>
#include <functional>
#include <numbers>

#include "plodd/errors.hpp"

namespace plodd {

std::string_view family_name(Family f) {
  switch (f) {
    case Family::Udd: return "udd";
    case Family::Cpmg: return "cpmg";
    case Family::Cdd: return "cdd";
    case Family::Plodd: return "plodd";
    case Family::Custom: return "custom";
  }
  return "custom";
}

Family parse_family(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  for (Family f : {Family::Udd, Family::Cpmg, Family::Cdd, Family::Plodd,
                   Family::Custom}) {
    if (lower == family_name(f)) return f;
  }
  throw ValidationError("unknown sequence family '" + std::string(name) + "'");
}

PulseSequence::PulseSequence(std::vector<double> instants,
                             SequenceFamily family)
    : instants_(std::move(instants)), family_(family) {
  for (std::size_t j = 0; j < instants_.size(); ++j) {
    const double d = instants_[j];
    if (!std::isfinite(d) || d <= 0.0 || d >= 1.0) {
      throw ValidationError("instant " + std::to_string(j + 1) +
                                " lies outside the open interval (0, 1)",
                            static_cast<int>(j + 1));
    }
    if (j > 0 && d <= instants_[j - 1]) {
      throw ValidationError(
          std::string(d == instants_[j - 1] ? "duplicate instant"
                                            : "instants not increasing") +
              " at index " + std::to_string(j + 1),
          static_cast<int>(j + 1));
    }
  }
  family_.n = size();
}

double PulseSequence::instant(int j) const {
  assert(j >= 0 && j <= size() + 1);
  if (j == 0) return 0.0;
  if (j == size() + 1) return 1.0;
  return instants_[static_cast<std::size_t>(j - 1)];
}

int PulseSequence::weight(int j) const { return pulse_weight(j, size()); }

double PulseSequence::time(int j, double total_duration) const {
  return total_duration * instant(j);
}

PulseSequence make_udd(int n) {
  if (n < 1) throw ValidationError("UDD needs n >= 1");
  std::vector<double> d(static_cast<std::size_t>(n));
  // Extended precision rounds sin^2(pi/6) and friends to the exact double;
  // the second half mirrors the first so the symmetry is exact.
  const long double step = std::numbers::pi_v<long double> / (2.0L * (n + 1));
  for (int j = 1; 2 * j <= n + 1; ++j) {
    const long double s = std::sin(j * step);
    const double value = static_cast<double>(s * s);
    d[static_cast<std::size_t>(j - 1)] = value;
    if (2 * j != n + 1) d[static_cast<std::size_t>(n - j)] = 1.0 - value;
  }
  return PulseSequence(std::move(d), {Family::Udd, n, 0, 0.0});
}

PulseSequence make_cpmg(int n) {
  if (n < 1) throw ValidationError("CPMG needs n >= 1");
  std::vector<double> d(static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j) {
    d[static_cast<std::size_t>(j - 1)] = (2.0 * j - 1.0) / (2.0 * n);
  }
  return PulseSequence(std::move(d), {Family::Cpmg, n, 0, 0.0});
}

int cdd_pulse_count(int level) {
  if (level < 0) throw ValidationError("CDD level must be >= 0");
  int count = 0;
  for (int k = 0; k < level; ++k) count = 2 * count + (k % 2 == 0 ? 1 : 0);
  return count;
}

PulseSequence make_cdd(int level) {
  if (level < 0) throw ValidationError("CDD level must be >= 0");
  // p_{k+1} = p_k X p_k for even k, p_k p_k for odd k.
  std::vector<double> d;
  for (int k = 0; k < level; ++k) {
    std::vector<double> next;
    next.reserve(2 * d.size() + 1);
    for (double x : d) next.push_back(0.5 * x);
    if (k % 2 == 0) next.push_back(0.5);
    for (double x : d) next.push_back(0.5 + 0.5 * x);
    d = std::move(next);
  }
  // Interior pulses of each half sit strictly inside it.
  assert(std::adjacent_find(d.begin(), d.end(), std::greater_equal<>()) ==
         d.end());
  const int n = static_cast<int>(d.size());
  return PulseSequence(std::move(d), {Family::Cdd, n, level, 0.0});
}

PulseSequence make_custom(std::vector<double> instants) {
  return PulseSequence(std::move(instants), {Family::Custom, 0, 0, 0.0});
}

bool is_symmetric(const PulseSequence& seq, double tol) {
  const int n = seq.size();
  for (int j = 1; j <= n; ++j) {
    if (std::abs(seq.instant(n + 1 - j) - (1.0 - seq.instant(j))) > tol) {
      return false;
    }
  }
  return true;
}

PulseSequence make_family(Family family, int parameter) {
  switch (family) {
    case Family::Udd: return make_udd(parameter);
    case Family::Cpmg: return make_cpmg(parameter);
    case Family::Cdd: return make_cdd(parameter);
    default:
      throw ValidationError("family '" + std::string(family_name(family)) +
                            "' has no closed-form generator");
  }
}

}  // namespace plodd
