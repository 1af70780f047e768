#pragma once

#include <cmath>

namespace plodd {

/// Neumaier-compensated accumulator in extended precision. Alternating
/// weighted sums of nearly equal powers lose most of their digits in plain
/// double arithmetic.
class CompensatedSum {
 public:
  void add(long double x) {
    const long double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(long double x) {
    add(x);
    return *this;
  }
  long double value() const { return sum_ + comp_; }

 private:
  long double sum_ = 0.0L;
  long double comp_ = 0.0L;
};

/// Integer power by repeated squaring; p >= 0, 0^0 = 1.
inline long double ipow(long double x, int p) {
  long double result = 1.0L;
  while (p > 0) {
    if (p & 1) result *= x;
    x *= x;
    p >>= 1;
  }
  return result;
}

}  // namespace plodd
