#pragma once

#include "lnorth/precision.hpp"

#include <boost/math/special_functions/expm1.hpp>
#include <boost/math/special_functions/log1p.hpp>

#include <cmath>
#include <ostream>
#include <span>
#include <stdexcept>

namespace lnorth {

/// A real number stored as sign and natural log of its magnitude. Used for
/// moments and polynomial coefficients whose magnitudes leave double range
/// (lognormal moments of order 32 reach e^{1000} and beyond).
template <class T = Real>
class SignedLogReal {
 public:
  SignedLogReal() = default;

  static SignedLogReal from_log(int sign, T log_mag) {
    SignedLogReal r;
    r.sign_ = sign > 0 ? 1 : (sign < 0 ? -1 : 0);
    r.log_mag_ = r.sign_ == 0 ? T(0) : std::move(log_mag);
    return r;
  }

  static SignedLogReal from_value(const T& x) {
    using std::abs;
    using std::log;
    if (x == 0) return SignedLogReal{};
    return from_log(x > 0 ? 1 : -1, log(abs(x)));
  }

  static SignedLogReal one() { return from_log(1, T(0)); }
  static SignedLogReal zero() { return SignedLogReal{}; }

  int sign() const noexcept { return sign_; }
  bool is_zero() const noexcept { return sign_ == 0; }

  /// Natural log of |x|. Meaningless when sign() == 0.
  const T& log_mag() const noexcept { return log_mag_; }

  T value() const {
    using std::exp;
    if (sign_ == 0) return T(0);
    return sign_ > 0 ? exp(log_mag_) : -exp(log_mag_);
  }

  double to_double() const {
    if (sign_ == 0) return 0.0;
    const double m = std::exp(lnorth::to_double(log_mag_));
    return sign_ > 0 ? m : -m;
  }

  SignedLogReal operator-() const { return from_log(-sign_, log_mag_); }

  friend SignedLogReal operator*(const SignedLogReal& a, const SignedLogReal& b) {
    if (a.sign_ == 0 || b.sign_ == 0) return SignedLogReal{};
    return from_log(a.sign_ * b.sign_, a.log_mag_ + b.log_mag_);
  }

  friend SignedLogReal operator/(const SignedLogReal& a, const SignedLogReal& b) {
    if (b.sign_ == 0) throw std::domain_error("SignedLogReal: division by zero");
    if (a.sign_ == 0) return SignedLogReal{};
    return from_log(a.sign_ * b.sign_, a.log_mag_ - b.log_mag_);
  }

  friend SignedLogReal operator+(const SignedLogReal& a, const SignedLogReal& b) {
    using std::exp;
    using boost::math::log1p;
    if (a.sign_ == 0) return b;
    if (b.sign_ == 0) return a;
    const bool a_big = a.log_mag_ >= b.log_mag_;
    const SignedLogReal& big = a_big ? a : b;
    const SignedLogReal& small = a_big ? b : a;
    const T ratio = exp(small.log_mag_ - big.log_mag_);
    if (big.sign_ == small.sign_) {
      return from_log(big.sign_, big.log_mag_ + log1p(ratio));
    }
    if (ratio == 1) return SignedLogReal{};
    return from_log(big.sign_, big.log_mag_ + log1p(-ratio));
  }

  friend SignedLogReal operator-(const SignedLogReal& a, const SignedLogReal& b) { return a + (-b); }

  SignedLogReal& operator+=(const SignedLogReal& o) { return *this = *this + o; }
  SignedLogReal& operator*=(const SignedLogReal& o) { return *this = *this * o; }

  /// x^p for integer p >= 0.
  SignedLogReal pow(int p) const {
    if (p == 0) return one();
    if (sign_ == 0) return SignedLogReal{};
    return from_log((p % 2 == 0) ? 1 : sign_, log_mag_ * p);
  }

  friend std::ostream& operator<<(std::ostream& os, const SignedLogReal& x) {
    return os << (x.sign_ < 0 ? "-" : (x.sign_ > 0 ? "+" : "0")) << "exp(" << x.log_mag_ << ")";
  }

 private:
  int sign_ = 0;
  T log_mag_ = T(0);
};

/// Sum of signed-log terms: each term is rescaled by the largest magnitude and
/// accumulated with compensation, so mixed-sign sums far outside double range work.
template <class T>
SignedLogReal<T> sum(std::span<const SignedLogReal<T>> terms) {
  using std::exp;
  const SignedLogReal<T>* top = nullptr;
  for (const auto& t : terms) {
    if (!t.is_zero() && (top == nullptr || t.log_mag() > top->log_mag())) top = &t;
  }
  if (top == nullptr) return SignedLogReal<T>::zero();
  const T ref = top->log_mag();
  CompensatedSum<T> acc;
  for (const auto& t : terms) {
    if (!t.is_zero()) acc.add(t.sign() * exp(t.log_mag() - ref));
  }
  return SignedLogReal<T>::from_value(acc.value()) * SignedLogReal<T>::from_log(1, ref);
}

/// |a - b| / max(|a|, |b|), computed without leaving the log domain for the scale.
template <class T>
T relative_difference(const SignedLogReal<T>& a, const SignedLogReal<T>& b) {
  if (a.is_zero() && b.is_zero()) return T(0);
  if (a.is_zero() || b.is_zero()) return T(1);
  if (a.sign() != b.sign()) return T(2);
  const T lo = a.log_mag() < b.log_mag() ? a.log_mag() : b.log_mag();
  const T hi = a.log_mag() < b.log_mag() ? b.log_mag() : a.log_mag();
  return -boost::math::expm1(T(lo - hi));
}

}  // namespace lnorth
