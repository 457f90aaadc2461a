#pragma once

// Special functions on the extended-precision working type: log-gamma,
// digamma/trigamma, the Kummer function 1F1(-k/2, b, z) with its parameter
// derivative at a = 0, and Gaussian (q-) binomial coefficients.

#include "lnorth/errors.hpp"
#include "lnorth/precision.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/expm1.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include <cmath>
#include <stdexcept>
#include <string>

namespace lnorth {

template <class T>
T ln_gamma(const T& x) {
  if (!(x > 0)) throw std::domain_error("ln_gamma: argument must be positive");
  return boost::math::lgamma(x);
}

/// Psi_0 (digamma) or Psi_1 (trigamma).
template <class T>
T polygamma(int order, const T& x) {
  if (!(x > 0)) throw std::domain_error("polygamma: argument must be positive");
  switch (order) {
    case 0:
      return boost::math::digamma(x);
    case 1:
      return boost::math::trigamma(x);
    default:
      throw std::domain_error("polygamma: only orders 0 and 1 are supported, got " +
                              std::to_string(order));
  }
}

namespace detail {

inline long series_iteration_cap(double abs_z) { return 100000 + 8 * static_cast<long>(abs_z); }

// Sum of a series with positive terms t_0 = first, t_{n+1} = t_n * ratio(n).
// `ratio_bound(n)` must bound ratio(j) for every j >= n; summation stops once
// the geometric tail bound drops below `tol` relative to the partial sum.
template <class T, class Ratio, class RatioBound>
T sum_positive_series(T first, long start, Ratio ratio, RatioBound ratio_bound, const T& tol,
                      double abs_z, const char* who) {
  CompensatedSum<T> acc;
  T term = first;
  acc.add(term);
  const long cap = series_iteration_cap(abs_z);
  for (long n = start; n < start + cap; ++n) {
    term *= ratio(n);
    acc.add(term);
    const T r = ratio_bound(n + 1);
    if (r < 1) {
      const T tail = term * r / (1 - r);
      if (tail <= tol * acc.value()) return acc.value();
    }
  }
  throw NumericalError(std::string(who) + ": series did not converge within iteration cap",
                       to_double(acc.value()), to_double(term));
}

}  // namespace detail

/// 1F1(-k/2, b, z) for non-negative integer k.
///
/// Even k: the series terminates after k/2 + 1 terms and is summed exactly.
/// Odd k, z >= 0: direct series; past n > k/2 the terms keep one sign.
/// Odd k, z < 0: the direct series alternates, so Kummer's transformation
/// 1F1(a, b, z) = e^z 1F1(b - a, b, -z) is used, whose terms are all positive.
template <class T>
T kummer_1f1_neg_half(int k, const T& b, const T& z) {
  using std::abs;
  using std::exp;
  if (k < 0) throw std::domain_error("kummer_1f1_neg_half: k must be non-negative");
  if (!(b > 0)) throw std::domain_error("kummer_1f1_neg_half: b must be positive");
  const T a = T(-k) / 2;
  const T tol = precision_tolerance<T>();

  if (k % 2 == 0) {
    CompensatedSum<T> acc;
    T term = 1;
    acc.add(term);
    for (int n = 0; n < k / 2; ++n) {
      term *= (a + n) * z / ((b + n) * (n + 1));
      acc.add(term);
    }
    return acc.value();
  }
  if (z == 0) return T(1);

  const double abs_z = to_double(abs(z));
  if (z > 0) {
    // The terms alternate in sign while a + n < 0; sum those explicitly, then
    // switch to the tail-bounded loop once every further ratio is positive.
    CompensatedSum<T> head;
    T term = 1;
    head.add(term);
    const int flip = (k + 1) / 2;  // first n with a + n > 0
    for (int n = 0; n < flip; ++n) {
      term *= (a + n) * z / ((b + n) * (n + 1));
      head.add(term);
    }
    if (term == 0) return head.value();
    const int sign = term > 0 ? 1 : -1;
    const T tail = detail::sum_positive_series<T>(
        abs(term), flip, [&](long n) { return (a + n) * z / ((b + n) * (n + 1)); },
        [&](long n) { return z / T(n + 1); }, tol, abs_z, "kummer_1f1_neg_half");
    // `tail` includes the flip term itself, which `head` already holds.
    return head.value() + sign * (tail - abs(term));
  }

  const T w = -z;
  const T c = b - a;
  const T sum = detail::sum_positive_series<T>(
      T(1), 0, [&](long n) { return (c + n) * w / ((b + n) * (n + 1)); },
      [&](long n) { return (c + n) / (b + n) * w / T(n + 1); }, tol, abs_z,
      "kummer_1f1_neg_half");
  return exp(z) * sum;
}

/// d/da 1F1(a, b, z) at a = 0.
///
/// z > 0: term-wise derivative sum_{n>=1} z^n / (n (b)_n).
/// z < 0: derivative of the Kummer-transformed form,
///   -e^z sum_{n>=1} (-z)^n / n! * (psi(b + n) - psi(b)),
/// which has positive terms. Both are the same entire function of z.
template <class T>
T kummer_1f1_da_at_zero(const T& b, const T& z) {
  using std::abs;
  using std::exp;
  if (!(b > 0)) throw std::domain_error("kummer_1f1_da_at_zero: b must be positive");
  if (z == 0) return T(0);
  const T tol = precision_tolerance<T>();
  const double abs_z = to_double(abs(z));
  const long cap = detail::series_iteration_cap(abs_z);

  if (z > 0) {
    // t_n = z^n / (n (b)_n); t_{n+1}/t_n = z n / ((n+1)(b+n)) <= z/(b+n).
    return detail::sum_positive_series<T>(
        z / b, 1, [&](long n) { return z * n / ((b + n) * (n + 1)); },
        [&](long n) { return z / (b + n); }, tol, abs_z, "kummer_1f1_da_at_zero");
  }

  const T w = -z;
  CompensatedSum<T> acc;
  T power = 1;      // w^n / n!
  T harmonic = 0;   // psi(b + n) - psi(b) = sum_{j<n} 1/(b+j)
  for (long n = 1; n <= cap; ++n) {
    harmonic += 1 / (b + (n - 1));
    power *= w / n;
    const T term = power * harmonic;
    acc.add(term);
    // t_{j+1}/t_j = w/(j+1) * H_{j+1}/H_j <= w/j, since H_j >= j/(b+j-1).
    const T r = w / T(n);
    if (r < 1 && term * r / (1 - r) <= tol * acc.value()) return -exp(z) * acc.value();
  }
  throw NumericalError("kummer_1f1_da_at_zero: series did not converge within iteration cap",
                       to_double(-exp(z) * acc.value()));
}

/// log of the Gaussian binomial [n k]_q with q = e^{log_q}, log_q > 0.
template <class T>
T log_q_binomial(int n, int k, const T& log_q) {
  using std::log;
  if (k < 0 || k > n) {
    throw std::domain_error("q_binomial: need 0 <= k <= n, got n=" + std::to_string(n) +
                            " k=" + std::to_string(k));
  }
  if (!(log_q > 0)) throw std::domain_error("q_binomial: q must exceed 1");
  CompensatedSum<T> acc;
  for (int j = 1; j <= k; ++j) {
    acc.add(log(boost::math::expm1(T(log_q * (n - k + j)))));
    acc.add(-log(boost::math::expm1(T(log_q * j))));
  }
  return acc.value();
}

/// Gaussian binomial [n k]_q = prod_{j=1..k} (1 - q^{n-k+j}) / (1 - q^j).
template <class T>
T q_binomial(int n, int k, const T& q) {
  using std::exp;
  using std::log;
  if (!(q > 1)) throw std::domain_error("q_binomial: q must exceed 1");
  return exp(log_q_binomial<T>(n, k, log(q)));
}

}  // namespace lnorth
