#pragma once

// Lognormal reference density, its moments, and the monic orthogonal
// polynomials {pi_n} with respect to it: closed-form coefficients built from
// Gaussian binomials, the Hankel-determinant representation used as an
// independent oracle, and the normalization factors h_j.

#include "lnorth/errors.hpp"
#include "lnorth/precision.hpp"
#include "lnorth/signed_log.hpp"
#include "lnorth/special.hpp"

#include <boost/math/special_functions/expm1.hpp>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace lnorth {

/// (mu, sigma^2) of the underlying Gaussian. q = e^{sigma^2} is always derived.
template <class T = Real>
class LognormalParams {
 public:
  LognormalParams(T mu, T sigma2) : mu_(std::move(mu)), sigma2_(std::move(sigma2)) {
    if (!(sigma2_ > 0)) {
      throw std::domain_error(
          "LognormalParams: sigma^2 must be positive (sigma^2 = 0 is a degenerate point mass)");
    }
  }

  const T& mu() const noexcept { return mu_; }
  const T& sigma2() const noexcept { return sigma2_; }
  T sigma() const {
    using std::sqrt;
    return sqrt(sigma2_);
  }
  T q() const {
    using std::exp;
    return exp(sigma2_);
  }

  template <class U>
  LognormalParams<U> cast() const {
    return LognormalParams<U>(U(mu_), U(sigma2_));
  }

 private:
  T mu_;
  T sigma2_;
};

template <class T>
T lognormal_pdf(const T& x, const LognormalParams<T>& p) {
  using std::exp;
  using std::log;
  using std::sqrt;
  if (!(x > 0)) throw std::domain_error("lognormal_pdf: x must be positive");
  const T d = log(x) - p.mu();
  return exp(-d * d / (2 * p.sigma2())) / (x * sqrt(2 * pi_v<T>() * p.sigma2()));
}

/// nu_i = e^{i mu + i^2 sigma^2 / 2}, kept in log form.
template <class T>
SignedLogReal<T> lognormal_moment(int i, const LognormalParams<T>& p) {
  if (i < 0) throw std::domain_error("lognormal_moment: order must be non-negative");
  return SignedLogReal<T>::from_log(1, p.mu() * i + p.sigma2() * (T(i) * i) / 2);
}

namespace detail {

inline void check_nk(int n, int k, const char* who) {
  if (n < 0 || k < 0 || k > n) {
    throw std::domain_error(std::string(who) + ": need 0 <= k <= n, got n=" + std::to_string(n) +
                            " k=" + std::to_string(k));
  }
}

// log(q^j - q^i) for j > i, with q = e^{s}.
template <class T>
T log_qdiff(int j, int i, const T& s) {
  using std::log;
  return s * i + log(boost::math::expm1(T(s * (j - i))));
}

// log E(n) = n(n-1) mu + sigma^2 n (2n^2 - 3n + 1) / 6.
template <class T>
T log_e_factor(int n, const LognormalParams<T>& p) {
  const T nn = n;
  return p.mu() * (nn * (n - 1)) + p.sigma2() * (nn * (2 * nn * nn - 3 * nn + 1)) / 6;
}

}  // namespace detail

/// c_{n,k} = (-1)^{n+k} e^{(n-k) mu} q^{(n - 1/2)(n - k)} [n k]_q.
template <class T>
SignedLogReal<T> ortho_coeff_closed(int n, int k, const LognormalParams<T>& p) {
  detail::check_nk(n, k, "ortho_coeff_closed");
  const int nk = n - k;
  const T log_mag = p.mu() * nk + p.sigma2() * (T(2 * n - 1) * nk) / 2 +
                    log_q_binomial<T>(n, k, p.sigma2());
  return SignedLogReal<T>::from_log(((n + k) % 2 == 0) ? 1 : -1, log_mag);
}

/// Product form of the cofactor Delta_{n,k}:
/// E(n) nu_n prod_{0<=i<j<=n}(q^j - q^i) / (nu_k prod_{j>k}(q^j - q^k) prod_{i<k}(q^k - q^i)).
template <class T>
SignedLogReal<T> cofactor_closed(int n, int k, const LognormalParams<T>& p) {
  detail::check_nk(n, k, "cofactor_closed");
  const T& s = p.sigma2();
  CompensatedSum<T> acc;
  acc.add(detail::log_e_factor(n, p));
  acc.add(lognormal_moment(n, p).log_mag());
  acc.add(-lognormal_moment(k, p).log_mag());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j <= n; ++j) {
      if (i == k || j == k) continue;  // the k-th node's factors cancel against the denominator
      acc.add(detail::log_qdiff(j, i, s));
    }
  }
  return SignedLogReal<T>::from_log(1, acc.value());
}

/// Hankel determinant Delta_n = |nu_{i+j}|_{i,j<n} = E(n) prod_{0<=i<j<=n-1}(q^j - q^i).
template <class T>
SignedLogReal<T> hankel_closed(int n, const LognormalParams<T>& p) {
  if (n < 0) throw std::domain_error("hankel_closed: n must be non-negative");
  CompensatedSum<T> acc;
  acc.add(detail::log_e_factor(n, p));
  for (int i = 0; i + 1 < n; ++i) {
    for (int j = i + 1; j < n; ++j) acc.add(detail::log_qdiff(j, i, p.sigma2()));
  }
  return SignedLogReal<T>::from_log(1, acc.value());
}

/// Determinant by Gaussian elimination with partial pivoting.
template <class T>
SignedLogReal<T> determinant(std::vector<std::vector<T>> a) {
  using std::abs;
  using std::log;
  const std::size_t n = a.size();
  if (n == 0) return SignedLogReal<T>::one();
  int sign = 1;
  CompensatedSum<T> log_mag;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (abs(a[r][col]) > abs(a[piv][col])) piv = r;
    }
    if (a[piv][col] == 0) return SignedLogReal<T>::zero();
    if (piv != col) {
      std::swap(a[piv], a[col]);
      sign = -sign;
    }
    const T& pivot = a[col][col];
    if (pivot < 0) sign = -sign;
    log_mag.add(log(abs(pivot)));
    for (std::size_t r = col + 1; r < n; ++r) {
      const T f = a[r][col] / pivot;
      if (f == 0) continue;
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
    }
  }
  return SignedLogReal<T>::from_log(sign, log_mag.value());
}

inline constexpr int kOracleMaxDegree = 12;

/// Literal cofactor Delta_{n,k}: rows i = 0..n-1, columns j = 0..n with j != k,
/// entries nu_{i+j}. Delta_{0,0} is the empty determinant, 1.
template <class T>
SignedLogReal<T> cofactor_oracle(int n, int k, const LognormalParams<T>& p) {
  detail::check_nk(n, k, "cofactor_oracle");
  if (n > kOracleMaxDegree) {
    throw UnsupportedError("determinant oracle is capped at degree " +
                           std::to_string(kOracleMaxDegree));
  }
  std::vector<std::vector<T>> m(n, std::vector<T>());
  for (int i = 0; i < n; ++i) {
    m[i].reserve(n);
    for (int j = 0; j <= n; ++j) {
      if (j != k) m[i].push_back(lognormal_moment(i + j, p).value());
    }
  }
  return determinant(std::move(m));
}

/// Literal Hankel determinant Delta_n.
template <class T>
SignedLogReal<T> hankel_oracle(int n, const LognormalParams<T>& p) {
  if (n == 0) return SignedLogReal<T>::one();
  return cofactor_oracle(n, n, p);
}

/// c_{n,k} = (-1)^{n+k} Delta_{n,k} / Delta_n by literal determinant evaluation.
template <class T>
SignedLogReal<T> ortho_coeff_oracle(int n, int k, const LognormalParams<T>& p) {
  detail::check_nk(n, k, "ortho_coeff_oracle");
  if (n > kOracleMaxDegree) {
    throw UnsupportedError("ortho_coeff_oracle: degree " + std::to_string(n) +
                           " exceeds oracle cap " + std::to_string(kOracleMaxDegree));
  }
  if (n == 0) return SignedLogReal<T>::one();
  const auto ratio = cofactor_oracle(n, k, p) / hankel_oracle(n, p);
  return ((n + k) % 2 == 0) ? ratio : -ratio;
}

/// Relative deviation between the literal determinant |q^{ij}|_{i,j=0..n-1}
/// and the Vandermonde product prod_{i<j}(q^j - q^i).
template <class T>
T vandermonde_deviation(int n, const T& sigma2) {
  using std::exp;
  if (n < 1 || n > 10) throw std::domain_error("vandermonde_identity_check: need 1 <= n <= 10");
  if (!(sigma2 > 0)) throw std::domain_error("vandermonde_identity_check: sigma^2 must be positive");
  std::vector<std::vector<T>> m(n, std::vector<T>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m[i][j] = exp(sigma2 * (T(i) * j));
  }
  const auto det = determinant(std::move(m));
  CompensatedSum<T> log_prod;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) log_prod.add(detail::log_qdiff(j, i, sigma2));
  }
  return relative_difference(det, SignedLogReal<T>::from_log(1, log_prod.value()));
}

template <class T>
bool vandermonde_identity_check(int n, const T& sigma2) {
  using std::ldexp;
  return vandermonde_deviation(n, sigma2) <= ldexp(T(1), -(mantissa_bits<T>() / 2));
}

/// Monic orthogonal polynomial pi_n with coefficients c_{n,0..n}.
template <class T = Real>
struct OrthoPolynomial {
  int degree = 0;
  std::vector<SignedLogReal<T>> coeffs;

  /// Smallest |c_{n,k}| as a log magnitude; a cheap indicator of how far the
  /// coefficient pipeline's dynamic range stretches for this degree.
  T min_log_mag() const {
    T lo = coeffs.front().log_mag();
    for (const auto& c : coeffs) lo = c.log_mag() < lo ? c.log_mag() : lo;
    return lo;
  }
};

template <class T>
OrthoPolynomial<T> make_polynomial(int n, const LognormalParams<T>& p) {
  if (n < 0) throw std::domain_error("make_polynomial: degree must be non-negative");
  OrthoPolynomial<T> poly;
  poly.degree = n;
  poly.coeffs.reserve(n + 1);
  for (int k = 0; k <= n; ++k) poly.coeffs.push_back(ortho_coeff_closed(n, k, p));
  return poly;
}

/// sum_k c_{n,k} x^k, accumulated per sign in log form.
template <class T>
SignedLogReal<T> poly_eval(const OrthoPolynomial<T>& poly, const T& x) {
  using std::log;
  if (!(x > 0)) throw std::domain_error("poly_eval: x must be positive");
  const T log_x = log(x);
  SignedLogReal<T> pos = SignedLogReal<T>::zero();
  SignedLogReal<T> neg = SignedLogReal<T>::zero();
  for (int k = 0; k <= poly.degree; ++k) {
    const auto& c = poly.coeffs[k];
    if (c.is_zero()) continue;
    const auto term = SignedLogReal<T>::from_log(1, c.log_mag() + log_x * k);
    (c.sign() > 0 ? pos : neg) += term;
  }
  return pos - neg;
}

template <class T = Real>
struct NormalizationFactor {
  int j = 0;
  SignedLogReal<T> h;
};

/// h_j = sum_{i,k} c_{j,i} c_{j,k} nu_{i+k}.
template <class T>
NormalizationFactor<T> normalization_h(int j, const LognormalParams<T>& p) {
  using std::exp;
  if (j < 0) throw std::domain_error("normalization_h: j must be non-negative");
  const auto poly = make_polynomial(j, p);
  // Accumulate relative to the largest term so the sum stays in T range.
  T ref = 0;
  bool first = true;
  std::vector<std::pair<int, T>> terms;
  terms.reserve((j + 1) * (j + 1));
  for (int i = 0; i <= j; ++i) {
    for (int k = 0; k <= j; ++k) {
      const T lm = poly.coeffs[i].log_mag() + poly.coeffs[k].log_mag() +
                   lognormal_moment(i + k, p).log_mag();
      terms.emplace_back(poly.coeffs[i].sign() * poly.coeffs[k].sign(), lm);
      if (first || lm > ref) ref = lm;
      first = false;
    }
  }
  CompensatedSum<T> acc;
  for (const auto& [s, lm] : terms) acc.add(s * exp(lm - ref));
  const T scaled = acc.value();
  if (!(scaled > 0)) {
    throw NumericalError("normalization_h: non-positive h_" + std::to_string(j) +
                         "; increase working_bits");
  }
  using std::log;
  return {j, SignedLogReal<T>::from_log(1, ref + log(scaled))};
}

}  // namespace lnorth
