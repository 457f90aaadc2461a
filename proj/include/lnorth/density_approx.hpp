#pragma once

// Moment-matched density approximant around a lognormal reference:
//   f(x) ~ f_LN(x) sum_i eta_i pi_i(x) = f_LN(x) sum_i xi_i x^i,
//   F(x) ~ sum_i xi_i nu_i Phi((log x - mu)/sigma - i sigma).
// Coefficients are fitted in extended precision; evaluation only needs the
// O(1) products xi_i nu_i, which are rounded to double.

#include "lnorth/errors.hpp"
#include "lnorth/lognormal.hpp"
#include "lnorth/precision.hpp"
#include "lnorth/signed_log.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace lnorth {

/// Target moments M(0..N).
template <class T = Real>
struct MomentSequence {
  std::vector<SignedLogReal<T>> values;

  int degree() const { return static_cast<int>(values.size()) - 1; }

  void validate() const {
    if (values.empty()) throw std::invalid_argument("MomentSequence: empty");
    using std::abs;
    if (values[0].sign() != 1 || abs(values[0].log_mag()) > T(1e-12)) {
      throw std::invalid_argument("MomentSequence: M(0) must equal 1");
    }
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (values[k].sign() != 1) {
        throw std::invalid_argument("MomentSequence: M(" + std::to_string(k) + ") must be positive");
      }
    }
  }

  MomentSequence truncated(int n) const {
    if (n > degree()) throw std::invalid_argument("MomentSequence: truncation beyond degree");
    return {std::vector<SignedLogReal<T>>(values.begin(), values.begin() + n + 1)};
  }
};

template <class T>
MomentSequence<T> lognormal_moments(int n, const LognormalParams<T>& p) {
  MomentSequence<T> m;
  for (int k = 0; k <= n; ++k) m.values.push_back(lognormal_moment(k, p));
  return m;
}

/// Standard normal CDF.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
/// Standard normal upper tail, accurate far into the tail.
inline double normal_ccdf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

/// The double-precision evaluation form of an approximant: (mu, sigma, {xi_i nu_i}).
/// This is everything needed to evaluate the PDF/CDF/CCDF.
struct ApproximantCurve {
  double mu = 0.0;
  double sigma = 1.0;
  std::vector<double> xinu;

  int degree() const { return static_cast<int>(xinu.size()) - 1; }

  double pdf(double x) const {
    if (!(x > 0)) throw std::domain_error("approx_pdf: x must be positive");
    const double lx = std::log(x);
    const double norm = 1.0 / (x * sigma * std::sqrt(2.0 * std::numbers::pi));
    double acc = 0.0;
    for (std::size_t i = 0; i < xinu.size(); ++i) {
      // f_LN(x) x^i / nu_i is a lognormal density with log-mean mu + i sigma^2.
      const double d = (lx - mu - static_cast<double>(i) * sigma * sigma) / sigma;
      acc += xinu[i] * std::exp(-0.5 * d * d);
    }
    return acc * norm;
  }

  double cdf(double x) const {
    if (!(x > 0)) throw std::domain_error("approx_cdf: x must be positive");
    const double u = (std::log(x) - mu) / sigma;
    double acc = 0.0;
    for (std::size_t i = 0; i < xinu.size(); ++i) {
      acc += xinu[i] * normal_cdf(u - static_cast<double>(i) * sigma);
    }
    return acc;
  }

  /// 1 - F(x), summed from the upper tails so small CCDF values keep relative accuracy.
  double ccdf(double x) const {
    if (!(x > 0)) throw std::domain_error("approx_ccdf: x must be positive");
    const double u = (std::log(x) - mu) / sigma;
    double acc = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < xinu.size(); ++i) {
      acc += xinu[i] * normal_ccdf(u - static_cast<double>(i) * sigma);
      total += xinu[i];
    }
    return acc + (1.0 - total);
  }

  /// Log-x window that holds essentially all of the curve's mass and structure.
  std::pair<double, double> log_x_window(double span = 10.0) const {
    const double lo = mu - span * sigma;
    const double hi = mu + std::max(0, degree()) * sigma * sigma + span * sigma;
    return {lo, hi};
  }
};

/// Negative-density diagnostics over a log-spaced scan of the curve.
struct NegativityReport {
  double min_pdf = 0.0;         // most negative PDF value seen (0 if none)
  double min_pdf_at = 0.0;      // x where it occurs
  double negative_mass = 0.0;   // integral of max(-f, 0)
};

inline NegativityReport scan_negativity(const ApproximantCurve& c, int points = 4000) {
  const auto [lo, hi] = c.log_x_window();
  const double h = (hi - lo) / points;
  NegativityReport r;
  for (int i = 0; i <= points; ++i) {
    const double lx = lo + h * i;
    const double x = std::exp(lx);
    const double f = c.pdf(x);
    if (f < r.min_pdf) {
      r.min_pdf = f;
      r.min_pdf_at = x;
    }
    // dx = x d(log x); trapezoid weights
    const double w = (i == 0 || i == points) ? 0.5 : 1.0;
    if (f < 0) r.negative_mass += -f * x * h * w;
  }
  return r;
}

/// Clamp-to-zero view of a curve with the positive part renormalized to unit mass:
/// F_clip(x) = (F(x) + N(x)) / (1 + N(inf)), N(x) = integral of max(-f, 0) up to x.
/// N is tabulated on a log-x grid. Cells where f < 0 at both ends use the exact
/// increment F(x_i) - F(x), so F_clip is flat there; cells with a sign change use
/// the trapezoid rule.
class ClippedCurve {
 public:
  explicit ClippedCurve(ApproximantCurve curve, int points = 8000) : curve_(std::move(curve)) {
    std::tie(lo_, hi_) = curve_.log_x_window();
    step_ = (hi_ - lo_) / points;
    cumulative_neg_.assign(points + 1, 0.0);
    node_cdf_.resize(points + 1);
    negative_cell_.assign(points, false);
    double prev_f = curve_.pdf(std::exp(lo_));
    node_cdf_[0] = curve_.cdf(std::exp(lo_));
    for (int i = 1; i <= points; ++i) {
      const double x = std::exp(lo_ + step_ * i);
      const double f = curve_.pdf(x);
      node_cdf_[i] = curve_.cdf(x);
      double inc = 0.0;
      if (prev_f < 0 && f < 0) {
        negative_cell_[i - 1] = true;
        inc = node_cdf_[i - 1] - node_cdf_[i];
      } else if (prev_f < 0 || f < 0) {
        const double x0 = std::exp(lo_ + step_ * (i - 1));
        inc = 0.5 * (std::max(-prev_f, 0.0) * x0 + std::max(-f, 0.0) * x) * step_;
      }
      cumulative_neg_[i] = cumulative_neg_[i - 1] + std::max(inc, 0.0);
      prev_f = f;
    }
  }

  double negative_mass() const { return cumulative_neg_.back(); }

  double pdf(double x) const { return std::max(curve_.pdf(x), 0.0) / (1.0 + negative_mass()); }

  double cdf(double x) const {
    if (!(x > 0)) throw std::domain_error("approx_cdf: x must be positive");
    return std::clamp((curve_.cdf(x) + neg_up_to(x)) / (1.0 + negative_mass()), 0.0, 1.0);
  }

  double ccdf(double x) const {
    if (!(x > 0)) throw std::domain_error("approx_ccdf: x must be positive");
    const double tail_neg = negative_mass() - neg_up_to(x);
    return std::clamp((curve_.ccdf(x) + tail_neg) / (1.0 + negative_mass()), 0.0, 1.0);
  }

 private:
  double neg_up_to(double x) const {
    const double lx = std::log(x);
    if (lx <= lo_) return 0.0;
    if (lx >= hi_) return cumulative_neg_.back();
    const double pos = (lx - lo_) / step_;
    const auto i = std::min(static_cast<std::size_t>(pos), negative_cell_.size() - 1);
    if (negative_cell_[i]) return cumulative_neg_[i] + std::max(node_cdf_[i] - curve_.cdf(x), 0.0);
    const double frac = pos - static_cast<double>(i);
    return cumulative_neg_[i] + frac * (cumulative_neg_[i + 1] - cumulative_neg_[i]);
  }

  ApproximantCurve curve_;
  double lo_ = 0.0;
  double hi_ = 0.0;
  double step_ = 1.0;
  std::vector<double> cumulative_neg_;
  std::vector<double> node_cdf_;
  std::vector<bool> negative_cell_;
};

/// Fitted approximant: reference lognormal, eta_i, xi_i in extended precision
/// and the double evaluation curve built from xi_i nu_i.
template <class T = Real>
struct ApproximantModel {
  LognormalParams<T> params;
  std::vector<SignedLogReal<T>> eta;
  std::vector<SignedLogReal<T>> xi;
  ApproximantCurve curve;

  int degree() const { return static_cast<int>(xi.size()) - 1; }

  /// f_LN(x) sum_i xi_i x^i evaluated in T.
  T pdf_extended(const T& x) const {
    using std::log;
    const T lx = log(x);
    std::vector<SignedLogReal<T>> terms;
    terms.reserve(xi.size());
    for (std::size_t i = 0; i < xi.size(); ++i) {
      terms.push_back(xi[i] * SignedLogReal<T>::from_log(1, lx * static_cast<int>(i)));
    }
    return lnorth::sum<T>(terms).value() * lognormal_pdf(x, params);
  }
};

/// eta_i = (1/h_i) sum_{k<=i} c_{i,k} M(k).
template <class T>
std::vector<SignedLogReal<T>> fit_eta(const MomentSequence<T>& moments, const LognormalParams<T>& p) {
  moments.validate();
  const int n = moments.degree();
  std::vector<SignedLogReal<T>> eta;
  eta.reserve(n + 1);
  std::vector<SignedLogReal<T>> terms;
  for (int i = 0; i <= n; ++i) {
    terms.clear();
    for (int k = 0; k <= i; ++k) terms.push_back(ortho_coeff_closed(i, k, p) * moments.values[k]);
    eta.push_back(lnorth::sum<T>(terms) / normalization_h(i, p).h);
  }
  return eta;
}

/// xi_j = sum_{k=j}^{N} c_{k,j} eta_k.
template <class T>
std::vector<SignedLogReal<T>> eta_to_xi(const std::vector<SignedLogReal<T>>& eta,
                                        const LognormalParams<T>& p) {
  if (eta.empty()) throw std::invalid_argument("eta_to_xi: empty coefficient vector");
  const int n = static_cast<int>(eta.size()) - 1;
  std::vector<SignedLogReal<T>> xi;
  xi.reserve(n + 1);
  std::vector<SignedLogReal<T>> terms;
  for (int j = 0; j <= n; ++j) {
    terms.clear();
    for (int k = j; k <= n; ++k) terms.push_back(ortho_coeff_closed(k, j, p) * eta[k]);
    xi.push_back(lnorth::sum<T>(terms));
  }
  return xi;
}

inline constexpr double kMassIdentityTolerance = 1e-10;

/// Builds the approximant for moments M(0..N) around reference p. Verifies the
/// normalization identity sum_i xi_i nu_i = M(0) = 1.
template <class T>
ApproximantModel<T> build_approximant(const MomentSequence<T>& moments, const LognormalParams<T>& p) {
  ApproximantModel<T> model{p, fit_eta(moments, p), {}, {}};
  model.xi = eta_to_xi(model.eta, p);
  model.curve.mu = to_double(p.mu());
  model.curve.sigma = to_double(p.sigma());
  std::vector<SignedLogReal<T>> products;
  for (int i = 0; i <= model.degree(); ++i) {
    products.push_back(model.xi[i] * lognormal_moment(i, p));
    model.curve.xinu.push_back(products.back().to_double());
  }
  const double mass = lnorth::sum<T>(products).to_double();
  if (std::abs(mass - 1.0) > kMassIdentityTolerance) {
    throw NumericalError("build_approximant: sum xi_i nu_i = " + std::to_string(mass) +
                             " deviates from 1; increase working_bits",
                         mass, std::abs(mass - 1.0));
  }
  return model;
}

inline double approx_pdf(const ApproximantCurve& c, double x) { return c.pdf(x); }
inline double approx_cdf(const ApproximantCurve& c, double x) { return c.cdf(x); }
inline double approx_ccdf(const ApproximantCurve& c, double x) { return c.ccdf(x); }

template <class T>
double approx_pdf(const ApproximantModel<T>& m, double x) { return m.curve.pdf(x); }
template <class T>
double approx_cdf(const ApproximantModel<T>& m, double x) { return m.curve.cdf(x); }
template <class T>
double approx_ccdf(const ApproximantModel<T>& m, double x) { return m.curve.ccdf(x); }

struct StabilityRow {
  int degree = 0;
  double abs_last_xinu = 0.0;  // |xi_N nu_N| of the degree-N model
  double sup_cdf_change = 0.0; // sup_x |F_N(x) - F_{N-1}(x)|
  double min_pdf = 0.0;        // most negative PDF value of the degree-N model
};

/// Fits degrees 1..n_max from the same moments and reports how the CDF settles.
template <class T>
std::vector<StabilityRow> stability_scan(const MomentSequence<T>& moments, const LognormalParams<T>& p,
                                         int n_max, int grid_points = 2000) {
  if (n_max < 1 || n_max > moments.degree()) {
    throw std::invalid_argument("stability_scan: need 1 <= N_max <= moment degree");
  }
  const ApproximantCurve widest = build_approximant(moments.truncated(n_max), p).curve;
  const auto [lo, hi] = widest.log_x_window();
  std::vector<double> xs(grid_points + 1);
  for (int i = 0; i <= grid_points; ++i) xs[i] = std::exp(lo + (hi - lo) * i / grid_points);

  std::vector<StabilityRow> rows;
  ApproximantCurve prev = build_approximant(moments.truncated(0), p).curve;
  for (int n = 1; n <= n_max; ++n) {
    const ApproximantCurve cur = build_approximant(moments.truncated(n), p).curve;
    StabilityRow row;
    row.degree = n;
    row.abs_last_xinu = std::abs(cur.xinu.back());
    for (double x : xs) row.sup_cdf_change = std::max(row.sup_cdf_change, std::abs(cur.cdf(x) - prev.cdf(x)));
    row.min_pdf = scan_negativity(cur).min_pdf;
    rows.push_back(row);
    prev = cur;
  }
  return rows;
}

}  // namespace lnorth
