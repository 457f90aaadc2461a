#pragma once

#include "lnorth/errors.hpp"
#include "lnorth/precision.hpp"
#include "lnorth/special.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lnorth {

template <class T>
struct QuadratureRule {
  std::vector<T> nodes;
  std::vector<T> weights;

  std::size_t size() const { return nodes.size(); }

  template <class F>
  T integrate(F&& f) const {
    CompensatedSum<T> acc;
    for (std::size_t i = 0; i < nodes.size(); ++i) acc.add(weights[i] * f(nodes[i]));
    return acc.value();
  }
};

namespace detail {

// Eigenvalues of a symmetric tridiagonal Jacobi matrix, ascending.
inline std::vector<double> jacobi_eigenvalues(const std::vector<double>& diag,
                                              const std::vector<double>& offdiag) {
  const auto n = static_cast<Eigen::Index>(diag.size());
  Eigen::VectorXd d(n);
  Eigen::VectorXd e(std::max<Eigen::Index>(n - 1, 0));
  for (Eigen::Index i = 0; i < n; ++i) d[i] = diag[i];
  for (Eigen::Index i = 0; i + 1 < n; ++i) e[i] = offdiag[i];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(d, e, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("jacobi_eigenvalues: tridiagonal eigensolver failed");
  }
  std::vector<double> out(solver.eigenvalues().data(), solver.eigenvalues().data() + n);
  std::sort(out.begin(), out.end());
  return out;
}

// Generalized Laguerre L_n^{(alpha)}(x) and L_{n-1}^{(alpha)}(x) by recurrence.
template <class T>
std::pair<T, T> laguerre_pair(int n, const T& alpha, const T& x) {
  T prev = 0;
  T cur = 1;
  for (int k = 0; k < n; ++k) {
    T next = ((2 * k + 1 + alpha - x) * cur - (k + alpha) * prev) / (k + 1);
    prev = std::move(cur);
    cur = std::move(next);
  }
  return {cur, prev};
}

// Legendre P_n(x) and P_{n-1}(x).
template <class T>
std::pair<T, T> legendre_pair(int n, const T& x) {
  T prev = 0;
  T cur = 1;
  for (int k = 0; k < n; ++k) {
    T next = ((2 * k + 1) * x * cur - k * prev) / (k + 1);
    prev = std::move(cur);
    cur = std::move(next);
  }
  return {cur, prev};
}

}  // namespace detail

/// Generalized Gauss-Laguerre rule: sum_i w_i g(t_i) = int_0^inf t^alpha e^{-t} g(t) dt,
/// exact for polynomial g of degree <= 2n - 1.
///
/// Nodes are seeded from the Golub-Welsch eigenvalues in double precision and
/// refined by Newton's method on L_n^{(alpha)} in T; weights use
/// w_i = Gamma(n + alpha + 1) / (n! t_i [L_n'(t_i)]^2).
template <class T>
QuadratureRule<T> gauss_laguerre(const T& alpha, int n) {
  using std::abs;
  using std::exp;
  using std::log;
  if (n < 1) throw std::domain_error("gauss_laguerre: n must be >= 1");
  if (!(alpha > -1)) throw std::domain_error("gauss_laguerre: alpha must exceed -1");

  const double a = to_double(alpha);
  std::vector<double> diag(n);
  std::vector<double> off(n > 1 ? n - 1 : 0);
  for (int i = 0; i < n; ++i) diag[i] = 2.0 * i + a + 1.0;
  for (int i = 1; i < n; ++i) off[i - 1] = std::sqrt(i * (i + a));
  const std::vector<double> seeds = detail::jacobi_eigenvalues(diag, off);

  const T tol = precision_tolerance<T>(16);
  const T log_scale = ln_gamma(T(n + alpha + 1)) - ln_gamma(T(n + 1));
  QuadratureRule<T> rule;
  rule.nodes.reserve(n);
  rule.weights.reserve(n);
  for (int i = 0; i < n; ++i) {
    T x = seeds[i];
    T deriv = 0;
    bool converged = false;
    for (int iter = 0; iter < 100; ++iter) {
      auto [p, pm1] = detail::laguerre_pair(n, alpha, x);
      deriv = (n * p - (n + alpha) * pm1) / x;
      const T step = p / deriv;
      x -= step;
      if (abs(step) <= tol * abs(x)) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      throw NumericalError("gauss_laguerre: Newton refinement did not converge for node " +
                               std::to_string(i) + " of " + std::to_string(n),
                           to_double(x));
    }
    auto [p, pm1] = detail::laguerre_pair(n, alpha, x);
    deriv = (n * p - (n + alpha) * pm1) / x;
    rule.weights.push_back(exp(log_scale - log(x) - 2 * log(abs(deriv))));
    rule.nodes.push_back(std::move(x));
  }
  return rule;
}

/// Gauss-Legendre rule on [-1, 1].
template <class T>
QuadratureRule<T> gauss_legendre(int n) {
  using std::abs;
  using std::cos;
  if (n < 1) throw std::domain_error("gauss_legendre: n must be >= 1");
  const T tol = precision_tolerance<T>(16);
  QuadratureRule<T> rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    T x = cos(pi_v<T>() * (i + T(0.75)) / (n + T(0.5)));
    T deriv = 0;
    for (int iter = 0; iter < 100; ++iter) {
      auto [p, pm1] = detail::legendre_pair(n, x);
      deriv = n * (x * p - pm1) / (x * x - 1);
      const T step = p / deriv;
      x -= step;
      if (abs(step) <= tol) break;
    }
    auto [p, pm1] = detail::legendre_pair(n, x);
    deriv = n * (x * p - pm1) / (x * x - 1);
    const T w = 2 / ((1 - x * x) * deriv * deriv);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

/// Composite Gauss-Legendre over [lo, hi] split into `panels` equal pieces.
template <class T, class F>
T integrate_composite(F&& f, const T& lo, const T& hi, int panels,
                      const QuadratureRule<T>& base) {
  const T width = (hi - lo) / panels;
  CompensatedSum<T> acc;
  for (int p = 0; p < panels; ++p) {
    const T mid = lo + width * (p + T(0.5));
    for (std::size_t i = 0; i < base.size(); ++i) {
      acc.add(base.weights[i] * f(mid + width / 2 * base.nodes[i]));
    }
  }
  return acc.value() * width / 2;
}

/// Read-mostly cache of Gauss-Laguerre rules keyed by (alpha, node count).
template <class T>
class LaguerreRuleCache {
 public:
  std::shared_ptr<const QuadratureRule<T>> get(double alpha, int n) {
    const Key key{alpha, n};
    {
      std::shared_lock lock(mutex_);
      if (auto it = rules_.find(key); it != rules_.end()) return it->second;
    }
    auto rule = std::make_shared<const QuadratureRule<T>>(gauss_laguerre<T>(T(alpha), n));
    std::unique_lock lock(mutex_);
    return rules_.try_emplace(key, std::move(rule)).first->second;
  }

  static LaguerreRuleCache& shared() {
    static LaguerreRuleCache cache;
    return cache;
  }

 private:
  using Key = std::pair<double, int>;
  std::shared_mutex mutex_;
  std::map<Key, std::shared_ptr<const QuadratureRule<T>>> rules_;
};

struct RefinementPolicy {
  int initial_nodes = 64;
  int max_nodes = 1024;
  double relative_tolerance = 1e-10;
};

/// Evaluates `integrate_with(rule)` -> std::vector<T> on Gauss-Laguerre rules of
/// doubling size until every component changes by less than the relative
/// tolerance (components are compared against the largest magnitude).
template <class T, class F>
std::vector<T> refine_laguerre(double alpha, const RefinementPolicy& policy, F&& integrate_with) {
  using std::abs;
  auto& cache = LaguerreRuleCache<T>::shared();
  int n = policy.initial_nodes;
  std::vector<T> prev = integrate_with(*cache.get(alpha, n));
  while (n < policy.max_nodes) {
    n *= 2;
    std::vector<T> cur = integrate_with(*cache.get(alpha, n));
    T worst = 0;
    for (std::size_t i = 0; i < cur.size(); ++i) {
      const T scale = std::max(abs(cur[i]), abs(prev[i]));
      if (scale > 0) worst = std::max(worst, T(abs(cur[i] - prev[i]) / scale));
    }
    prev = std::move(cur);
    if (worst < policy.relative_tolerance) return prev;
  }
  throw NumericalError("refine_laguerre: no stable result up to " +
                           std::to_string(policy.max_nodes) + " nodes",
                       prev.empty() ? 0.0 : to_double(prev.front()));
}

}  // namespace lnorth
