#pragma once

// Inputs to the approximant for P = prod_i R_i with Nakagami-m factors:
// moments M(k) (independent closed form, or the correlated single-integral
// form over 1F1), and the lognormal reference matched to E[log P], Var[log P].
//
// Correlation model: R_i^2 = Omega_i/(2m) sum_{l=1}^{2m} (lambda_i U_l + sqrt(1-lambda_i^2) V_il)^2
// with U shared across factors; the power correlation of (R_i^2, R_j^2) is
// lambda_i^2 lambda_j^2. Conditioning on t = |U|^2 / 2 ~ Gamma(m, 1) makes the
// factors independent noncentral variates, which is where the integrals over
// t^{m-1} e^{-t} come from.

#include "lnorth/density_approx.hpp"
#include "lnorth/errors.hpp"
#include "lnorth/precision.hpp"
#include "lnorth/quadrature.hpp"
#include "lnorth/signed_log.hpp"
#include "lnorth/special.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lnorth {

inline constexpr double kIndependenceThreshold = 1e-14;

struct NakagamiProductSpec {
  std::vector<double> m;       // per-factor fading parameter (2m integer)
  std::vector<double> omega;   // per-factor spread E[R^2]
  std::vector<double> lambda;  // per-factor correlation loading in [0, 1)

  /// K factors with common m and Omega and equal pairwise power correlation rho
  /// (lambda_i = rho^{1/4}).
  static NakagamiProductSpec equicorrelated(int K, double m, double omega, double rho) {
    if (K < 1) throw std::invalid_argument("NakagamiProductSpec: K must be >= 1");
    if (!(rho >= 0.0 && rho < 1.0)) {
      throw std::invalid_argument("NakagamiProductSpec: rho must lie in [0, 1)");
    }
    NakagamiProductSpec s{std::vector<double>(K, m), std::vector<double>(K, omega),
                          std::vector<double>(K, std::pow(rho, 0.25))};
    s.validate();
    return s;
  }

  int K() const { return static_cast<int>(m.size()); }

  bool independent() const {
    return std::all_of(lambda.begin(), lambda.end(),
                       [](double l) { return l < kIndependenceThreshold; });
  }

  bool common_m() const {
    return std::all_of(m.begin(), m.end(), [&](double v) { return v == m.front(); });
  }

  void validate() const {
    if (m.empty()) throw std::invalid_argument("NakagamiProductSpec: K must be >= 1");
    if (omega.size() != m.size() || lambda.size() != m.size()) {
      throw std::invalid_argument("NakagamiProductSpec: m, omega, lambda must all have K entries");
    }
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double twice = 2.0 * m[i];
      if (!(m[i] > 0) || twice != std::round(twice)) {
        throw std::invalid_argument("NakagamiProductSpec: m must be a positive integer or half-integer");
      }
      if (!(omega[i] > 0)) throw std::invalid_argument("NakagamiProductSpec: omega must be positive");
      if (!(lambda[i] >= 0.0 && lambda[i] < 1.0)) {
        throw std::invalid_argument("NakagamiProductSpec: lambda must lie in [0, 1)");
      }
    }
    if (!independent() && !common_m()) {
      throw std::invalid_argument(
          "NakagamiProductSpec: correlated factors must share a common m");
    }
  }

  /// Power correlation lambda_i^2 lambda_j^2.
  double power_correlation(int i, int j) const {
    return lambda[i] * lambda[i] * lambda[j] * lambda[j];
  }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    os << "K=" << K();
    auto list = [&](const char* name, const std::vector<double>& v) {
      os << ' ' << name << '=';
      for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    };
    list("m", m);
    list("omega", omega);
    list("lambda", lambda);
    return os.str();
  }
};

template <class T = Real>
struct FitResult {
  T mu;
  T sigma2;
  MomentSequence<T> moments;
  std::vector<T> zeta;

  LognormalParams<T> params() const { return LognormalParams<T>(mu, sigma2); }
};

/// M(k) = prod_i Gamma(m_i + k/2)/Gamma(m_i) (Omega_i/m_i)^{k/2}.
template <class T = Real>
SignedLogReal<T> product_moment_indep(int k, const NakagamiProductSpec& spec) {
  using std::log;
  spec.validate();
  if (k < 0) throw std::domain_error("product_moment_indep: k must be non-negative");
  if (!spec.independent()) {
    throw std::invalid_argument("product_moment_indep: requires lambda = 0 for every factor");
  }
  CompensatedSum<T> acc;
  for (int i = 0; i < spec.K(); ++i) {
    const T m = spec.m[i];
    acc.add(ln_gamma(T(m + T(k) / 2)) - ln_gamma(m));
    acc.add(T(k) / 2 * log(T(spec.omega[i]) / m));
  }
  return SignedLogReal<T>::from_log(1, acc.value());
}

namespace detail {

inline RefinementPolicy refinement_from(const PrecisionConfig& cfg) {
  cfg.validate();
  RefinementPolicy policy;
  policy.initial_nodes = cfg.quadrature_nodes;
  policy.max_nodes = std::max(1024, 16 * cfg.quadrature_nodes);
  return policy;
}

// Distinct lambda values with their multiplicities.
inline std::map<double, int> lambda_groups(const NakagamiProductSpec& spec) {
  std::map<double, int> groups;
  for (double l : spec.lambda) ++groups[l];
  return groups;
}

}  // namespace detail

/// M(0..n) from the correlated single-integral representation, all orders on a
/// shared Gauss-Laguerre rule (alpha = m - 1), refined by node doubling.
template <class T = Real>
std::vector<SignedLogReal<T>> product_moments_corr(int n, const NakagamiProductSpec& spec,
                                                   const PrecisionConfig& cfg = {}) {
  using std::log;
  using std::pow;
  spec.validate();
  if (n < 0) throw std::domain_error("product_moment_corr: k must be non-negative");
  if (!spec.common_m()) throw std::invalid_argument("product_moment_corr: requires a common m");
  const T m = spec.m.front();
  const int K = spec.K();
  const auto groups = detail::lambda_groups(spec);

  const auto integrals = refine_laguerre<T>(
      spec.m.front() - 1.0, detail::refinement_from(cfg), [&](const QuadratureRule<T>& rule) {
        std::vector<T> out(n + 1);
        for (int k = 0; k <= n; ++k) {
          out[k] = rule.integrate([&](const T& t) {
            T prod = 1;
            for (const auto& [lam, count] : groups) {
              const T l2 = T(lam) * T(lam);
              const T f = kummer_1f1_neg_half<T>(k, m, l2 * t / (l2 - 1));
              prod *= count == 1 ? f : T(pow(f, count));
            }
            return prod;
          });
        }
        return out;
      });

  const T lg_m = ln_gamma(m);
  std::vector<SignedLogReal<T>> moments;
  moments.reserve(n + 1);
  moments.push_back(SignedLogReal<T>::one());
  for (int k = 1; k <= n; ++k) {
    CompensatedSum<T> acc;
    acc.add(K * ln_gamma(T(m + T(k) / 2)));
    acc.add(-T(K) * k / 2 * log(m));
    acc.add(-T(K + 1) * lg_m);
    for (int i = 0; i < K; ++i) {
      const T l2 = T(spec.lambda[i]) * T(spec.lambda[i]);
      acc.add(T(k) / 2 * log(T(spec.omega[i]) * (1 - l2)));
    }
    acc.add(log(integrals[k]));
    moments.push_back(SignedLogReal<T>::from_log(1, acc.value()));
  }
  return moments;
}

template <class T = Real>
SignedLogReal<T> product_moment_corr(int k, const NakagamiProductSpec& spec,
                                     const PrecisionConfig& cfg = {}) {
  return product_moments_corr<T>(k, spec, cfg).back();
}

/// zeta_i = E[log R_i] = (Psi_0(m_i) - log(m_i / Omega_i)) / 2.
template <class T = Real>
std::vector<T> log_means(const NakagamiProductSpec& spec) {
  using std::log;
  spec.validate();
  std::vector<T> zeta;
  for (int i = 0; i < spec.K(); ++i) {
    const T m = spec.m[i];
    zeta.push_back((polygamma(0, m) - log(m / T(spec.omega[i]))) / 2);
  }
  return zeta;
}

/// mu = sum_i zeta_i (no dependence on lambda).
template <class T = Real>
T log_mean_mu(const NakagamiProductSpec& spec) {
  CompensatedSum<T> acc;
  for (const T& z : log_means<T>(spec)) acc.add(z);
  return acc.value();
}

/// sigma^2 = (1/4) sum_i Psi_1(m_i).
template <class T = Real>
T log_var_indep(const NakagamiProductSpec& spec) {
  spec.validate();
  if (!spec.independent()) {
    throw std::invalid_argument("log_var_indep: requires lambda = 0 for every factor");
  }
  CompensatedSum<T> acc;
  for (double m : spec.m) acc.add(polygamma(1, T(m)) / 4);
  return acc.value();
}

/// I_i(t) - 2 zeta_i = log(1 - lambda^2) - d/da 1F1(a, m, lambda^2 t/(lambda^2 - 1))|_{a=0},
/// i.e. twice the conditional mean of log R_i given t, centred. Independent of Omega_i.
template <class T = Real>
T centred_log_conditional(const T& m, double lambda, const T& t) {
  using boost::math::log1p;
  const T l2 = T(lambda) * T(lambda);
  return log1p(-l2) - kummer_1f1_da_at_zero<T>(m, l2 * t / (l2 - 1));
}

/// Cov[log R_i, log R_j] for every pair of distinct lambda values (keyed by
/// lambda pair), from (1/4) int (I_i - 2 zeta_i)(I_j - 2 zeta_j) t^{m-1} e^{-t} / Gamma(m) dt.
/// Since E[I_i(t)] = 2 zeta_i, this equals int I_i I_j t^{m-1} e^{-t} / (4 Gamma(m)) dt - zeta_i zeta_j.
template <class T = Real>
std::map<std::pair<double, double>, T> log_covariances(const NakagamiProductSpec& spec,
                                                       const PrecisionConfig& cfg = {}) {
  using std::exp;
  spec.validate();
  if (!spec.common_m()) throw std::invalid_argument("log_var_corr: requires a common m");
  const T m = spec.m.front();
  std::vector<double> lams;
  for (const auto& [lam, count] : detail::lambda_groups(spec)) lams.push_back(lam);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < lams.size(); ++a) {
    for (std::size_t b = a; b < lams.size(); ++b) pairs.emplace_back(a, b);
  }
  const T inv_gamma_m = exp(-ln_gamma(m));

  const auto integrals = refine_laguerre<T>(
      spec.m.front() - 1.0, detail::refinement_from(cfg), [&](const QuadratureRule<T>& rule) {
        std::vector<CompensatedSum<T>> acc(pairs.size());
        std::vector<T> d(lams.size());
        for (std::size_t node = 0; node < rule.size(); ++node) {
          for (std::size_t a = 0; a < lams.size(); ++a) {
            d[a] = centred_log_conditional<T>(m, lams[a], rule.nodes[node]);
          }
          for (std::size_t p = 0; p < pairs.size(); ++p) {
            acc[p].add(rule.weights[node] * d[pairs[p].first] * d[pairs[p].second]);
          }
        }
        std::vector<T> out;
        for (auto& a : acc) out.push_back(a.value() * inv_gamma_m / 4);
        return out;
      });

  std::map<std::pair<double, double>, T> cov;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    cov[{lams[pairs[p].first], lams[pairs[p].second]}] = integrals[p];
  }
  return cov;
}

/// sigma^2 = (1/4) sum_i Psi_1(m) + 2 sum_{i<j} Cov[log R_i, log R_j].
template <class T = Real>
T log_var_corr(const NakagamiProductSpec& spec, const PrecisionConfig& cfg = {}) {
  spec.validate();
  const T m = spec.m.front();
  const auto cov = log_covariances<T>(spec, cfg);
  CompensatedSum<T> acc;
  acc.add(polygamma(1, m) * spec.K() / 4);
  for (int i = 0; i < spec.K(); ++i) {
    for (int j = i + 1; j < spec.K(); ++j) {
      const double a = std::min(spec.lambda[i], spec.lambda[j]);
      const double b = std::max(spec.lambda[i], spec.lambda[j]);
      acc.add(2 * cov.at({a, b}));
    }
  }
  const T sigma2 = acc.value();
  if (!(sigma2 > 0)) {
    throw NumericalError("log_var_corr: non-positive variance; quadrature failure",
                         to_double(sigma2));
  }
  return sigma2;
}

/// Moments M(0..n) and matched (mu, sigma^2). Specs whose lambda are all below
/// the independence threshold use the closed forms.
template <class T = Real>
FitResult<T> fit_lognormal(const NakagamiProductSpec& spec, int n, const PrecisionConfig& cfg = {}) {
  spec.validate();
  FitResult<T> fit{log_mean_mu<T>(spec), T(0), {}, log_means<T>(spec)};
  if (spec.independent()) {
    for (int k = 0; k <= n; ++k) fit.moments.values.push_back(product_moment_indep<T>(k, spec));
    fit.sigma2 = log_var_indep<T>(spec);
  } else {
    fit.moments.values = product_moments_corr<T>(n, spec, cfg);
    fit.sigma2 = log_var_corr<T>(spec, cfg);
  }
  return fit;
}

template <class T = Real>
ApproximantModel<T> build_product_approximant(const NakagamiProductSpec& spec, int n,
                                              const PrecisionConfig& cfg = {}) {
  if (n < 0) throw std::invalid_argument("build_product_approximant: N must be non-negative");
  const auto fit = fit_lognormal<T>(spec, n, cfg);
  return build_approximant(fit.moments, fit.params());
}

}  // namespace lnorth
