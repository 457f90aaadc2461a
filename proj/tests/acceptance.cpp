// Acceptance runner: one PASS/FAIL line per criterion. Optional arguments
// select criteria by name substring. Exit status is non-zero if any selected
// criterion fails.

#include "lnorth/density_approx.hpp"
#include "lnorth/lognormal.hpp"
#include "lnorth/monte_carlo.hpp"
#include "lnorth/nakagami.hpp"

#include "test_support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace lnorth;
using F = Float256;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

Outcome closed_form_vs_oracle() {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> mu_dist(-2.0, 2.0);
  std::uniform_real_distribution<double> s2_dist(0.05, 2.5);
  double worst = 0.0;
  for (int draw = 0; draw < 20; ++draw) {
    const LognormalParams<F> p(F(mu_dist(rng)), F(s2_dist(rng)));
    for (int n = 0; n <= 8; ++n) {
      for (int k = 0; k <= n; ++k) {
        worst = std::max(worst, to_double(relative_difference(ortho_coeff_closed(n, k, p),
                                                              ortho_coeff_oracle(n, k, p))));
      }
    }
  }
  return {worst < 1e-20, "max relative deviation " + sci(worst) + " (bound 1e-20)"};
}

Outcome orthogonality() {
  double worst = 0.0;
  for (double s2 : {0.1, 0.5, 1.0}) {
    const LognormalParams<F> p(F(0), F(s2));
    std::vector<F> h;
    for (int j = 0; j <= 8; ++j) h.push_back(normalization_h(j, p).h.value());
    for (int j = 0; j <= 8; ++j) {
      for (int k = j + 1; k <= 8; ++k) {
        const F ratio = abs(testutil::ortho_inner(j, k, p)) / sqrt(h[j] * h[k]);
        worst = std::max(worst, to_double(ratio));
      }
    }
  }
  return {worst < 1e-8, "max |<pi_j,pi_k>|/sqrt(h_j h_k) " + sci(worst) + " (bound 1e-8)"};
}

Outcome vandermonde() {
  double worst = 0.0;
  for (double s2 : {0.3, 1.0, 2.0}) {
    for (int n = 1; n <= 5; ++n) worst = std::max(worst, to_double(vandermonde_deviation(n, F(s2))));
  }
  return {worst < 1e-20, "max relative deviation " + sci(worst) + " (bound 1e-20)"};
}

Outcome moment_matching() {
  const auto spec = NakagamiProductSpec::equicorrelated(6, 4, 1, 0);
  const auto fit = fit_lognormal<F>(spec, 8);
  const auto model = build_approximant(fit.moments, fit.params());
  double worst = 0.0;
  for (int k = 0; k <= 8; ++k) {
    const F quad = testutil::approximant_moment(k, model);
    worst = std::max(worst, to_double(abs(quad / fit.moments.values[k].value() - 1)));
  }
  return {worst < 1e-6, "max relative moment error k<=8 " + sci(worst) + " (bound 1e-6)"};
}

Outcome reductions() {
  double worst = 0.0;
  for (double m : {0.5, 1.0, 4.0}) {
    for (int K : {1, 2, 6}) {
      const auto spec = NakagamiProductSpec::equicorrelated(K, m, 1, 0);
      const auto corr = product_moments_corr<F>(16, spec);
      for (int k = 0; k <= 16; ++k) {
        worst = std::max(worst, to_double(relative_difference(corr[k], product_moment_indep<F>(k, spec))));
      }
      worst = std::max(worst, to_double(abs(log_var_corr<F>(spec) / log_var_indep<F>(spec) - 1)));
    }
  }
  return {worst < 1e-10, "max relative deviation (M(0..16), sigma^2) " + sci(worst) + " (bound 1e-10)"};
}

Outcome log_variance_vs_monte_carlo() {
  bool ok = true;
  std::ostringstream detail;
  for (double rho : {0.1, 0.5}) {
    const auto spec = NakagamiProductSpec::equicorrelated(2, 1, 1, rho);
    const auto batch = sample_correlated(spec, 1000000, 7001);
    const double n = static_cast<double>(batch.values.size());
    double mean = 0;
    for (double v : batch.values) mean += std::log(v);
    mean /= n;
    double m2 = 0, m4 = 0;
    for (double v : batch.values) {
      const double d = std::log(v) - mean;
      m2 += d * d;
      m4 += d * d * d * d;
    }
    const double var = m2 / (n - 1);
    const double se = std::sqrt((m4 / n - (m2 / n) * (m2 / n)) / n);
    const double model = to_double(log_var_corr<F>(spec));
    const double z = std::abs(var - model) / se;
    ok = ok && z < 3.0;
    detail << "rho=" << rho << ": sigma2=" << model << " mc=" << var << " (" << z << " SE); ";
  }
  return {ok, detail.str() + "bound 3 SE"};
}

Outcome ccdf_reproduction() {
  bool ok = true;
  std::ostringstream detail;
  for (double rho : {0.0, 0.1, 0.5, 0.8}) {
    const auto spec = NakagamiProductSpec::equicorrelated(6, 4, 1, rho);
    const auto curve = build_product_approximant<F>(spec, 16).curve;
    const auto batch = sample_correlated(spec, 1000000, 2024);
    const auto report = ccdf_compare(batch, curve, default_ccdf_grid(batch));
    const double gap = report.max_ccdf_gap;
    bool cell = false;
    std::string bound;
    if (rho <= 0.1) {
      cell = gap < 1e-3;
      bound = "<1e-3";
    } else if (rho <= 0.5) {
      cell = gap < 1e-2;
      bound = "<1e-2";
    } else {
      cell = gap > 1e-2;
      bound = ">1e-2 expected";
    }
    ok = ok && cell;
    detail << "rho=" << rho << ": gap " << sci(gap) << " " << bound << (cell ? " ok" : " MISS") << "; ";
  }
  return {ok, detail.str()};
}

Outcome mse_table() {
  struct Cell {
    double m;
    int K;
    double reference;
  };
  const Cell cells[] = {{4, 2, 8.13e-6}, {4, 4, 2.29e-5}, {4, 6, 2.43e-5},
                        {1, 2, 1.14e-3}, {1, 6, 6.28e-4}, {1, 20, 1.14e-4}};
  bool ok = true;
  std::ostringstream detail;
  for (const auto& c : cells) {
    const auto spec = NakagamiProductSpec::equicorrelated(c.K, c.m, 1, 0);
    const auto curve = build_product_approximant<F>(spec, 16).curve;
    const auto batch = sample_correlated(spec, 1000000, 2024);
    const double eps2 = mse_epsilon2(batch, curve);
    const double ratio = eps2 / c.reference;
    const bool cell = ratio < 3.0 && ratio > 1.0 / 3.0;
    ok = ok && cell;
    detail << "m=" << c.m << ",K=" << c.K << ": " << sci(eps2) << " (x" << ratio << ")"
           << (cell ? "" : " MISS") << "; ";
  }
  return {ok, detail.str() + "bound factor 3"};
}

Outcome stability() {
  const auto spec = NakagamiProductSpec::equicorrelated(6, 4, 1, 0);
  const auto fit = fit_lognormal<F>(spec, 16);
  const auto rows = stability_scan(fit.moments, fit.params(), 16);
  const double change = rows.back().sup_cdf_change;
  // least-squares slope of log|xi_i nu_i| against i over i = 1..16
  const auto xinu = build_approximant(fit.moments, fit.params()).curve.xinu;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (int i = 1; i < static_cast<int>(xinu.size()); ++i) {
    if (xinu[i] == 0) continue;
    const double y = std::log(std::abs(xinu[i]));
    sx += i;
    sy += y;
    sxx += double(i) * i;
    sxy += i * y;
    ++count;
  }
  const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
  const bool ok = change < 1e-4 && slope < 0;
  return {ok, "sup|F_16 - F_15| " + sci(change) + " (bound 1e-4); log|xi_i nu_i| slope " + sci(slope) +
                  " per degree, |xi_16 nu_16| " + sci(std::abs(xinu.back()))};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"closed-form coefficients vs determinant oracle", closed_form_vs_oracle},
      {"orthogonality of pi_0..pi_8", orthogonality},
      {"Vandermonde identity", vandermonde},
      {"moment matching at N=8 (K=6, m=4)", moment_matching},
      {"correlated formulas reduce to independent at lambda=0", reductions},
      {"log-variance quadrature vs Monte-Carlo (K=2, m=1)", log_variance_vs_monte_carlo},
      {"CCDF gap vs Monte-Carlo (K=6, m=4, N=16)", ccdf_reproduction},
      {"epsilon^2 table cells at rho=0", mse_table},
      {"stability of the N=16 approximant (K=6, m=4)", stability},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    bool selected = argc < 2;
    for (int a = 1; a < argc; ++a) selected = selected || name.find(argv[a]) != std::string::npos;
    if (!selected) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = fn();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s  %s: %s [%.1fs]\n", out.pass ? "PASS" : "FAIL", name.c_str(), out.detail.c_str(), secs);
    std::fflush(stdout);
    failures += out.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
