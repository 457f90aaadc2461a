#pragma once

// Reference samples of P = prod_i R_i under the shared-Gaussian Nakagami
// construction, empirical distribution functions, and accuracy metrics
// against an approximant curve.

#include "lnorth/density_approx.hpp"
#include "lnorth/errors.hpp"
#include "lnorth/nakagami.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace lnorth {

struct SampleBatch {
  std::vector<double> values;  // sorted ascending
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::uint64_t spec_hash = 0;
};

/// FNV-1a over the canonical spec description; provenance tag for exported batches.
inline std::uint64_t spec_hash(const NakagamiProductSpec& spec) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : spec.describe()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::size_t kChunkSize = 1 << 16;

}  // namespace detail

/// Draws one realization per slot of `out` from the chunk's own RNG stream.
class ProductSampler {
 public:
  explicit ProductSampler(const NakagamiProductSpec& spec) : spec_(spec) {
    spec_.validate();
    int max_dof = 0;
    for (int i = 0; i < spec_.K(); ++i) {
      const int dof = static_cast<int>(std::lround(2.0 * spec_.m[i]));
      dof_.push_back(dof);
      max_dof = std::max(max_dof, dof);
      scale_.push_back(spec_.omega[i] / dof);
      private_.push_back(std::sqrt(1.0 - spec_.lambda[i] * spec_.lambda[i]));
    }
    shared_.resize(max_dof);
  }

  template <class Rng>
  double draw(Rng& rng, std::normal_distribution<double>& normal) {
    for (double& u : shared_) u = normal(rng);
    double product = 1.0;
    for (int i = 0; i < spec_.K(); ++i) {
      const double lam = spec_.lambda[i];
      double acc = 0.0;
      for (int l = 0; l < dof_[i]; ++l) {
        const double g = lam * shared_[l] + private_[i] * normal(rng);
        acc += g * g;
      }
      product *= std::sqrt(scale_[i] * acc);
    }
    return product;
  }

  /// Factor amplitudes R_1..R_K of a single draw (for marginal/correlation checks).
  template <class Rng>
  void draw_factors(Rng& rng, std::normal_distribution<double>& normal, std::vector<double>& r) {
    r.resize(spec_.K());
    for (double& u : shared_) u = normal(rng);
    for (int i = 0; i < spec_.K(); ++i) {
      double acc = 0.0;
      for (int l = 0; l < dof_[i]; ++l) {
        const double g = spec_.lambda[i] * shared_[l] + private_[i] * normal(rng);
        acc += g * g;
      }
      r[i] = std::sqrt(scale_[i] * acc);
    }
  }

 private:
  NakagamiProductSpec spec_;
  std::vector<int> dof_;
  std::vector<double> scale_;
  std::vector<double> private_;
  std::vector<double> shared_;
};

/// RNG for chunk `chunk` of a run seeded with `seed`.
inline std::mt19937_64 chunk_rng(std::uint64_t seed, std::uint64_t chunk) {
  return std::mt19937_64(detail::splitmix64(seed ^ detail::splitmix64(chunk + 1)));
}

/// n sorted realizations of P. Chunks of fixed size draw from independent
/// streams keyed by (seed, chunk index), so the batch does not depend on the
/// number of worker threads.
inline SampleBatch sample_correlated(const NakagamiProductSpec& spec, std::size_t n,
                                     std::uint64_t seed, unsigned threads = 0) {
  spec.validate();
  for (double m : spec.m) {
    if (2.0 * m != std::round(2.0 * m)) throw UnsupportedError("sample_correlated: 2m must be an integer");
  }
  if (n < 1) throw std::invalid_argument("sample_correlated: n must be >= 1");
  SampleBatch batch{std::vector<double>(n), seed, n, spec_hash(spec)};
  const std::size_t chunks = (n + detail::kChunkSize - 1) / detail::kChunkSize;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, chunks));

  auto work = [&](unsigned worker) {
    ProductSampler sampler(spec);
    for (std::size_t c = worker; c < chunks; c += threads) {
      auto rng = chunk_rng(seed, c);
      std::normal_distribution<double> normal;
      const std::size_t begin = c * detail::kChunkSize;
      const std::size_t end = std::min(n, begin + detail::kChunkSize);
      for (std::size_t j = begin; j < end; ++j) batch.values[j] = sampler.draw(rng, normal);
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
  }
  std::sort(batch.values.begin(), batch.values.end());
  return batch;
}

/// count(P_j <= x) / n.
inline double empirical_cdf(const SampleBatch& batch, double x) {
  if (batch.values.empty()) throw std::invalid_argument("empirical_cdf: empty batch");
  const auto it = std::upper_bound(batch.values.begin(), batch.values.end(), x);
  return static_cast<double>(it - batch.values.begin()) / static_cast<double>(batch.values.size());
}

inline double empirical_ccdf(const SampleBatch& batch, double x) {
  if (batch.values.empty()) throw std::invalid_argument("empirical_ccdf: empty batch");
  const auto it = std::upper_bound(batch.values.begin(), batch.values.end(), x);
  return static_cast<double>(batch.values.end() - it) / static_cast<double>(batch.values.size());
}

/// epsilon^2 estimated as (1/n) sum_j (F*(P_j) - F(P_j))^2 over the sample.
template <class Cdf>
  requires std::invocable<Cdf, double>
double mse_epsilon2(const SampleBatch& batch, Cdf&& model_cdf) {
  const auto& v = batch.values;
  if (v.empty()) throw std::invalid_argument("mse_epsilon2: empty batch");
  const double n = static_cast<double>(v.size());
  double acc = 0.0;
  std::size_t j = 0;
  while (j < v.size()) {
    std::size_t end = j + 1;
    while (end < v.size() && v[end] == v[j]) ++end;
    const double emp = static_cast<double>(end) / n;
    const double d = emp - model_cdf(v[j]);
    acc += d * d * static_cast<double>(end - j);
    j = end;
  }
  return acc / n;
}

inline double mse_epsilon2(const SampleBatch& batch, const ApproximantCurve& curve) {
  return mse_epsilon2(batch, [&](double x) { return curve.cdf(x); });
}

struct CcdfRow {
  double x = 0.0;
  double model = 0.0;
  double empirical = 0.0;
  double gap = 0.0;
};

struct DecadeRow {
  int decade = 0;           // empirical CCDF in (10^{-(d+1)}, 10^{-d}]
  std::size_t points = 0;
  double max_gap = 0.0;
};

struct AccuracyReport {
  double mse = 0.0;
  double max_ccdf_gap = 0.0;
  double max_gap_at = 0.0;
  std::vector<CcdfRow> rows;
  std::vector<DecadeRow> decades;
};

/// n log-spaced points between lo and hi (inclusive).
inline std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0) || !(hi > lo) || n < 2) throw std::invalid_argument("log_grid: need 0 < lo < hi, n >= 2");
  std::vector<double> g(n);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int i = 0; i < n; ++i) g[i] = std::exp(a + (b - a) * i / (n - 1));
  return g;
}

/// Grid spanning the sample between empirical CDF = tail and empirical CCDF = tail.
inline std::vector<double> default_ccdf_grid(const SampleBatch& batch, double tail = 1e-4, int n = 200) {
  const auto& v = batch.values;
  if (v.size() < 2) throw std::invalid_argument("default_ccdf_grid: need at least two samples");
  const auto idx = [&](double f) {
    return std::min(v.size() - 1, static_cast<std::size_t>(f * static_cast<double>(v.size())));
  };
  return log_grid(v[idx(tail)], v[idx(1.0 - tail)], n);
}

template <class Ccdf>
  requires std::invocable<Ccdf, double>
AccuracyReport ccdf_compare(const SampleBatch& batch, Ccdf&& model_ccdf, const std::vector<double>& grid) {
  if (batch.values.empty()) throw std::invalid_argument("ccdf_compare: empty batch");
  AccuracyReport report;
  for (double x : grid) {
    CcdfRow row{x, model_ccdf(x), empirical_ccdf(batch, x), 0.0};
    row.gap = std::abs(row.model - row.empirical);
    if (row.gap > report.max_ccdf_gap) {
      report.max_ccdf_gap = row.gap;
      report.max_gap_at = x;
    }
    if (row.empirical > 0) {
      const int d = static_cast<int>(std::floor(-std::log10(row.empirical)));
      if (report.decades.size() <= static_cast<std::size_t>(d)) report.decades.resize(d + 1);
      auto& dec = report.decades[d];
      dec.decade = d;
      ++dec.points;
      dec.max_gap = std::max(dec.max_gap, row.gap);
    }
    report.rows.push_back(row);
  }
  for (std::size_t d = 0; d < report.decades.size(); ++d) report.decades[d].decade = static_cast<int>(d);
  return report;
}

inline AccuracyReport ccdf_compare(const SampleBatch& batch, const ApproximantCurve& curve,
                                   const std::vector<double>& grid) {
  auto report = ccdf_compare(batch, [&](double x) { return curve.ccdf(x); }, grid);
  report.mse = mse_epsilon2(batch, curve);
  return report;
}

/// CSV export: header `# <spec-hash> <seed> <n>`, then one value per line.
inline void write_batch_csv(std::ostream& os, const SampleBatch& batch) {
  os << "# " << std::hex << std::setw(16) << std::setfill('0') << batch.spec_hash << std::dec
     << std::setfill(' ') << ' ' << batch.seed << ' ' << batch.n << '\n';
  char buf[32];
  for (double v : batch.values) {
    std::snprintf(buf, sizeof buf, "%.17g\n", v);
    os << buf;
  }
}

inline SampleBatch read_batch_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# ", 0) != 0) {
    throw std::runtime_error("read_batch_csv: missing '# spec-hash seed n' header");
  }
  SampleBatch batch;
  {
    std::istringstream hs(line.substr(2));
    std::string hash;
    if (!(hs >> hash >> batch.seed >> batch.n)) {
      throw std::runtime_error("read_batch_csv: malformed header: " + line);
    }
    batch.spec_hash = std::stoull(hash, nullptr, 16);
  }
  batch.values.reserve(batch.n);
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      batch.values.push_back(std::stod(line));
    } catch (const std::exception&) {
      throw std::runtime_error("read_batch_csv: bad value on line " + std::to_string(lineno));
    }
  }
  if (batch.values.size() != batch.n) {
    throw std::runtime_error("read_batch_csv: header declares " + std::to_string(batch.n) +
                             " values, found " + std::to_string(batch.values.size()));
  }
  if (!std::is_sorted(batch.values.begin(), batch.values.end())) {
    std::sort(batch.values.begin(), batch.values.end());
  }
  return batch;
}

}  // namespace lnorth
