#pragma once

// Run configuration (key=value files and flag overrides) and the CSV formats
// shared by the CLI: coefficient tables, exported approximant curves.

#include "lnorth/density_approx.hpp"
#include "lnorth/nakagami.hpp"
#include "lnorth/precision.hpp"

#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lnorth {

inline constexpr const char* kVersion = "lnorth 0.1.0";

/// Configuration error with the offending key (and line, when read from a file).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using ConfigMap = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Keys accepted in config files and as --flags.
inline const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = {
      "K",     "m",    "omega", "rho",  "lambda", "degree", "samples", "seed",
      "bits",  "nodes", "grid", "out",  "oracle", "clip-negative-pdf", "mu", "sigma2",
      "batch-in", "batch-out", "model-in"};
  return keys;
}

/// Parses `key = value` lines; '#' starts a comment.
inline ConfigMap parse_config_text(std::istream& is) {
  ConfigMap out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value, got '" +
                        line + "'");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    bool known = false;
    for (const auto& k : known_config_keys()) known = known || k == key;
    if (!known) {
      throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    out[key] = value;
  }
  return out;
}

struct GridSpec {
  double min = 0.0;
  double max = 0.0;
  int count = 0;
};

struct RunConfig {
  std::string command;
  std::vector<int> K{6};
  std::vector<double> m{4.0};
  std::vector<double> omega{1.0};
  std::optional<std::vector<double>> rho;
  std::optional<std::vector<double>> lambda;
  int degree = 16;
  std::size_t samples = 1000000;
  std::uint64_t seed = 1;
  PrecisionConfig precision;
  std::optional<GridSpec> grid;
  std::string out;
  bool oracle = false;
  bool clip_negative_pdf = false;
  double mu = 0.0;
  std::optional<double> sigma2;
  std::string batch_in;
  std::string batch_out;
  std::string model_in;

  /// Spec for one (K, m, rho-or-lambda) combination.
  NakagamiProductSpec spec(int k, double m_value, std::optional<double> rho_value) const {
    NakagamiProductSpec s;
    s.m.assign(k, m_value);
    if (omega.size() == 1) {
      s.omega.assign(k, omega.front());
    } else if (static_cast<int>(omega.size()) == k) {
      s.omega = omega;
    } else {
      throw ConfigError("omega: expected 1 or K=" + std::to_string(k) + " values, got " +
                        std::to_string(omega.size()));
    }
    if (rho_value) {
      s = NakagamiProductSpec::equicorrelated(k, m_value, 1.0, *rho_value);
      s.omega = omega.size() == 1 ? std::vector<double>(k, omega.front()) : omega;
    } else if (lambda) {
      if (lambda->size() == 1) {
        s.lambda.assign(k, lambda->front());
      } else if (static_cast<int>(lambda->size()) == k) {
        s.lambda = *lambda;
      } else {
        throw ConfigError("lambda: expected 1 or K=" + std::to_string(k) + " values");
      }
    } else {
      s.lambda.assign(k, 0.0);
    }
    s.validate();
    return s;
  }

  /// The single spec for commands that take one operating point.
  NakagamiProductSpec single_spec() const {
    if (K.size() != 1 || m.size() != 1 || (rho && rho->size() != 1)) {
      throw ConfigError(command + ": K, m and rho must be single values");
    }
    return spec(K.front(), m.front(),
                rho ? std::optional<double>(rho->front()) : std::optional<double>());
  }
};

namespace detail {

template <class V>
V parse_number(const std::string& key, const std::string& text) {
  std::istringstream is(text);
  V v{};
  is >> v;
  if (is.fail() || !is.eof()) {
    // allow trailing whitespace only
    std::string rest;
    if (is.fail() || (is.clear(), is >> rest, !rest.empty())) {
      throw ConfigError(key + ": cannot parse '" + text + "'");
    }
  }
  return v;
}

template <class V>
std::vector<V> parse_list(const std::string& key, const std::string& text) {
  std::vector<V> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError(key + ": empty list element in '" + text + "'");
    out.push_back(parse_number<V>(key, item));
  }
  if (out.empty()) throw ConfigError(key + ": empty value");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text.empty() || text == "1" || text == "true" || text == "yes" || text == "on") return true;
  if (text == "0" || text == "false" || text == "no" || text == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + text + "'");
}

}  // namespace detail

inline GridSpec parse_grid(const std::string& text) {
  // min:max:count, optionally suffixed with "log"
  std::string body = text;
  if (body.size() >= 3 && body.compare(body.size() - 3, 3, "log") == 0) body.resize(body.size() - 3);
  std::vector<std::string> parts;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(detail::trim(item));
  if (parts.size() != 3) throw ConfigError("grid: expected min:max:count, got '" + text + "'");
  GridSpec g{detail::parse_number<double>("grid", parts[0]),
             detail::parse_number<double>("grid", parts[1]),
             detail::parse_number<int>("grid", parts[2])};
  if (!(g.min > 0)) throw ConfigError("grid: min must be positive");
  if (!(g.max > g.min)) throw ConfigError("grid: max must exceed min");
  if (g.count < 2) throw ConfigError("grid: count must be >= 2");
  return g;
}

/// Overlays command-line settings on file settings. A correlation given on the
/// command line (rho or lambda) replaces either form from the file.
inline ConfigMap merge_config(ConfigMap file, const ConfigMap& flags) {
  if (flags.count("rho") || flags.count("lambda")) {
    file.erase("rho");
    file.erase("lambda");
  }
  for (const auto& [k, v] : flags) file[k] = v;
  return file;
}

/// Builds a RunConfig from merged key/value settings (file values overlaid by flags).
inline RunConfig resolve_run_config(const std::string& command, const ConfigMap& kv) {
  RunConfig c;
  c.command = command;
  auto get = [&](const char* key) -> const std::string* {
    const auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  using detail::parse_list;
  using detail::parse_number;
  if (auto v = get("K")) c.K = parse_list<int>("K", *v);
  if (auto v = get("m")) c.m = parse_list<double>("m", *v);
  if (auto v = get("omega")) c.omega = parse_list<double>("omega", *v);
  if (auto v = get("rho")) c.rho = parse_list<double>("rho", *v);
  if (auto v = get("lambda")) c.lambda = parse_list<double>("lambda", *v);
  if (auto v = get("degree")) c.degree = parse_number<int>("degree", *v);
  if (auto v = get("samples")) {
    const double s = parse_number<double>("samples", *v);  // accepts 1e6
    if (!(s >= 1) || s != static_cast<double>(static_cast<std::size_t>(s))) {
      throw ConfigError("samples: expected a positive integer, got '" + *v + "'");
    }
    c.samples = static_cast<std::size_t>(s);
  }
  if (auto v = get("seed")) c.seed = parse_number<std::uint64_t>("seed", *v);
  if (auto v = get("bits")) c.precision.working_bits = parse_number<int>("bits", *v);
  if (auto v = get("nodes")) c.precision.quadrature_nodes = parse_number<int>("nodes", *v);
  if (auto v = get("grid")) c.grid = parse_grid(*v);
  if (auto v = get("out")) c.out = *v;
  if (auto v = get("oracle")) c.oracle = detail::parse_bool("oracle", *v);
  if (auto v = get("clip-negative-pdf")) c.clip_negative_pdf = detail::parse_bool("clip-negative-pdf", *v);
  if (auto v = get("mu")) c.mu = parse_number<double>("mu", *v);
  if (auto v = get("sigma2")) c.sigma2 = parse_number<double>("sigma2", *v);
  if (auto v = get("batch-in")) c.batch_in = *v;
  if (auto v = get("batch-out")) c.batch_out = *v;
  if (auto v = get("model-in")) c.model_in = *v;

  if (c.rho && c.lambda) throw ConfigError("rho and lambda are mutually exclusive; give one");
  if (c.degree < 0) throw ConfigError("degree: must be non-negative");
  if (command != "model-export" && command != "poly" && c.degree < 1) {
    throw ConfigError("degree: must be >= 1");
  }
  try {
    c.precision.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  for (int k : c.K) {
    if (k < 1) throw ConfigError("K: must be >= 1");
  }
  if (c.rho) {
    for (double r : *c.rho) {
      if (!(r >= 0.0 && r < 1.0)) throw ConfigError("rho: must lie in [0, 1)");
    }
  }
  if (command == "poly") {
    if (!c.sigma2) throw ConfigError("poly: sigma2 is required");
    if (!(*c.sigma2 > 0)) {
      throw ConfigError("sigma2 must be positive: sigma2 = 0 makes the lognormal a degenerate point mass");
    }
  }
  return c;
}

/// Canonical `key=value` rendering of a resolved config, for CSV provenance headers.
inline std::string describe(const RunConfig& c) {
  std::ostringstream os;
  os.precision(17);
  auto list = [&](const auto& v) {
    std::ostringstream ls;
    ls.precision(17);
    for (std::size_t i = 0; i < v.size(); ++i) ls << (i ? "," : "") << v[i];
    return ls.str();
  };
  os << "command=" << c.command << " K=" << list(c.K) << " m=" << list(c.m)
     << " omega=" << list(c.omega);
  if (c.rho) os << " rho=" << list(*c.rho);
  if (c.lambda) os << " lambda=" << list(*c.lambda);
  os << " degree=" << c.degree << " samples=" << c.samples << " seed=" << c.seed
     << " bits=" << c.precision.working_bits << " nodes=" << c.precision.quadrature_nodes;
  if (c.grid) os << " grid=" << c.grid->min << ':' << c.grid->max << ':' << c.grid->count;
  if (c.sigma2) os << " mu=" << c.mu << " sigma2=" << *c.sigma2;
  if (c.oracle) os << " oracle=1";
  if (c.clip_negative_pdf) os << " clip-negative-pdf=1";
  return os.str();
}

inline void write_provenance(std::ostream& os, const RunConfig& c) {
  os << "# " << kVersion << '\n' << "# config: " << describe(c) << '\n';
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Model CSV: `mu,sigma,N` header + values, then `i,xi_nu` rows.
inline void write_model_csv(std::ostream& os, const ApproximantCurve& c) {
  os << "mu,sigma,N\n"
     << format_double(c.mu) << ',' << format_double(c.sigma) << ',' << c.degree() << '\n'
     << "i,xi_nu\n";
  for (std::size_t i = 0; i < c.xinu.size(); ++i) os << i << ',' << format_double(c.xinu[i]) << '\n';
}

inline ApproximantCurve read_model_csv(std::istream& is) {
  std::string line;
  auto next = [&]() -> bool {
    while (std::getline(is, line)) {
      line = detail::trim(line);
      if (!line.empty() && line.front() != '#') return true;
    }
    return false;
  };
  if (!next() || line != "mu,sigma,N") throw std::runtime_error("model csv: expected 'mu,sigma,N' header");
  if (!next()) throw std::runtime_error("model csv: missing parameter row");
  ApproximantCurve c;
  int n = 0;
  {
    std::stringstream ss(line);
    std::string a, b, d;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, d, ',')) {
      throw std::runtime_error("model csv: malformed parameter row '" + line + "'");
    }
    c.mu = std::stod(a);
    c.sigma = std::stod(b);
    n = std::stoi(d);
  }
  if (!next() || line != "i,xi_nu") throw std::runtime_error("model csv: expected 'i,xi_nu' header");
  while (next()) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("model csv: malformed row '" + line + "'");
    const int i = std::stoi(line.substr(0, comma));
    if (i != static_cast<int>(c.xinu.size())) throw std::runtime_error("model csv: rows out of order");
    c.xinu.push_back(std::stod(line.substr(comma + 1)));
  }
  if (static_cast<int>(c.xinu.size()) != n + 1) {
    throw std::runtime_error("model csv: expected " + std::to_string(n + 1) + " coefficient rows");
  }
  if (!(c.sigma > 0)) throw std::runtime_error("model csv: sigma must be positive");
  return c;
}

/// Maximum CCDF gap the light-fading results claim for a given (m, rho), if any.
inline std::optional<double> claimed_gap_threshold(double m, double rho) {
  if (m < 4.0) return std::nullopt;
  if (rho <= 0.1) return 1e-3;
  if (rho <= 0.5) return 1e-2;
  return std::nullopt;
}

}  // namespace lnorth
