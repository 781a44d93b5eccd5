#include "mrpeval/chains.hpp"

#include <cmath>
#include <istream>
#include <numbers>
#include <sstream>

namespace mrpeval {

const char* to_string(Family f) {
  return f == Family::bistable ? "bistable" : "lazy-bistable";
}

const char* to_string(MuMode m) {
  return m == MuMode::uniform_on_d ? "uniform" : "invariant";
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  const auto b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

Family parse_family(const std::string& v) {
  if (v == "bistable") return Family::bistable;
  if (v == "lazy-bistable" || v == "lazy_bistable") return Family::lazy_bistable;
  throw ConfigError("ChainSpec: unknown family '" + v + "'");
}

MuMode parse_mu_mode(const std::string& v) {
  if (v == "uniform" || v == "uniform-on-D") return MuMode::uniform_on_d;
  if (v == "invariant" || v == "invariant-conditioned-on-D") return MuMode::invariant_conditioned;
  throw ConfigError("ChainSpec: unknown mu_mode '" + v + "'");
}

}  // namespace

ChainSpec ChainSpec::parse(std::istream& in) {
  ChainSpec spec;
  bool have_family = false, have_n = false, have_denom = false;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("ChainSpec: expected key=value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "family") {
      spec.family = parse_family(val);
      have_family = true;
    } else if (key == "n") {
      try {
        size_t pos = 0;
        spec.n = std::stoi(val, &pos);
        if (pos != val.size()) throw std::invalid_argument(val);
      } catch (const std::exception&) {
        throw ConfigError("ChainSpec: bad n '" + val + "'");
      }
      have_n = true;
    } else if (key == "laziness_denominator") {
      try {
        size_t pos = 0;
        spec.laziness_denominator = std::stod(val, &pos);
        if (pos != val.size()) throw std::invalid_argument(val);
      } catch (const std::exception&) {
        throw ConfigError("ChainSpec: bad laziness_denominator '" + val + "'");
      }
      have_denom = true;
    } else if (key == "mu_mode") {
      spec.mu_mode = parse_mu_mode(val);
    } else {
      throw ConfigError("ChainSpec: unknown key '" + key + "'");
    }
  }
  if (!have_family || !have_n) throw ConfigError("ChainSpec: family and n are required");
  if (!have_denom) {
    spec.laziness_denominator = spec.family == Family::lazy_bistable ? 10.0 : 2.0;
  }
  spec.validate();
  return spec;
}

ChainSpec ChainSpec::parse_string(const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

std::string ChainSpec::to_config() const {
  std::ostringstream out;
  out << "family=" << to_string(family) << "\n";
  out << "n=" << n << "\n";
  out << "laziness_denominator=" << laziness_denominator << "\n";
  out << "mu_mode=" << (mu_mode == MuMode::uniform_on_d ? "uniform-on-D" : "invariant-conditioned-on-D")
      << "\n";
  return out.str();
}

void ChainSpec::validate() const {
  if (n < 4) throw ConfigError("ChainSpec: n must be at least 4");
  if (!(laziness_denominator > 0.0)) throw ConfigError("ChainSpec: laziness_denominator must be positive");
}

Vector invariant_distribution(int n) {
  if (n < 2) throw ConfigError("invariant_distribution: n must be at least 2");
  Vector expo(n);
  const double scale = (n - 1) / (4.0 * std::numbers::pi);
  for (int i = 0; i < n; ++i) {
    expo[i] = scale * std::cos(4.0 * std::numbers::pi * i / (n - 1));
  }
  const double mx = expo.maxCoeff();
  Vector p(n);
  for (int i = 0; i < n; ++i) p[i] = std::exp(expo[i] - mx);
  return p / p.sum();
}

Mrp build_chain(const ChainSpec& spec) {
  spec.validate();
  const int n = spec.n;
  const double denom = spec.laziness_denominator;
  const Vector p = invariant_distribution(n);

  Mrp m;
  m.n = n;
  m.P = Matrix::Zero(n, n);
  // Scaling the denominator-2 rate by 2/denom keeps the lazy chain's
  // off-diagonals exact multiples of the standard chain's.
  const double scale = 2.0 / denom;
  for (int i = 1; i + 1 < n; ++i) {
    const double up = scale * (p[i + 1] / (2.0 * (p[i] + p[i + 1])));
    const double down = scale * (p[i - 1] / (2.0 * (p[i] + p[i - 1])));
    m.P(i, i + 1) = up;
    m.P(i, i - 1) = down;
    m.P(i, i) = 1.0 - up - down;
  }
  m.P(0, 0) = 1.0;
  m.P(n - 1, n - 1) = 1.0;
  m.R = Vector::Zero(n);
  m.D = StateSet::interior(n);

  m.mu = Vector::Zero(n);
  if (spec.mu_mode == MuMode::uniform_on_d) {
    for (int i : m.D.indices()) m.mu[i] = 1.0 / m.D.size();
  } else {
    double mass = 0.0;
    for (int i : m.D.indices()) mass += p[i];
    for (int i : m.D.indices()) m.mu[i] = p[i] / mass;
  }
  m.validate();
  return m;
}

Mrp with_mfpt_reward(Mrp m) {
  m.R = Vector::Zero(m.n);
  for (int i : m.D.indices()) m.R[i] = 1.0;
  return m;
}

Mrp with_committor_reward(Mrp m) {
  m.R = Vector::Zero(m.n);
  m.R[m.n - 1] = 1.0;
  return m;
}

}  // namespace mrpeval
