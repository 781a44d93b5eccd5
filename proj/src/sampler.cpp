#include "mrpeval/sampler.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>

#include "mrpeval/chains.hpp"
#include "mrpeval/exact.hpp"

namespace mrpeval {

std::uint64_t avalanche64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

std::uint64_t replica_seed(std::uint64_t master_seed, std::uint64_t index) {
  return avalanche64(master_seed + (index + 1) * 0x9E3779B97F4A7C15ULL);
}

TrajectoryView TrajectoryDataset::traj(std::size_t l) const {
  TrajectoryView v;
  const std::size_t lo = offsets[l];
  const std::size_t hi = offsets[l + 1];
  v.states = std::span<const std::int32_t>(states.data() + lo, hi - lo);
  v.escaped = escaped[l] != 0;
  if (v.escaped) v.escape_time = static_cast<std::int64_t>(hi - lo) - 1;
  return v;
}

namespace {

// splitmix64 stream: a golden-ratio counter fed through the avalanche finalizer.
// Cheap per-trajectory construction; one stream per trajectory keeps the
// output independent of generation order.
struct SplitMix {
  std::uint64_t state;
  explicit SplitMix(std::uint64_t s) : state(s) {}
  std::uint64_t operator()() { return avalanche64(state += 0x9E3779B97F4A7C15ULL); }
};

struct RowCdf {
  std::vector<double> cum;
  int last_positive = 0;
};

RowCdf make_cdf(const double* row, int n) {
  RowCdf c;
  c.cum.resize(static_cast<size_t>(n));
  double acc = 0.0;
  for (int j = 0; j < n; ++j) {
    acc += row[j];
    c.cum[static_cast<size_t>(j)] = acc;
    if (row[j] > 0.0) c.last_positive = j;
  }
  return c;
}

int draw(const RowCdf& c, SplitMix& g) {
  const double u = static_cast<double>(g() >> 11) * 0x1.0p-53;
  const auto it = std::upper_bound(c.cum.begin(), c.cum.end(), u);
  if (it == c.cum.end()) return c.last_positive;
  return static_cast<int>(it - c.cum.begin());
}

struct ChunkOut {
  std::vector<std::int32_t> states;
  std::vector<std::uint64_t> lens;
  std::vector<std::uint8_t> escaped;
  std::int64_t unfinished = 0;
};

// limit: maximum number of steps from X_0 (tau, or the cap for until-escape).
void generate_range(const Mrp& m, const RowCdf& mu_cdf, const std::vector<RowCdf>& row_cdfs,
                    std::int64_t lo, std::int64_t hi, std::uint64_t master_seed,
                    std::int64_t limit, bool until_escape, ChunkOut& out) {
  out.lens.reserve(static_cast<size_t>(hi - lo));
  out.escaped.reserve(static_cast<size_t>(hi - lo));
  for (std::int64_t l = lo; l < hi; ++l) {
    SplitMix g(replica_seed(master_seed, static_cast<std::uint64_t>(l)));
    int x = draw(mu_cdf, g);
    std::uint64_t len = 1;
    out.states.push_back(static_cast<std::int32_t>(x));
    std::int64_t steps = 0;
    while (m.D.contains(x) && steps < limit) {
      x = draw(row_cdfs[static_cast<size_t>(x)], g);
      out.states.push_back(static_cast<std::int32_t>(x));
      ++len;
      ++steps;
    }
    const bool esc = !m.D.contains(x);
    out.lens.push_back(len);
    out.escaped.push_back(esc ? 1 : 0);
    if (until_escape && !esc) ++out.unfinished;
  }
}

TrajectoryDataset run_sampler(const Mrp& m, std::int64_t M, std::int64_t limit,
                              bool until_escape, std::uint64_t master_seed, int threads) {
  if (M < 0) throw ConfigError("sample: trajectory count must be nonnegative");
  if (limit < 1) throw ConfigError("sample: step limit must be positive");
  m.validate();

  const RowCdf mu_cdf = make_cdf(m.mu.data(), m.n);
  std::vector<RowCdf> row_cdfs;
  row_cdfs.reserve(static_cast<size_t>(m.n));
  for (int i = 0; i < m.n; ++i) row_cdfs.push_back(make_cdf(m.P.row(i).data(), m.n));

  const int nchunks = static_cast<int>(std::clamp<std::int64_t>(threads, 1, std::max<std::int64_t>(M, 1)));
  std::vector<ChunkOut> chunks(static_cast<size_t>(nchunks));
  std::vector<std::thread> workers;
  const std::int64_t per = (M + nchunks - 1) / nchunks;
  for (int c = 0; c < nchunks; ++c) {
    const std::int64_t lo = std::min<std::int64_t>(static_cast<std::int64_t>(c) * per, M);
    const std::int64_t hi = std::min<std::int64_t>(lo + per, M);
    if (nchunks == 1) {
      generate_range(m, mu_cdf, row_cdfs, lo, hi, master_seed, limit, until_escape,
                     chunks[static_cast<size_t>(c)]);
    } else {
      workers.emplace_back(generate_range, std::cref(m), std::cref(mu_cdf), std::cref(row_cdfs),
                           lo, hi, master_seed, limit, until_escape,
                           std::ref(chunks[static_cast<size_t>(c)]));
    }
  }
  for (auto& w : workers) w.join();

  TrajectoryDataset ds;
  ds.n = m.n;
  ds.master_seed = master_seed;
  ds.tau = until_escape ? TrajectoryDataset::kTauInfinity : limit;
  ds.offsets.reserve(static_cast<size_t>(M) + 1);
  ds.offsets.push_back(0);
  ds.counts.assign(static_cast<size_t>(m.n), 0);
  std::size_t total = 0;
  for (const auto& c : chunks) total += c.states.size();
  ds.states.reserve(total);
  ds.escaped.reserve(static_cast<size_t>(M));
  for (const auto& c : chunks) {
    ds.states.insert(ds.states.end(), c.states.begin(), c.states.end());
    ds.escaped.insert(ds.escaped.end(), c.escaped.begin(), c.escaped.end());
    for (const std::uint64_t len : c.lens) ds.offsets.push_back(ds.offsets.back() + len);
    ds.unfinished += c.unfinished;
  }
  for (std::size_t l = 0; l < ds.size(); ++l) {
    ++ds.counts[static_cast<size_t>(ds.states[ds.offsets[l]])];
  }
  return ds;
}

}  // namespace

TrajectoryDataset sample_dataset(const Mrp& m, std::int64_t M, int tau,
                                 std::uint64_t master_seed, int threads) {
  return run_sampler(m, M, tau, false, master_seed, threads);
}

TrajectoryDataset sample_until_escape(const Mrp& m, std::int64_t M,
                                      std::uint64_t master_seed, std::int64_t cap,
                                      int threads) {
  return run_sampler(m, M, cap, true, master_seed, threads);
}

double expected_escape_time(const Mrp& m) {
  const Vector u = solve_value(with_mfpt_reward(m), 1, Quantity::mfpt).u;
  return m.mu.dot(u);
}

void write_dataset(const TrajectoryDataset& ds, std::ostream& out) {
  out << "# n=" << ds.n << "\n";
  out << "# M=" << ds.size() << "\n";
  if (ds.tau == TrajectoryDataset::kTauInfinity) {
    out << "# tau=inf\n";
  } else {
    out << "# tau=" << ds.tau << "\n";
  }
  out << "# master_seed=" << ds.master_seed << "\n";
  for (std::size_t l = 0; l < ds.size(); ++l) {
    const auto tv = ds.traj(l);
    for (std::size_t k = 0; k < tv.states.size(); ++k) {
      if (k) out << ',';
      out << tv.states[k] + 1;
    }
    out << "\n";
  }
}

namespace {

std::string trimmed(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

TrajectoryDataset read_dataset(std::istream& in, const Mrp& m) {
  TrajectoryDataset ds;
  ds.n = 0;
  std::int64_t expect_m = -1;
  bool have_tau = false;
  ds.offsets.push_back(0);
  ds.counts.assign(static_cast<size_t>(m.n), 0);

  std::string line;
  while (std::getline(in, line)) {
    std::string s = trimmed(line);
    if (s.empty()) continue;
    if (s[0] == '#') {
      s = trimmed(s.substr(1));
      const auto eq = s.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = trimmed(s.substr(0, eq));
      const std::string val = trimmed(s.substr(eq + 1));
      try {
        if (key == "n") {
          ds.n = std::stoi(val);
        } else if (key == "M") {
          expect_m = std::stoll(val);
        } else if (key == "tau") {
          ds.tau = (val == "inf") ? TrajectoryDataset::kTauInfinity : std::stoll(val);
          have_tau = true;
        } else if (key == "master_seed") {
          ds.master_seed = std::stoull(val);
        }
      } catch (const std::exception&) {
        throw ConfigError("read_dataset: bad header value for " + key);
      }
      continue;
    }
    std::stringstream ss(s);
    std::string tok;
    std::uint64_t len = 0;
    int last = -1;
    while (std::getline(ss, tok, ',')) {
      int v = 0;
      try {
        v = std::stoi(trimmed(tok));
      } catch (const std::exception&) {
        throw ConfigError("read_dataset: bad state token '" + tok + "'");
      }
      if (v < 1 || v > m.n) throw ConfigError("read_dataset: state out of range");
      last = v - 1;
      if (len > 0 && !m.D.contains(ds.states.back())) {
        throw ConfigError("read_dataset: trajectory continues past escape");
      }
      ds.states.push_back(static_cast<std::int32_t>(last));
      ++len;
    }
    if (len == 0) throw ConfigError("read_dataset: empty trajectory line");
    ds.offsets.push_back(ds.offsets.back() + len);
    const bool esc = !m.D.contains(last);
    ds.escaped.push_back(esc ? 1 : 0);
    ++ds.counts[static_cast<size_t>(ds.states[ds.offsets[ds.offsets.size() - 2]])];
  }

  if (ds.n != m.n) throw ConfigError("read_dataset: header n does not match the chain");
  if (!have_tau) throw ConfigError("read_dataset: missing tau header");
  if (expect_m >= 0 && static_cast<std::int64_t>(ds.size()) != expect_m) {
    throw ConfigError("read_dataset: trajectory count does not match header M");
  }
  if (ds.tau == TrajectoryDataset::kTauInfinity) {
    for (const auto e : ds.escaped) {
      if (!e) ++ds.unfinished;
    }
  } else {
    if (ds.tau < 1) throw ConfigError("read_dataset: tau must be positive or inf");
    for (std::size_t l = 0; l < ds.size(); ++l) {
      if (ds.offsets[l + 1] - ds.offsets[l] > static_cast<std::uint64_t>(ds.tau) + 1) {
        throw ConfigError("read_dataset: trajectory longer than tau + 1 states");
      }
    }
  }
  return ds;
}

}  // namespace mrpeval
