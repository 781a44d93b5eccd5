#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>

#include "mrpeval/types.hpp"

namespace mrpeval {

// Stateless avalanche mix (the splitmix64 finalizer: xor-shift 30/27/31 with
// multipliers 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB). Trajectory l of a
// dataset with master seed s is generated from an independent splitmix64
// stream seeded with replica_seed(s, l), so generation order and thread count
// cannot change the output.
std::uint64_t avalanche64(std::uint64_t x);
std::uint64_t replica_seed(std::uint64_t master_seed, std::uint64_t index);

struct TrajectoryView {
  std::span<const std::int32_t> states;
  bool escaped = false;
  std::optional<std::int64_t> escape_time;  // set iff escaped; equals len - 1
};

// Flat storage: trajectory l is states[offsets[l] .. offsets[l+1]).
// Every state before the last lies in D; an escaped trajectory ends at its
// first state outside D.
struct TrajectoryDataset {
  static constexpr std::int64_t kTauInfinity = -1;

  int n = 0;
  std::vector<std::int32_t> states;
  std::vector<std::uint64_t> offsets;   // size M + 1
  std::vector<std::uint8_t> escaped;    // size M
  std::vector<std::int64_t> counts;     // per-state initial-state counts M_i
  std::uint64_t master_seed = 0;
  std::int64_t tau = 0;                 // kTauInfinity for until-escape data
  std::int64_t unfinished = 0;          // trajectories that hit the step cap

  std::size_t size() const { return offsets.empty() ? 0 : offsets.size() - 1; }
  TrajectoryView traj(std::size_t l) const;
};

// M independent trajectories truncated at lag tau: X_0 ~ mu by inverse CDF in
// state order, steps by the rows of P, stopping early on escape from D.
TrajectoryDataset sample_dataset(const Mrp& m, std::int64_t M, int tau,
                                 std::uint64_t master_seed, int threads = 1);

// Trajectories run until escape, or until cap steps, in which case they are
// flagged unfinished (and counted in TrajectoryDataset::unfinished).
TrajectoryDataset sample_until_escape(const Mrp& m, std::int64_t M,
                                      std::uint64_t master_seed,
                                      std::int64_t cap = 100000000,
                                      int threads = 1);

// Expected escape time under mu, used by the CLI to sanity-check caps.
double expected_escape_time(const Mrp& m);

// Text form: "# key=value" header lines (n, M, tau, master_seed) followed by
// one comma-separated line of 1-based states per trajectory.
void write_dataset(const TrajectoryDataset& ds, std::ostream& out);
TrajectoryDataset read_dataset(std::istream& in, const Mrp& m);

}  // namespace mrpeval
