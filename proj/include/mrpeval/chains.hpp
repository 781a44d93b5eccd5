#pragma once

#include <iosfwd>
#include <string>

#include "mrpeval/types.hpp"

namespace mrpeval {

enum class Family { bistable, lazy_bistable };
enum class MuMode { uniform_on_d, invariant_conditioned };

const char* to_string(Family f);
const char* to_string(MuMode m);

// Description of a member of the built-in chain family.
struct ChainSpec {
  Family family = Family::bistable;
  int n = 0;
  double laziness_denominator = 2.0;  // 2 for the standard chain, 10 for the lazy one
  MuMode mu_mode = MuMode::uniform_on_d;

  // Parses "key=value" lines (keys: family, n, laziness_denominator, mu_mode;
  // '#' starts a comment). Throws ConfigError on unknown keys or bad values.
  static ChainSpec parse(std::istream& in);
  static ChainSpec parse_string(const std::string& text);

  std::string to_config() const;
  void validate() const;
};

// p(i) proportional to exp[(n-1)/(4 pi) cos(4 pi (i-1)/(n-1))], i = 1..n,
// evaluated in log domain with max subtraction, normalized to sum 1.
Vector invariant_distribution(int n);

// Nearest-neighbor chain P(i, i+-1) = p(i+-1) / (denom (p(i) + p(i+-1))) on the
// interior, rows 1 and n completed to self loops. D is the interior; mu is
// uniform on D or the invariant distribution conditioned on D.
Mrp build_chain(const ChainSpec& spec);

// Reward selectors: unit reward on D (mean escape time), or the indicator of
// the right boundary state (committor of reaching n before 1).
Mrp with_mfpt_reward(Mrp m);
Mrp with_committor_reward(Mrp m);

}  // namespace mrpeval
