#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cookiewalk/rng.hpp"

// Finitely-supported integer jump distributions: exact means, cumulative
// sampling, and support diagnostics. Values are immutable after
// construction and safe to share across threads.

namespace cookiewalk {

struct Atom {
  int64_t offset = 0;
  double prob = 0.0;
  bool operator==(const Atom&) const = default;
};

class JumpDistribution {
 public:
  JumpDistribution() = default;  // empty; valid() is false

  // Sorts, merges duplicate offsets, renormalizes. Throws
  // std::invalid_argument on an empty list, a non-positive probability, or
  // a total mass farther than 1e-9 from 1.
  static JumpDistribution make(
      const std::vector<std::pair<int64_t, double>>& atoms);

  static JumpDistribution point(int64_t offset);
  static JumpDistribution symmetric_pm1();

  bool valid() const { return !atoms_.empty(); }
  const std::vector<Atom>& atoms() const { return atoms_; }
  double mean() const { return mean_; }

  int64_t sample(Rng& rng) const;

  double prob_at(int64_t offset) const;
  double mass_at_least(int64_t offset) const;  // P(jump >= offset)
  double mass_at_most(int64_t offset) const;   // P(jump <= offset)
  double abs_moment() const;                   // sum |z| p(z)

  int64_t min_offset() const { return atoms_.front().offset; }
  int64_t max_offset() const { return atoms_.back().offset; }
  int64_t max_abs_offset() const;

  // gcd of pairwise offset differences; 1 means aperiodic support.
  // Throws std::domain_error for a single-atom (degenerate) distribution.
  int64_t support_span() const;

  // gcd of the lattice of positions reachable from a fixed start by
  // repeated jumps: the span of the support together with 0. Equals 1 iff
  // every integer is eventually reachable (irreducibility on the line);
  // {-1,+1} gives 1 while {-2,+2} gives 2. Zero for a point mass at 0.
  int64_t reachable_lattice_gcd() const;

  bool operator==(const JumpDistribution& o) const { return atoms_ == o.atoms_; }

 private:
  std::vector<Atom> atoms_;  // sorted by offset, strictly increasing
  std::vector<double> cdf_;  // running sums aligned with atoms_
  double mean_ = 0.0;
};

}  // namespace cookiewalk
