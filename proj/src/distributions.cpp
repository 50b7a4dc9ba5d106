#include "cookiewalk/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace cookiewalk {

JumpDistribution JumpDistribution::make(
    const std::vector<std::pair<int64_t, double>>& atoms) {
  if (atoms.empty()) throw std::invalid_argument("distribution needs at least one atom");

  // Merge duplicate offsets by summing, sorting as a side effect.
  std::map<int64_t, double> merged;
  for (const auto& [z, p] : atoms) {
    if (!(p > 0.0) || !std::isfinite(p))
      throw std::invalid_argument("atom probabilities must be positive and finite");
    merged[z] += p;
  }

  long double sum = 0.0L;
  for (const auto& [z, p] : merged) sum += p;
  if (std::abs(static_cast<double>(sum) - 1.0) > 1e-9)
    throw std::invalid_argument("atom probabilities must sum to 1 within 1e-9");

  JumpDistribution d;
  d.atoms_.reserve(merged.size());
  // Skip renormalization when the mass is already 1 to the last ulp, so
  // rebuilding a distribution from its own atoms is exactly idempotent.
  const bool renormalize =
      std::abs(static_cast<double>(sum) - 1.0) >
      4.0 * std::numeric_limits<double>::epsilon();
  for (const auto& [z, p] : merged) {
    const double q = renormalize ? static_cast<double>(p / sum) : p;
    d.atoms_.push_back({z, q});
  }

  long double mean = 0.0L, cum = 0.0L;
  d.cdf_.reserve(d.atoms_.size());
  for (const auto& a : d.atoms_) {
    mean += static_cast<long double>(a.offset) * a.prob;
    cum += a.prob;
    d.cdf_.push_back(static_cast<double>(cum));
  }
  d.mean_ = static_cast<double>(mean);
  return d;
}

JumpDistribution JumpDistribution::point(int64_t offset) {
  return make({{offset, 1.0}});
}

JumpDistribution JumpDistribution::symmetric_pm1() {
  return make({{-1, 0.5}, {1, 0.5}});
}

int64_t JumpDistribution::sample(Rng& rng) const {
  const double u = rng.u01();
  // Supports are tiny (a handful of atoms), so a linear cdf scan wins.
  for (size_t i = 0; i + 1 < cdf_.size(); ++i)
    if (u < cdf_[i]) return atoms_[i].offset;
  return atoms_.back().offset;
}

double JumpDistribution::prob_at(int64_t offset) const {
  auto it = std::lower_bound(
      atoms_.begin(), atoms_.end(), offset,
      [](const Atom& a, int64_t z) { return a.offset < z; });
  return (it != atoms_.end() && it->offset == offset) ? it->prob : 0.0;
}

double JumpDistribution::mass_at_least(int64_t offset) const {
  double m = 0.0;
  for (const auto& a : atoms_)
    if (a.offset >= offset) m += a.prob;
  return m;
}

double JumpDistribution::mass_at_most(int64_t offset) const {
  double m = 0.0;
  for (const auto& a : atoms_)
    if (a.offset <= offset) m += a.prob;
  return m;
}

double JumpDistribution::abs_moment() const {
  long double m = 0.0L;
  for (const auto& a : atoms_)
    m += static_cast<long double>(std::llabs(a.offset)) * a.prob;
  return static_cast<double>(m);
}

int64_t JumpDistribution::max_abs_offset() const {
  return std::max(std::llabs(min_offset()), std::llabs(max_offset()));
}

int64_t JumpDistribution::support_span() const {
  if (atoms_.size() < 2)
    throw std::domain_error("support span undefined for a single-atom distribution");
  int64_t g = 0;
  for (size_t i = 1; i < atoms_.size(); ++i)
    g = std::gcd(g, atoms_[i].offset - atoms_[0].offset);
  return g;
}

int64_t JumpDistribution::reachable_lattice_gcd() const {
  int64_t g = 0;
  for (const Atom& a : atoms_) g = std::gcd(g, a.offset);
  return g;
}

}  // namespace cookiewalk
