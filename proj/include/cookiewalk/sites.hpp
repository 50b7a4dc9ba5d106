#pragma once

#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

// Per-site storage for walks over an unbounded, sparsely visited integer
// lattice. Default mode is a hash map. When the caller can bound the hot
// range, set_arena() switches those sites to a dense, epoch-stamped array:
// clear() is then O(#touched) and repeated replicas reuse the allocation.
// Sites outside the arena transparently fall back to the hash map, and
// set_arena() carries already-touched sites into the new storage, so the
// observable behavior never depends on the arena bounds.

namespace cookiewalk {

template <class V>
class SiteTable {
 public:
  SiteTable() = default;

  void set_arena(int64_t lo, int64_t hi) {
    std::vector<std::pair<int64_t, V>> saved;
    saved.reserve(touched_.size());
    for (const int64_t x : touched_)
      if (const V* v = find(x)) saved.emplace_back(x, *v);
    lo_ = lo;
    dense_.assign(static_cast<size_t>(hi - lo + 1), V{});
    stamp_.assign(dense_.size(), 0);
    epoch_ = 1;
    touched_.clear();
    sparse_.clear();
    for (auto& [x, v] : saved) at(x) = std::move(v);
  }

  V& at(int64_t x) {
    if (in_arena(x)) {
      const size_t i = static_cast<size_t>(x - lo_);
      if (stamp_[i] != epoch_) {
        stamp_[i] = epoch_;
        dense_[i] = V{};
        touched_.push_back(x);
      }
      return dense_[i];
    }
    auto [it, inserted] = sparse_.try_emplace(x);
    if (inserted) touched_.push_back(x);
    return it->second;
  }

  // nullptr when the site has not been touched since the last clear().
  const V* find(int64_t x) const {
    if (in_arena(x)) {
      const size_t i = static_cast<size_t>(x - lo_);
      return stamp_[i] == epoch_ ? &dense_[i] : nullptr;
    }
    auto it = sparse_.find(x);
    return it == sparse_.end() ? nullptr : &it->second;
  }

  void clear() {
    ++epoch_;
    touched_.clear();
    sparse_.clear();
  }

  // Sites touched since the last clear(), in first-touch order. Iteration
  // through this list is deterministic regardless of storage mode.
  const std::vector<int64_t>& touched() const { return touched_; }

 private:
  bool in_arena(int64_t x) const {
    return !dense_.empty() && x >= lo_ &&
           x < lo_ + static_cast<int64_t>(dense_.size());
  }

  int64_t lo_ = 0;
  std::vector<V> dense_;
  std::vector<uint32_t> stamp_;
  uint32_t epoch_ = 1;
  std::vector<int64_t> touched_;
  std::unordered_map<int64_t, V> sparse_;
};

}  // namespace cookiewalk
