#pragma once

#include <cstdint>
#include <vector>

namespace travel {

/// Disjoint-set forest over cluster labels. Labels are issued densely from 0.
/// The canonical label of a set is its smallest member, so the result of a
/// sequence of unions does not depend on argument order.
class LabelForest {
 public:
  using Label = std::uint32_t;

  LabelForest() = default;

  Label make() {
    const auto l = static_cast<Label>(parent_.size());
    parent_.push_back(l);
    return l;
  }

  std::size_t size() const noexcept { return parent_.size(); }

  Label find(Label x) {
    Label root = x;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[x] != root) {
      const Label next = parent_[x];
      parent_[x] = root;
      x = next;
    }
    return root;
  }

  /// Returns true when the two labels were in different sets.
  bool unite(Label a, Label b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
    ++unions_;
    return true;
  }

  std::size_t union_count() const noexcept { return unions_; }

 private:
  std::vector<Label> parent_;
  std::size_t unions_ = 0;
};

}  // namespace travel
