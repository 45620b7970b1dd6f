#pragma once

#include <cstdint>
#include <vector>

namespace cmliv {

// Random equal-size partition of {0..n-1} into L folds. Sizes differ by
// at most one; assignment[i] is the fold of observation i.
struct FoldPlan {
  std::vector<int> assignment;
  int fold_count = 0;

  long n() const { return static_cast<long>(assignment.size()); }
  std::vector<long> fold_indices(int fold) const;
  std::vector<long> complement_indices(int fold) const;
};

// Deterministic given (n, folds, seed). Throws config_error unless
// n >= folds >= 2.
FoldPlan make_fold_plan(long n, int folds, std::uint64_t seed);

}  // namespace cmliv
