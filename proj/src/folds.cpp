#include "cmliv/folds.hpp"

#include <numeric>
#include <string>

#include "cmliv/common.hpp"
#include "cmliv/rng.hpp"

namespace cmliv {

std::vector<long> FoldPlan::fold_indices(int fold) const {
  std::vector<long> out;
  for (long i = 0; i < n(); ++i) {
    if (assignment[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<long> FoldPlan::complement_indices(int fold) const {
  std::vector<long> out;
  for (long i = 0; i < n(); ++i) {
    if (assignment[i] != fold) out.push_back(i);
  }
  return out;
}

FoldPlan make_fold_plan(long n, int folds, std::uint64_t seed) {
  if (folds < 2) throw config_error("fold count must be at least 2, got " + std::to_string(folds));
  if (n < folds)
    throw config_error("cannot split " + std::to_string(n) + " observations into " +
                       std::to_string(folds) + " folds");

  std::vector<long> order(n);
  std::iota(order.begin(), order.end(), 0L);
  Rng rng(seed);
  rng.shuffle(order);

  // Deal the shuffled indices into folds; the first (n mod L) folds get
  // one extra observation.
  FoldPlan plan;
  plan.fold_count = folds;
  plan.assignment.assign(n, 0);
  const long base = n / folds;
  const long extra = n % folds;
  long pos = 0;
  for (int f = 0; f < folds; ++f) {
    long size = base + (f < extra ? 1 : 0);
    for (long j = 0; j < size; ++j) plan.assignment[order[pos++]] = f;
  }
  return plan;
}

}  // namespace cmliv
