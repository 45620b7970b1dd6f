#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "cmliv/common.hpp"
#include "cmliv/learners.hpp"
#include "cmliv/parallel.hpp"
#include "cmliv/rng.hpp"

namespace cmliv {

namespace {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1, right = -1;
  double value = 0.0;
};

struct Tree {
  std::vector<TreeNode> nodes;

  double predict_row(const Eigen::MatrixXd& x, long row) const {
    int node = 0;
    while (nodes[node].feature >= 0) {
      node = x(row, nodes[node].feature) <= nodes[node].threshold ? nodes[node].left
                                                                  : nodes[node].right;
    }
    return nodes[node].value;
  }
};

struct SplitCandidate {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = -1.0;
  long left_count = 0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
              int min_leaf, int max_depth, int mtry, Rng& rng)
      : x_(x), y_(y), w_(w), min_leaf_(min_leaf), max_depth_(max_depth), mtry_(mtry), rng_(rng) {
    feature_ids_.resize(x.cols());
    std::iota(feature_ids_.begin(), feature_ids_.end(), 0);
  }

  Tree build(std::vector<long>& bootstrap) {
    tree_.nodes.clear();
    tree_.nodes.reserve(2 * bootstrap.size() / std::max(min_leaf_, 1) + 8);
    build_node(bootstrap, 0, static_cast<long>(bootstrap.size()), 0);
    return std::move(tree_);
  }

 private:
  int build_node(std::vector<long>& idx, long lo, long hi, int depth) {
    const long m = hi - lo;
    double sw = 0.0, swy = 0.0, swyy = 0.0;
    for (long p = lo; p < hi; ++p) {
      const long i = idx[p];
      sw += w_[i];
      swy += w_[i] * y_[i];
      swyy += w_[i] * y_[i] * y_[i];
    }
    const int node_id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    tree_.nodes[node_id].value = sw > 0.0 ? swy / sw : 0.0;

    const bool depth_ok = max_depth_ == 0 || depth < max_depth_;
    const double node_sse = swyy - (sw > 0.0 ? swy * swy / sw : 0.0);
    if (m < 2 * min_leaf_ || !depth_ok || node_sse <= 1e-12 * std::max(1.0, swyy)) {
      return node_id;
    }

    SplitCandidate best = best_split(idx, lo, hi, sw, swy);
    if (!best.found) return node_id;

    // Partition by the winning feature; the scan left idx sorted by the
    // last candidate, so re-sort by the winner before slicing.
    sort_span_by_feature(idx, lo, hi, best.feature);
    const long mid = lo + best.left_count;
    tree_.nodes[node_id].feature = best.feature;
    tree_.nodes[node_id].threshold = best.threshold;
    const int left = build_node(idx, lo, mid, depth + 1);
    tree_.nodes[node_id].left = left;
    const int right = build_node(idx, mid, hi, depth + 1);
    tree_.nodes[node_id].right = right;
    return node_id;
  }

  void sort_span_by_feature(std::vector<long>& idx, long lo, long hi, int f) {
    // Tie-break on the index itself: the ordering (and with it every
    // floating-point accumulation) is then a pure function of the data.
    std::sort(idx.begin() + lo, idx.begin() + hi, [&](long a, long b) {
      const double va = x_(a, f), vb = x_(b, f);
      return va != vb ? va < vb : a < b;
    });
  }

  SplitCandidate best_split(std::vector<long>& idx, long lo, long hi, double sw_total,
                            double swy_total) {
    // Sample mtry features without replacement.
    const int k = static_cast<int>(feature_ids_.size());
    for (int j = 0; j < mtry_; ++j) {
      int pick = j + static_cast<int>(rng_.next_below(static_cast<std::uint64_t>(k - j)));
      std::swap(feature_ids_[j], feature_ids_[pick]);
    }

    SplitCandidate best;
    for (int j = 0; j < mtry_; ++j) {
      const int f = feature_ids_[j];
      sort_span_by_feature(idx, lo, hi, f);
      double sw_left = 0.0, swy_left = 0.0;
      for (long p = lo; p + 1 < hi; ++p) {
        const long i = idx[p];
        sw_left += w_[i];
        swy_left += w_[i] * y_[i];
        const long left_count = p - lo + 1;
        if (left_count < min_leaf_ || (hi - p - 1) < min_leaf_) continue;
        const double v = x_(i, f), v_next = x_(idx[p + 1], f);
        if (v == v_next) continue;  // can only cut between distinct values
        const double sw_right = sw_total - sw_left;
        if (sw_left <= 0.0 || sw_right <= 0.0) continue;
        const double swy_right = swy_total - swy_left;
        const double gain = swy_left * swy_left / sw_left + swy_right * swy_right / sw_right;
        if (gain > best.gain) {
          best.found = true;
          best.gain = gain;
          best.feature = f;
          best.threshold = v + 0.5 * (v_next - v);
          best.left_count = left_count;
        }
      }
    }
    return best;
  }

  const Eigen::MatrixXd& x_;
  const Eigen::VectorXd& y_;
  const Eigen::VectorXd& w_;
  int min_leaf_, max_depth_, mtry_;
  Rng& rng_;
  std::vector<int> feature_ids_;
  Tree tree_;
};

class ForestRegressor final : public Regressor {
 public:
  ForestRegressor(const RegressorSpec& spec, const Eigen::MatrixXd& features,
                  const Eigen::VectorXd& targets, const std::optional<Eigen::VectorXd>& weights,
                  int workers)
      : k_(features.cols()) {
    const long n = features.rows();
    const Eigen::VectorXd w = weights ? *weights : Eigen::VectorXd::Ones(n);
    const int mtry = spec.forest_mtry > 0
                         ? std::min<int>(spec.forest_mtry, static_cast<int>(k_))
                         : static_cast<int>((k_ + 2) / 3);

    trees_.resize(spec.forest_trees);
    parallel_for(spec.forest_trees, workers, [&](long t) {
      Rng rng(derive_seed(spec.seed, {0xF07ull, static_cast<std::uint64_t>(t)}));
      std::vector<long> bootstrap(n);
      for (long i = 0; i < n; ++i)
        bootstrap[i] = static_cast<long>(rng.next_below(static_cast<std::uint64_t>(n)));
      TreeBuilder builder(features, targets, w, spec.forest_min_leaf, spec.forest_max_depth, mtry,
                          rng);
      trees_[t] = builder.build(bootstrap);
    });
  }

  Eigen::VectorXd predict(const Eigen::MatrixXd& features) const override {
    if (features.cols() != k_)
      throw fit_error("prediction feature count " + std::to_string(features.cols()) +
                      " does not match training (" + std::to_string(k_) + ")");
    Eigen::VectorXd out(features.rows());
    const double inv = 1.0 / static_cast<double>(trees_.size());
    for (long r = 0; r < features.rows(); ++r) {
      double sum = 0.0;
      for (const auto& tree : trees_) sum += tree.predict_row(features, r);
      out[r] = sum * inv;
    }
    return out;
  }

 private:
  long k_;
  std::vector<Tree> trees_;
};

}  // namespace

FittedRegressor make_forest_regressor(const RegressorSpec& spec, const Eigen::MatrixXd& features,
                                      const Eigen::VectorXd& targets,
                                      const std::optional<Eigen::VectorXd>& weights, int workers) {
  return std::make_shared<ForestRegressor>(spec, features, targets, weights, workers);
}

}  // namespace cmliv
