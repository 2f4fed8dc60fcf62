#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mrnom {

struct ForestParams {
  int n_trees = 100;
  int mtry = 0;  // 0: floor(sqrt(n_features))
  int min_leaf = 1;
  int max_depth = 0;  // 0: unlimited
  std::uint64_t seed = 1;
  int threads = 1;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double p1 = 0.0;  // leaf probability of class 1
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // root at 0
  double predict_p1(const double* x) const;
};

struct Prediction {
  int label = 0;
  double probability = 0.0;  // mean leaf probability of class 1
  int votes = 0;
};

struct ForestModel {
  static constexpr int kFormatVersion = 1;

  std::string kind;  // "merge" or "filter"
  int n_features = 0;
  std::vector<std::string> feature_names;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<DecisionTree> trees;

  Prediction predict(const std::vector<double>& x) const;
  std::string to_json() const;
  static ForestModel from_json(const std::string& text);
  void validate() const;
};

struct TrainingSet {
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;

  std::size_t positives() const;
  std::size_t negatives() const { return labels.size() - positives(); }
  void add(std::vector<double> row, int label);
  /// Header of feature names plus "class", one row per sample.
  std::string to_csv() const;
};

/// Throws Degenerate when fewer than two classes are present.
ForestModel train_forest(const TrainingSet& data, const ForestParams& params, const std::string& kind);

/// Deterministic 64-bit generator; independent of the standard library's distributions.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  /// Uniform real in [0, 1).
  double uniform();

 private:
  std::uint64_t state_;
};

}  // namespace mrnom
