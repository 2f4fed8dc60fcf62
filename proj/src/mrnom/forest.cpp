#include "mrnom/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "mrnom/error.hpp"

namespace mrnom {

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t SplitMix64::below(std::uint64_t n) {
  require(n > 0, ErrorCode::InvalidArgument, "below: empty range");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do v = next();
  while (v >= limit);
  return v % n;
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double DecisionTree::predict_p1(const double* x) const {
  int i = 0;
  while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const TreeNode& n = nodes[static_cast<std::size_t>(i)];
    i = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(i)].p1;
}

std::size_t TrainingSet::positives() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

void TrainingSet::add(std::vector<double> row, int label) {
  require(feature_names.empty() || row.size() == feature_names.size(), ErrorCode::InvalidArgument,
          "training row has the wrong length");
  require(label == 0 || label == 1, ErrorCode::InvalidArgument, "class label must be 0 or 1");
  rows.push_back(std::move(row));
  labels.push_back(label);
}

std::string TrainingSet::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  for (const auto& n : feature_names) os << n << ',';
  os << "class\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (double v : rows[r]) os << v << ',';
    os << labels[r] << '\n';
  }
  return os.str();
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const TrainingSet& data, const ForestParams& p, int n_features, int mtry, std::uint64_t seed)
      : data_(data), p_(p), nf_(n_features), mtry_(mtry), rng_(seed) {}

  DecisionTree build() {
    const std::size_t n = data_.rows.size();
    std::vector<std::size_t> sample(n);
    for (auto& s : sample) s = static_cast<std::size_t>(rng_.below(n));
    std::sort(sample.begin(), sample.end());
    grow(sample, 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double score = std::numeric_limits<double>::infinity();
  };

  int make_leaf(const std::vector<std::size_t>& idx) {
    std::size_t ones = 0;
    for (std::size_t i : idx) ones += static_cast<std::size_t>(data_.labels[i]);
    TreeNode leaf;
    leaf.p1 = static_cast<double>(ones) / static_cast<double>(idx.size());
    tree_.nodes.push_back(leaf);
    return static_cast<int>(tree_.nodes.size() - 1);
  }

  /// Sum over children of n * gini; lower is better.
  Split best_split_on(int f, const std::vector<std::size_t>& idx, double total_ones) {
    std::vector<std::pair<double, int>> v;
    v.reserve(idx.size());
    for (std::size_t i : idx) v.emplace_back(data_.rows[i][static_cast<std::size_t>(f)], data_.labels[i]);
    std::sort(v.begin(), v.end());
    Split best;
    const double n = static_cast<double>(v.size());
    double left_n = 0.0;
    double left_ones = 0.0;
    for (std::size_t k = 0; k + 1 < v.size(); ++k) {
      left_n += 1.0;
      left_ones += v[k].second;
      if (v[k].first == v[k + 1].first) continue;
      const double right_n = n - left_n;
      if (left_n < p_.min_leaf || right_n < p_.min_leaf) continue;
      const double right_ones = total_ones - left_ones;
      const double gl = left_n - (left_ones * left_ones + (left_n - left_ones) * (left_n - left_ones)) / left_n;
      const double gr = right_n - (right_ones * right_ones + (right_n - right_ones) * (right_n - right_ones)) / right_n;
      const double score = gl + gr;
      if (score < best.score) {
        best.score = score;
        best.feature = f;
        best.threshold = 0.5 * (v[k].first + v[k + 1].first);
        // Midpoints can round onto the upper value for adjacent doubles.
        if (!(best.threshold < v[k + 1].first)) best.threshold = v[k].first;
      }
    }
    return best;
  }

  int grow(const std::vector<std::size_t>& idx, int depth) {
    double ones = 0.0;
    for (std::size_t i : idx) ones += data_.labels[i];
    const double n = static_cast<double>(idx.size());
    const bool pure = ones == 0.0 || ones == n;
    if (pure || idx.size() < 2 * static_cast<std::size_t>(p_.min_leaf) || (p_.max_depth > 0 && depth >= p_.max_depth))
      return make_leaf(idx);

    std::vector<int> order(static_cast<std::size_t>(nf_));
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      const auto j = i + static_cast<std::size_t>(rng_.below(order.size() - i));
      std::swap(order[i], order[j]);
    }
    Split best;
    // Draw mtry features; keep drawing only while none of them can split the node.
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (static_cast<int>(k) >= mtry_ && best.feature >= 0) break;
      const Split s = best_split_on(order[k], idx, ones);
      if (s.score < best.score) best = s;
    }
    if (best.feature < 0) return make_leaf(idx);

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (std::size_t i : idx) {
      if (data_.rows[i][static_cast<std::size_t>(best.feature)] <= best.threshold)
        left.push_back(i);
      else
        right.push_back(i);
    }
    const int self = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back(TreeNode{best.feature, best.threshold, -1, -1, 0.0});
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    tree_.nodes[static_cast<std::size_t>(self)].left = l;
    tree_.nodes[static_cast<std::size_t>(self)].right = r;
    return self;
  }

  const TrainingSet& data_;
  const ForestParams& p_;
  int nf_;
  int mtry_;
  SplitMix64 rng_;
  DecisionTree tree_;
};

}  // namespace

ForestModel train_forest(const TrainingSet& data, const ForestParams& params, const std::string& kind) {
  require(!data.rows.empty(), ErrorCode::Degenerate, "degenerate training set: no samples");
  const std::size_t pos = data.positives();
  if (pos == 0 || pos == data.rows.size()) {
    fail(ErrorCode::Degenerate, "degenerate training set: " + std::to_string(data.positives()) + " positive, " +
                                    std::to_string(data.negatives()) + " negative");
  }
  require(params.n_trees > 0, ErrorCode::InvalidArgument, "n_trees must be positive");
  require(params.min_leaf > 0, ErrorCode::InvalidArgument, "min_leaf must be positive");
  const int nf = static_cast<int>(data.rows.front().size());
  for (const auto& r : data.rows)
    require(static_cast<int>(r.size()) == nf, ErrorCode::InvalidArgument, "ragged training rows");
  for (const auto& r : data.rows)
    for (double v : r) require(std::isfinite(v), ErrorCode::InvalidArgument, "non-finite feature value");
  const int mtry =
      params.mtry > 0 ? std::min(params.mtry, nf) : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(nf)))));

  ForestModel m;
  m.kind = kind;
  m.n_features = nf;
  m.feature_names = data.feature_names;
  if (m.feature_names.empty())
    for (int i = 0; i < nf; ++i) m.feature_names.push_back("f" + std::to_string(i));
  m.seed = params.seed;
  m.trees.resize(static_cast<std::size_t>(params.n_trees));

  auto build_range = [&](std::size_t begin, std::size_t step) {
    for (std::size_t t = begin; t < m.trees.size(); t += step) {
      SplitMix64 mix(params.seed ^ (0xa0761d6478bd642fULL * (t + 1)));
      TreeBuilder b(data, params, nf, mtry, mix.next());
      m.trees[t] = b.build();
    }
  };
  const std::size_t workers = static_cast<std::size_t>(std::clamp(params.threads, 1, params.n_trees));
  if (workers == 1) {
    build_range(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(build_range, w, workers);
  }
  return m;
}

Prediction ForestModel::predict(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != n_features)
    fail(ErrorCode::InvalidArgument, "feature vector length " + std::to_string(x.size()) + " does not match model (" +
                                         std::to_string(n_features) + ")");
  require(!trees.empty(), ErrorCode::Schema, "model has no trees");
  Prediction p;
  double sum = 0.0;
  for (const auto& t : trees) {
    const double p1 = t.predict_p1(x.data());
    sum += p1;
    if (p1 > 0.5) ++p.votes;
  }
  p.probability = sum / static_cast<double>(trees.size());
  p.label = 2 * p.votes > static_cast<int>(trees.size()) ? 1 : 0;
  return p;
}

void ForestModel::validate() const {
  require(n_features > 0, ErrorCode::Schema, "model: n_features must be positive");
  require(static_cast<int>(feature_names.size()) == n_features, ErrorCode::Schema, "model: feature_names length mismatch");
  require(!trees.empty(), ErrorCode::Schema, "model: no trees");
  for (const auto& t : trees) {
    require(!t.nodes.empty(), ErrorCode::Schema, "model: empty tree");
    const int n = static_cast<int>(t.nodes.size());
    for (int i = 0; i < n; ++i) {
      const TreeNode& nd = t.nodes[static_cast<std::size_t>(i)];
      if (nd.feature < 0) {
        require(nd.p1 >= 0.0 && nd.p1 <= 1.0, ErrorCode::Schema, "model: leaf probability outside [0,1]");
      } else {
        require(nd.feature < n_features, ErrorCode::Schema, "model: split feature out of range");
        // Children always follow their parent, which also rules out cycles.
        require(nd.left > i && nd.left < n && nd.right > i && nd.right < n, ErrorCode::Schema, "model: bad child index");
      }
    }
  }
}

std::string ForestModel::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "mrnom-forest";
  j["version"] = kFormatVersion;
  j["kind"] = kind;
  j["n_features"] = n_features;
  j["feature_names"] = feature_names;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  auto& jt = j["trees"] = nlohmann::ordered_json::array();
  for (const auto& t : trees) {
    auto nodes = nlohmann::ordered_json::array();
    for (const auto& n : t.nodes) {
      if (n.feature < 0)
        nodes.push_back({{"leaf", {1.0 - n.p1, n.p1}}});
      else
        nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
    }
    jt.push_back(std::move(nodes));
  }
  return j.dump(1) + "\n";
}

ForestModel ForestModel::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Schema, std::string("model: not valid JSON: ") + e.what());
  }
  try {
    require(j.value("format", "") == "mrnom-forest", ErrorCode::Schema, "model: unknown format");
    if (j.at("version").get<int>() != kFormatVersion)
      fail(ErrorCode::Schema, "model: unsupported version " + j.at("version").dump());
    ForestModel m;
    m.kind = j.at("kind").get<std::string>();
    m.n_features = j.at("n_features").get<int>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config_hash = j.value("config_hash", "");
    for (const auto& jt : j.at("trees")) {
      DecisionTree t;
      for (const auto& jn : jt) {
        TreeNode n;
        if (jn.contains("leaf")) {
          const auto p = jn.at("leaf").get<std::vector<double>>();
          require(p.size() == 2 && std::abs(p[0] + p[1] - 1.0) < 1e-9, ErrorCode::Schema, "model: leaf must hold two probabilities summing to 1");
          n.p1 = p[1];
        } else {
          n.feature = jn.at("feature").get<int>();
          n.threshold = jn.at("threshold").get<double>();
          n.left = jn.at("left").get<int>();
          n.right = jn.at("right").get<int>();
        }
        t.nodes.push_back(n);
      }
      m.trees.push_back(std::move(t));
    }
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Schema, std::string("model: ") + e.what());
  }
}

}  // namespace mrnom
