#include "mrnom/config.hpp"

#include <charconv>
#include <functional>
#include <sstream>

#include "mrnom/digest.hpp"
#include "mrnom/eval.hpp"

namespace mrnom {

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  T v{};
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (r.ec != std::errc() || r.ptr != t.data() + t.size())
    fail(ErrorCode::InvalidArgument, "config: bad value '" + t + "' for " + key);
  return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(parse_number<double>(key, item));
  }
  return out;
}

std::string list_str(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s;
}

struct Entry {
  std::string key;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
  bool runtime = false;
};

template <typename T>
Entry number(std::string key, T& ref) {
  return {key, [&ref, key](const std::string& s) { ref = parse_number<T>(key, s); },
          [&ref] {
            if constexpr (std::is_floating_point_v<T>)
              return fmt(ref);
            else
              return std::to_string(ref);
          }};
}

Entry list(std::string key, std::vector<double>& ref) {
  return {key, [&ref, key](const std::string& s) { ref = parse_list(key, s); }, [&ref] { return list_str(ref); }};
}

/// Registry bound to one config; order defines the canonical form.
std::vector<Entry> registry(PipelineConfig& c) {
  std::vector<Entry> e;
  e.push_back(number("pre.neuropil_target", c.pre.neuropil_target));
  e.push_back(number("pre.smooth_sd", c.pre.smooth_sd));
  e.push_back(number("pre.clahe_grid", c.pre.clahe.grid));
  e.push_back(number("pre.clahe_clip", c.pre.clahe.clip_limit));
  e.push_back(number("pre.mode_fraction", c.pre.mode_fraction));
  e.push_back(number("pre.histogram_smoothing", c.pre.histogram_smoothing));
  e.push_back(number("pre.dog_sd", c.pre.dog_sd));
  e.push_back(number("pre.dog_size", c.pre.dog_side));
  e.push_back(number("pre.edge_min_area", c.pre.edge_min_area));
  e.push_back(list("fg.sigmas", c.fg.scales.sigmas));
  e.push_back(number("fg.gamma", c.fg.scales.gamma));
  e.push_back(number("fg.min_area", c.fg.min_area));
  e.push_back(list("mk.sigmas", c.mk.scales.sigmas));
  e.push_back(number("mk.gamma", c.mk.scales.gamma));
  e.push_back(number("mk.h", c.mk.h));
  e.push_back(number("mk.edge_clearance", c.mk.edge_clearance));
  e.push_back(number("ws.alpha1", c.alpha1));
  e.push_back(number("merge.passes", c.merge_passes));
  e.push_back(number("merge.trees", c.merge_forest.n_trees));
  e.push_back(number("merge.mtry", c.merge_forest.mtry));
  e.push_back(number("merge.min_leaf", c.merge_forest.min_leaf));
  e.push_back(number("merge.max_depth", c.merge_forest.max_depth));
  e.push_back(number("merge.seed", c.merge_forest.seed));
  e.push_back(number("post.min_area", c.min_object_area));
  e.push_back(number("cv.iterations", c.cv.iterations));
  e.push_back(number("cv.length_weight", c.cv.length_weight));
  e.push_back(number("cv.lambda1", c.cv.lambda1));
  e.push_back(number("cv.lambda2", c.cv.lambda2));
  e.push_back(number("cv.step", c.cv.step));
  e.push_back(number("cv.epsilon", c.cv.epsilon));
  e.push_back(number("cv.window_margin", c.cv.window_margin));
  e.push_back(number("cv.intensity_scale", c.cv.intensity_scale));
  e.push_back(number("fpf.iou_positive", c.fpf_iou_positive));
  e.push_back(number("fpf.trees", c.filter_forest.n_trees));
  e.push_back(number("fpf.mtry", c.filter_forest.mtry));
  e.push_back(number("fpf.min_leaf", c.filter_forest.min_leaf));
  e.push_back(number("fpf.max_depth", c.filter_forest.max_depth));
  e.push_back(number("fpf.seed", c.filter_forest.seed));
  e.push_back(list("eval.thresholds", c.thresholds));
  e.push_back(number("synth.tiles", c.synth_tiles));
  e.push_back(number("synth.width", c.synth.width));
  e.push_back(number("synth.height", c.synth.height));
  e.push_back(number("synth.cells_min", c.synth.cells_min));
  e.push_back(number("synth.cells_max", c.synth.cells_max));
  e.push_back(number("synth.radius_min", c.synth.radius_min));
  e.push_back(number("synth.radius_max", c.synth.radius_max));
  e.push_back(number("synth.axis_ratio_min", c.synth.axis_ratio_min));
  e.push_back(number("synth.axis_ratio_max", c.synth.axis_ratio_max));
  e.push_back(number("synth.overlap_probability", c.synth.overlap_probability));
  e.push_back(number("synth.cluster_min", c.synth.cluster_min));
  e.push_back(number("synth.cluster_max", c.synth.cluster_max));
  e.push_back(number("synth.cell_min", c.synth.cell_min));
  e.push_back(number("synth.cell_max", c.synth.cell_max));
  e.push_back(number("synth.cell_gradient", c.synth.cell_gradient));
  e.push_back(number("synth.texture_sd", c.synth.texture_sd));
  e.push_back(number("synth.granule_sd", c.synth.granule_sd));
  e.push_back(number("synth.granule_scale", c.synth.granule_scale));
  e.push_back(number("synth.nucleus_contrast", c.synth.nucleus_contrast));
  e.push_back(number("synth.nucleus_fraction", c.synth.nucleus_fraction));
  e.push_back(number("synth.neuropil", c.synth.neuropil));
  e.push_back(number("synth.noise_sd", c.synth.noise_sd));
  e.push_back(number("synth.clearance", c.synth.clearance));
  e.push_back(number("synth.max_retries", c.synth.max_retries));
  e.push_back(number("synth.seed", c.synth.seed));
  Entry w = number("run.workers", c.workers);
  w.runtime = true;
  e.push_back(w);
  Entry t = number("run.train_threads", c.merge_forest.threads);
  t.runtime = true;
  t.set = [&c](const std::string& s) {
    c.merge_forest.threads = c.filter_forest.threads = parse_number<int>("run.train_threads", s);
  };
  e.push_back(t);
  return e;
}

}  // namespace

PipelineConfig::PipelineConfig() : thresholds(default_thresholds()) {
  merge_forest.seed = 1;
  filter_forest.seed = 2;
}

void PipelineConfig::set(const std::string& key, const std::string& value) {
  for (auto& e : registry(*this))
    if (e.key == key) {
      e.set(value);
      return;
    }
  fail(ErrorCode::Schema, "config: unknown key '" + key + "'");
}

PipelineConfig PipelineConfig::parse(const std::string& text) {
  PipelineConfig c;
  std::stringstream ss(text);
  std::string line;
  int n = 0;
  while (std::getline(ss, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::Schema, "config line " + std::to_string(n) + ": expected key = value");
    try {
      c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      fail(e.code(), std::string(e.what()) + " (line " + std::to_string(n) + ")");
    }
  }
  c.validate();
  return c;
}

void PipelineConfig::set_seed(std::uint64_t seed) {
  merge_forest.seed = seed;
  filter_forest.seed = seed + 1;
  synth.seed = seed;
}

void PipelineConfig::validate() const {
  require(pre.neuropil_target > 0.0 && pre.neuropil_target <= 255.0, ErrorCode::InvalidArgument,
          "pre.neuropil_target must lie in (0, 255]");
  require(pre.smooth_sd > 0.0, ErrorCode::InvalidArgument, "pre.smooth_sd must be positive");
  require(pre.clahe.grid > 0 && pre.clahe.clip_limit > 0.0, ErrorCode::InvalidArgument, "CLAHE parameters must be positive");
  require(pre.mode_fraction > 0.0 && pre.mode_fraction < 1.0, ErrorCode::InvalidArgument,
          "pre.mode_fraction must lie in (0, 1)");
  require(pre.histogram_smoothing >= 1, ErrorCode::InvalidArgument, "pre.histogram_smoothing must be at least 1");
  require(pre.dog_sd > 0.0 && pre.dog_side >= 2, ErrorCode::InvalidArgument, "bad derivative kernel parameters");
  require(pre.edge_min_area >= 0 && fg.min_area >= 0 && min_object_area >= 0, ErrorCode::InvalidArgument,
          "area thresholds must be non-negative");
  fg.scales.validate();
  mk.scales.validate();
  require(mk.h > 0.0, ErrorCode::InvalidArgument, "mk.h must be positive");
  require(mk.edge_clearance >= 0, ErrorCode::InvalidArgument, "mk.edge_clearance must be non-negative");
  require(alpha1 >= 0.0, ErrorCode::InvalidArgument, "ws.alpha1 must be non-negative");
  require(merge_passes >= 0, ErrorCode::InvalidArgument, "merge.passes must be non-negative");
  for (const ForestParams* f : {&merge_forest, &filter_forest})
    require(f->n_trees > 0 && f->mtry >= 0 && f->min_leaf > 0 && f->max_depth >= 0, ErrorCode::InvalidArgument,
            "bad forest parameters");
  cv.validate();
  require(fpf_iou_positive > 0.0 && fpf_iou_positive <= 1.0, ErrorCode::InvalidArgument,
          "fpf.iou_positive must lie in (0, 1]");
  require(!thresholds.empty() && std::is_sorted(thresholds.begin(), thresholds.end()), ErrorCode::InvalidArgument,
          "eval.thresholds must be a non-empty ascending list");
  for (double t : thresholds)
    require(t > 0.0 && t <= 1.0, ErrorCode::InvalidArgument, "eval.thresholds must lie in (0, 1]");
  synth.validate();
  require(synth_tiles >= 0, ErrorCode::InvalidArgument, "synth.tiles must be non-negative");
  require(workers >= 1, ErrorCode::InvalidArgument, "run.workers must be at least 1");
}

std::string PipelineConfig::canonical(bool include_runtime) const {
  std::string out;
  for (auto& e : registry(const_cast<PipelineConfig&>(*this))) {
    if (e.runtime && !include_runtime) continue;
    out += e.key + " = " + e.get() + "\n";
  }
  return out;
}

std::string PipelineConfig::hash() const { return sha256_hex(canonical(false)); }

std::vector<std::string> PipelineConfig::keys() {
  PipelineConfig c;
  std::vector<std::string> k;
  for (auto& e : registry(c)) k.push_back(e.key);
  return k;
}

}  // namespace mrnom
