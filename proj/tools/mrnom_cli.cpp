// mrnom command-line front end. Talks to the library only through the C API.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mrnom/mrnom.h"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kMissing = 2, kDegenerate = 3, kRuntime = 4 };

/// Carries an exit code up to main.
struct Abort {
  int code;
  std::string message;
};

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  explicit Handle(T* q) : p(q) {}
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  Handle(Handle&& o) noexcept : p(std::exchange(o.p, nullptr)) {}
  ~Handle() { Free(p); }
  T** out() { return &p; }
  T* get() const { return p; }
};
using Config = Handle<mrnom_config, mrnom_config_free>;
using Image = Handle<mrnom_image, mrnom_image_free>;
using Labels = Handle<mrnom_labels, mrnom_labels_free>;
using Model = Handle<mrnom_model, mrnom_model_free>;
using Trainer = Handle<mrnom_trainer, mrnom_trainer_free>;

std::string take(char* s) {
  std::string out = s ? s : "";
  mrnom_string_free(s);
  return out;
}

int exit_for(mrnom_status s) {
  switch (s) {
    case MRNOM_OK: return kOk;
    case MRNOM_ERR_DEGENERATE: return kDegenerate;
    case MRNOM_ERR_IO: return kMissing;
    case MRNOM_ERR_INVALID_ARGUMENT:
    case MRNOM_ERR_SCHEMA: return kUsage;
    default: return kRuntime;
  }
}

void check(mrnom_status s, const std::string& context, std::optional<int> code = std::nullopt) {
  if (s != MRNOM_OK) throw Abort{code.value_or(exit_for(s)), context + ": " + mrnom_last_error()};
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Abort{kRuntime, "cannot write " + p.string()};
}

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Configuration file (key = value)");
  cmd->add_option("--out", c.out, "Output directory")->required();
  cmd->add_option("--seed", c.seed, "Seed for every random choice");
}

Config load_config(const Common& c) {
  Config cfg;
  if (c.config.empty()) {
    check(mrnom_config_new(cfg.out()), "config");
  } else {
    if (!fs::exists(c.config)) throw Abort{kMissing, "config file not found: " + c.config};
    check(mrnom_config_load(c.config.c_str(), cfg.out()), "config " + c.config, kUsage);
  }
  if (c.seed) check(mrnom_config_set_seed(cfg.get(), *c.seed), "seed");
  fs::create_directories(c.out);
  return cfg;
}

std::string config_value(const Config& cfg, const char* key) {
  char* v = nullptr;
  check(mrnom_config_get(cfg.get(), key, &v), key);
  return take(v);
}

std::string config_hash(const Config& cfg) {
  char buf[65];
  check(mrnom_config_hash(cfg.get(), buf, sizeof buf), "config hash");
  return buf;
}

std::string model_hash(const Model& m) {
  char buf[65];
  check(mrnom_model_hash(m.get(), buf, sizeof buf), "model hash");
  return buf;
}

bool is_image(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return ext == ".png" || ext == ".tif" || ext == ".tiff";
}

bool has_suffix(const std::string& stem, const std::string& suffix) {
  return stem.size() > suffix.size() && stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) == 0;
}

/// Image files named on the command line or found directly inside named directories, sorted.
std::vector<fs::path> collect_tiles(const std::vector<std::string>& inputs, bool skip_gt) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      for (const auto& e : fs::directory_iterator(in)) {
        if (!e.is_regular_file() || !is_image(e.path())) continue;
        const std::string stem = e.path().stem().string();
        if (skip_gt && (has_suffix(stem, "_gt") || has_suffix(stem, "_labels") || has_suffix(stem, "_overlay"))) continue;
        out.push_back(e.path());
      }
    } else if (fs::exists(in)) {
      out.emplace_back(in);
    } else {
      throw Abort{kMissing, "input not found: " + in};
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

Model load_model(const std::string& path, const char* expected) {
  if (path.empty() || !fs::exists(path)) throw Abort{kMissing, std::string(expected) + " model not found: " + path};
  Model m;
  check(mrnom_model_load(path.c_str(), m.out()), std::string(expected) + " model " + path, kMissing);
  char* kind = nullptr;
  check(mrnom_model_kind(m.get(), &kind), "model kind");
  if (take(kind) != expected) throw Abort{kMissing, path + " is not a " + expected + " model"};
  return m;
}

// ---------------------------------------------------------------- segment

struct SegmentArgs {
  Common common;
  std::vector<std::string> inputs;
  std::string merge_model;
  std::string filter_model;
  bool overlay = false;
  int workers = 0;
};

struct TileOutcome {
  bool ok = false;
  std::string error;
  int labels = 0;
  std::string timings;
};

TileOutcome segment_one(const fs::path& tile, const fs::path& out_dir, const Config& cfg, const Model& merge,
                        const Model& filter, bool overlay) {
  TileOutcome r;
  const std::string stem = tile.stem().string();
  Image img;
  if (mrnom_image_read(tile.string().c_str(), img.out()) != MRNOM_OK) {
    r.error = mrnom_last_error();
    return r;
  }
  Labels lb;
  char* timings = nullptr;
  if (mrnom_segment(cfg.get(), merge.get(), filter.get(), img.get(), lb.out(), &timings) != MRNOM_OK) {
    r.error = mrnom_last_error();
    return r;
  }
  r.timings = take(timings);
  const std::string labels_path = (out_dir / (stem + "_labels.png")).string();
  if (mrnom_labels_write(lb.get(), labels_path.c_str()) != MRNOM_OK) {
    r.error = mrnom_last_error();
    return r;
  }
  if (overlay) {
    const std::string p = (out_dir / (stem + "_overlay.png")).string();
    if (mrnom_write_overlay(img.get(), lb.get(), p.c_str()) != MRNOM_OK) {
      r.error = mrnom_last_error();
      return r;
    }
  }
  mrnom_labels_count(lb.get(), &r.labels);
  r.ok = true;
  return r;
}

int run_segment(const SegmentArgs& a) {
  Config cfg = load_config(a.common);
  const Model merge = load_model(a.merge_model, "merge");
  const Model filter = load_model(a.filter_model, "filter");
  const auto tiles = collect_tiles(a.inputs, true);
  const fs::path out_dir = a.common.out;
  const int workers = a.workers > 0 ? a.workers : std::stoi(config_value(cfg, "run.workers"));

  std::vector<TileOutcome> outcomes(tiles.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < tiles.size(); i = next++)
      outcomes[i] = segment_one(tiles[i], out_dir, cfg, merge, filter, a.overlay);
  };
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < std::min<int>(workers, static_cast<int>(tiles.size())); ++w) pool.emplace_back(work);
    work();
  }

  const std::string chash = config_hash(cfg);
  const std::string mhash = model_hash(merge);
  const std::string fhash = model_hash(filter);
  std::ostringstream report;
  report << "tile,status,labels\n";
  json timings = json::object();
  int failed = 0;
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    const std::string stem = tiles[i].stem().string();
    const TileOutcome& o = outcomes[i];
    json m;
    m["tile"] = tiles[i].filename().string();
    m["status"] = o.ok ? "ok" : "error";
    if (!o.ok) m["error"] = o.error;
    m["labels"] = o.labels;
    m["config_hash"] = chash;
    m["merge_model_hash"] = mhash;
    m["filter_model_hash"] = fhash;
    m["seed"] = std::stoull(config_value(cfg, "merge.seed"));
    m["version"] = mrnom_version();
    write_file(out_dir / (stem + "_manifest.json"), m.dump(2) + "\n");
    report << tiles[i].filename().string() << ',' << (o.ok ? "ok" : "error") << ',' << o.labels << '\n';
    if (o.ok)
      timings[stem] = json::parse(o.timings);
    else {
      ++failed;
      std::cerr << "warning: " << tiles[i].string() << ": " << o.error << '\n';
    }
  }
  write_file(out_dir / "segment_report.csv", report.str());
  // Wall-clock times differ between runs, so they live apart from the manifests.
  write_file(out_dir / "timings.json", timings.dump(2) + "\n");
  std::cout << "segmented " << tiles.size() - static_cast<std::size_t>(failed) << " of " << tiles.size() << " tiles\n";
  return kOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  Common common;
  std::vector<std::string> inputs;
};

fs::path gt_for(const fs::path& tile) {
  return tile.parent_path() / (tile.stem().string() + "_gt.png");
}

int run_train(const TrainArgs& a) {
  Config cfg = load_config(a.common);
  const auto tiles = collect_tiles(a.inputs, true);
  if (tiles.empty()) throw Abort{kMissing, "no training tiles found"};
  Trainer tr;
  check(mrnom_trainer_new(cfg.get(), tr.out()), "trainer");
  for (const auto& t : tiles) {
    const fs::path gt = gt_for(t);
    if (!fs::exists(gt)) throw Abort{kMissing, "ground truth missing for " + t.string() + " (expected " + gt.string() + ")"};
    Image img;
    Labels lb;
    check(mrnom_image_read(t.string().c_str(), img.out()), t.string(), kMissing);
    check(mrnom_labels_read(gt.string().c_str(), lb.out()), gt.string(), kMissing);
    check(mrnom_trainer_add(tr.get(), img.get(), lb.get()), t.string());
  }
  Model merge;
  Model filter;
  check(mrnom_trainer_run(tr.get(), merge.out(), filter.out()), "training");
  const fs::path out_dir = a.common.out;
  check(mrnom_model_save(merge.get(), (out_dir / "merge_model.json").string().c_str()), "save merge model");
  check(mrnom_model_save(filter.get(), (out_dir / "filter_model.json").string().c_str()), "save filter model");
  char* mcsv = nullptr;
  char* fcsv = nullptr;
  check(mrnom_trainer_export(tr.get(), &mcsv, &fcsv), "export");
  write_file(out_dir / "merge_training.csv", take(mcsv));
  write_file(out_dir / "filter_training.csv", take(fcsv));
  json m;
  m["tiles"] = json::array();
  for (const auto& t : tiles) m["tiles"].push_back(t.filename().string());
  m["config_hash"] = config_hash(cfg);
  m["merge_model_hash"] = model_hash(merge);
  m["filter_model_hash"] = model_hash(filter);
  m["version"] = mrnom_version();
  write_file(out_dir / "train_manifest.json", m.dump(2) + "\n");
  std::cout << "trained on " << tiles.size() << " tiles\n";
  return kOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  Common common;
  std::string pred;
  std::string gt;
  std::string thresholds;
};

std::string pair_key(const fs::path& p) {
  std::string s = p.stem().string();
  for (const char* suffix : {"_labels", "_gt"})
    if (has_suffix(s, suffix)) return s.substr(0, s.size() - std::strlen(suffix));
  return s;
}

std::map<std::string, fs::path> label_files(const std::string& dir) {
  if (!fs::is_directory(dir)) throw Abort{kMissing, "not a directory: " + dir};
  std::map<std::string, fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png" && !has_suffix(e.path().stem().string(), "_overlay")) {
      const std::string stem = e.path().stem().string();
      if (has_suffix(stem, "_labels") || has_suffix(stem, "_gt")) out[pair_key(e.path())] = e.path();
    }
  return out;
}

std::vector<double> parse_thresholds(const std::string& text) {
  std::vector<double> t;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      t.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Abort{kUsage, "bad threshold '" + item + "'"};
    }
  }
  return t;
}

std::string fmt_row(const mrnom_match& r) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%.2f,%d,%d,%d,%.6f", r.threshold, r.tp, r.fp, r.fn, r.ap);
  return buf;
}

int run_eval(const EvalArgs& a) {
  Config cfg = load_config(a.common);
  const std::vector<double> thresholds =
      parse_thresholds(a.thresholds.empty() ? config_value(cfg, "eval.thresholds") : a.thresholds);
  if (thresholds.empty() || !std::is_sorted(thresholds.begin(), thresholds.end()))
    throw Abort{kUsage, "thresholds must be a non-empty ascending list"};
  const auto preds = label_files(a.pred);
  const auto gts = label_files(a.gt);
  std::vector<std::string> unpaired;
  for (const auto& [k, p] : preds)
    if (!gts.count(k)) unpaired.push_back(p.string());
  for (const auto& [k, p] : gts)
    if (!preds.count(k)) unpaired.push_back(p.string());
  if (!unpaired.empty()) {
    std::string msg = "unpaired label maps:";
    for (const auto& u : unpaired) msg += "\n  " + u;
    throw Abort{kMissing, msg};
  }
  if (preds.empty()) throw Abort{kMissing, "no label maps to evaluate"};

  std::vector<mrnom_match> pooled(thresholds.size());
  for (std::size_t i = 0; i < thresholds.size(); ++i) pooled[i] = {thresholds[i], 0, 0, 0, 0.0};
  std::ostringstream per_tile;
  per_tile << "tile,threshold,tp,fp,fn,ap\n";
  json summary;
  summary["tiles"] = json::object();
  for (const auto& [key, pred_path] : preds) {
    Labels p;
    Labels g;
    check(mrnom_labels_read(pred_path.string().c_str(), p.out()), pred_path.string(), kMissing);
    check(mrnom_labels_read(gts.at(key).string().c_str(), g.out()), gts.at(key).string(), kMissing);
    std::vector<mrnom_match> rows(thresholds.size());
    check(mrnom_eval(p.get(), g.get(), thresholds.data(), thresholds.size(), rows.data()), "eval " + key);
    json jt = json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      per_tile << key << ',' << fmt_row(rows[i]) << '\n';
      pooled[i].tp += rows[i].tp;
      pooled[i].fp += rows[i].fp;
      pooled[i].fn += rows[i].fn;
      jt.push_back({{"threshold", rows[i].threshold}, {"ap", rows[i].ap}});
    }
    summary["tiles"][key] = jt;
  }
  std::ostringstream pooled_csv;
  pooled_csv << "threshold,tp,fp,fn,ap\n";
  json jp = json::array();
  for (auto& r : pooled) {
    r.ap = mrnom_average_precision(r.tp, r.fp, r.fn);
    pooled_csv << fmt_row(r) << '\n';
    jp.push_back({{"threshold", r.threshold}, {"tp", r.tp}, {"fp", r.fp}, {"fn", r.fn}, {"ap", r.ap}});
  }
  summary["pooled"] = jp;
  summary["config_hash"] = config_hash(cfg);
  const fs::path out_dir = a.common.out;
  write_file(out_dir / "eval_per_tile.csv", per_tile.str());
  write_file(out_dir / "eval_pooled.csv", pooled_csv.str());
  write_file(out_dir / "eval_summary.json", summary.dump(2) + "\n");
  std::cout << pooled_csv.str();
  return kOk;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  Common common;
  int tiles = -1;
};

int run_synth(const SynthArgs& a) {
  Config cfg = load_config(a.common);
  const int n = a.tiles >= 0 ? a.tiles : std::stoi(config_value(cfg, "synth.tiles"));
  const std::uint64_t base = std::stoull(config_value(cfg, "synth.seed"));
  const fs::path out_dir = a.common.out;
  for (int i = 0; i < n; ++i) {
    Image img;
    Labels gt;
    char name[32];
    std::snprintf(name, sizeof name, "tile_%03d", i);
    const mrnom_status s = mrnom_synth(cfg.get(), base + static_cast<std::uint64_t>(i), img.out(), gt.out());
    if (s == MRNOM_ERR_DEGENERATE)
      throw Abort{kUsage, std::string(mrnom_last_error()) + "; lower synth.cells_max or raise synth.max_retries"};
    check(s, name);
    check(mrnom_image_write_png(img.get(), (out_dir / (std::string(name) + ".png")).string().c_str()), name);
    check(mrnom_labels_write(gt.get(), (out_dir / (std::string(name) + "_gt.png")).string().c_str()), name);
  }
  char* text = nullptr;
  check(mrnom_config_canonical(cfg.get(), &text), "config");
  write_file(out_dir / "synth_spec.txt", take(text));
  std::cout << "wrote " << n << " tiles to " << out_dir.string() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mrnom: cell instance segmentation for Nissl-stained tiles"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(mrnom_version()));

  SegmentArgs seg;
  auto* c_seg = app.add_subcommand("segment", "Segment tiles with trained models");
  add_common(c_seg, seg.common);
  c_seg->add_option("inputs", seg.inputs, "Tile files or directories")->required();
  c_seg->add_option("--merge-model", seg.merge_model, "Merge classifier")->required();
  c_seg->add_option("--filter-model", seg.filter_model, "False-positive filter")->required();
  c_seg->add_flag("--overlay", seg.overlay, "Also write boundary overlays");
  c_seg->add_option("--workers", seg.workers, "Parallel tiles (default: run.workers)")->check(CLI::PositiveNumber);

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "Train merge and filter models from annotated tiles (X.png + X_gt.png)");
  add_common(c_tr, tr.common);
  c_tr->add_option("inputs", tr.inputs, "Tile files or directories")->required();

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("eval", "Match predictions to ground truth and report AP");
  add_common(c_ev, ev.common);
  c_ev->add_option("pred", ev.pred, "Directory of *_labels.png")->required();
  c_ev->add_option("gt", ev.gt, "Directory of *_gt.png")->required();
  c_ev->add_option("--thresholds", ev.thresholds, "Comma-separated IoU thresholds");

  SynthArgs sy;
  auto* c_sy = app.add_subcommand("synth", "Generate synthetic annotated tiles");
  add_common(c_sy, sy.common);
  c_sy->add_option("--tiles", sy.tiles, "Number of tiles (default: synth.tiles)")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*c_seg) return run_segment(seg);
    if (*c_tr) return run_train(tr);
    if (*c_ev) return run_eval(ev);
    if (*c_sy) return run_synth(sy);
  } catch (const Abort& a) {
    std::cerr << "error: " << a.message << '\n';
    return a.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}
