#include "mrnom/mrnom.h"

#include <cstring>
#include <new>
#include <string>

#include "mrnom/digest.hpp"
#include "mrnom/image_io.hpp"
#include "mrnom/pipeline.hpp"

struct mrnom_config {
  mrnom::PipelineConfig cfg;
};
struct mrnom_image {
  mrnom::Image8 img;
};
struct mrnom_labels {
  mrnom::LabelMap lb;
};
struct mrnom_model {
  mrnom::ForestModel model;
  std::string text;  // serialised form, kept for hashing and saving
};
struct mrnom_trainer {
  mrnom::PipelineConfig cfg;
  std::vector<mrnom::AnnotatedTile> tiles;
  mrnom::TrainingSet merge_set;
  mrnom::TrainingSet filter_set;
};

namespace {

thread_local std::string g_last_error;

mrnom_status to_status(mrnom::ErrorCode c) {
  switch (c) {
    case mrnom::ErrorCode::InvalidArgument: return MRNOM_ERR_INVALID_ARGUMENT;
    case mrnom::ErrorCode::Precondition: return MRNOM_ERR_PRECONDITION;
    case mrnom::ErrorCode::Degenerate: return MRNOM_ERR_DEGENERATE;
    case mrnom::ErrorCode::Io: return MRNOM_ERR_IO;
    case mrnom::ErrorCode::Schema: return MRNOM_ERR_SCHEMA;
    case mrnom::ErrorCode::Internal: return MRNOM_ERR_INTERNAL;
  }
  return MRNOM_ERR_INTERNAL;
}

template <typename F>
mrnom_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return MRNOM_OK;
  } catch (const mrnom::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return MRNOM_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MRNOM_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) mrnom::fail(mrnom::ErrorCode::InvalidArgument, std::string(what) + " is NULL");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void copy_hex(const std::string& hex, char* buf, std::size_t cap) {
  need(buf, "buf");
  if (cap < hex.size() + 1) mrnom::fail(mrnom::ErrorCode::InvalidArgument, "buffer too small for hash");
  std::memcpy(buf, hex.c_str(), hex.size() + 1);
}

mrnom_model* wrap(mrnom::ForestModel m) {
  auto* h = new mrnom_model{std::move(m), {}};
  h->text = h->model.to_json();
  return h;
}

}  // namespace

extern "C" {

const char* mrnom_version(void) { return "1.0.0"; }
const char* mrnom_last_error(void) { return g_last_error.c_str(); }
void mrnom_string_free(char* s) { std::free(s); }

mrnom_status mrnom_config_new(mrnom_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new mrnom_config{};
  });
}

mrnom_status mrnom_config_parse(const char* text, mrnom_config** out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    *out = new mrnom_config{mrnom::PipelineConfig::parse(text)};
  });
}

mrnom_status mrnom_config_load(const char* path, mrnom_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new mrnom_config{mrnom::PipelineConfig::parse(mrnom::read_text(path))};
  });
}

mrnom_status mrnom_config_set(mrnom_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    need(cfg, "cfg");
    need(key, "key");
    need(value, "value");
    mrnom::PipelineConfig next = cfg->cfg;
    next.set(key, value);
    next.validate();
    cfg->cfg = std::move(next);
  });
}

mrnom_status mrnom_config_get(const mrnom_config* cfg, const char* key, char** value) {
  return guarded([&] {
    need(cfg, "cfg");
    need(key, "key");
    need(value, "value");
    const std::string text = cfg->cfg.canonical();
    const std::string prefix = std::string(key) + " = ";
    std::size_t pos = 0;
    while (pos < text.size()) {
      const std::size_t end = text.find('\n', pos);
      const std::string line = text.substr(pos, end - pos);
      if (line.rfind(prefix, 0) == 0) {
        *value = dup(line.substr(prefix.size()));
        return;
      }
      pos = end + 1;
    }
    mrnom::fail(mrnom::ErrorCode::Schema, std::string("config: unknown key '") + key + "'");
  });
}

mrnom_status mrnom_config_set_seed(mrnom_config* cfg, uint64_t seed) {
  return guarded([&] {
    need(cfg, "cfg");
    cfg->cfg.set_seed(seed);
  });
}

mrnom_status mrnom_config_canonical(const mrnom_config* cfg, char** text) {
  return guarded([&] {
    need(cfg, "cfg");
    need(text, "text");
    *text = dup(cfg->cfg.canonical());
  });
}

mrnom_status mrnom_config_hash(const mrnom_config* cfg, char* buf, size_t cap) {
  return guarded([&] {
    need(cfg, "cfg");
    copy_hex(cfg->cfg.hash(), buf, cap);
  });
}

void mrnom_config_free(mrnom_config* cfg) { delete cfg; }

mrnom_status mrnom_image_read(const char* path, mrnom_image** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new mrnom_image{mrnom::read_image(path)};
  });
}

mrnom_status mrnom_image_from_pixels(int width, int height, int channels, const uint8_t* pixels, mrnom_image** out) {
  return guarded([&] {
    need(pixels, "pixels");
    need(out, "out");
    mrnom::require(width > 0 && height > 0 && (channels == 1 || channels == 3), mrnom::ErrorCode::InvalidArgument,
                   "bad image dimensions");
    mrnom::Image8 img;
    img.width = width;
    img.height = height;
    img.channels = channels;
    img.pixels.assign(pixels, pixels + static_cast<std::size_t>(width) * height * channels);
    *out = new mrnom_image{std::move(img)};
  });
}

mrnom_status mrnom_image_info(const mrnom_image* img, int* width, int* height, int* channels) {
  return guarded([&] {
    need(img, "img");
    if (width) *width = img->img.width;
    if (height) *height = img->img.height;
    if (channels) *channels = img->img.channels;
  });
}

mrnom_status mrnom_image_write_png(const mrnom_image* img, const char* path) {
  return guarded([&] {
    need(img, "img");
    need(path, "path");
    mrnom::write_png(path, img->img);
  });
}

void mrnom_image_free(mrnom_image* img) { delete img; }

mrnom_status mrnom_labels_read(const char* path, mrnom_labels** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new mrnom_labels{mrnom::read_label_png(path)};
  });
}

mrnom_status mrnom_labels_from_data(int width, int height, const int32_t* data, mrnom_labels** out) {
  return guarded([&] {
    need(data, "data");
    need(out, "out");
    mrnom::LabelMap lb(width, height);
    std::memcpy(lb.data().data(), data, lb.size() * sizeof(int32_t));
    for (int32_t v : lb.data()) mrnom::require(v >= 0, mrnom::ErrorCode::InvalidArgument, "negative label");
    *out = new mrnom_labels{std::move(lb)};
  });
}

mrnom_status mrnom_labels_data(const mrnom_labels* lb, int* width, int* height, const int32_t** data) {
  return guarded([&] {
    need(lb, "lb");
    if (width) *width = lb->lb.width();
    if (height) *height = lb->lb.height();
    if (data) *data = lb->lb.data().data();
  });
}

mrnom_status mrnom_labels_count(const mrnom_labels* lb, int* count) {
  return guarded([&] {
    need(lb, "lb");
    need(count, "count");
    std::vector<int32_t> ids(lb->lb.data().begin(), lb->lb.data().end());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    *count = static_cast<int>(ids.size()) - (!ids.empty() && ids.front() == 0 ? 1 : 0);
  });
}

mrnom_status mrnom_labels_write(const mrnom_labels* lb, const char* path) {
  return guarded([&] {
    need(lb, "lb");
    need(path, "path");
    mrnom::write_label_png(path, lb->lb);
  });
}

void mrnom_labels_free(mrnom_labels* lb) { delete lb; }

mrnom_status mrnom_model_load(const char* path, mrnom_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = wrap(mrnom::ForestModel::from_json(mrnom::read_text(path)));
  });
}

mrnom_status mrnom_model_save(const mrnom_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    mrnom::write_text(path, model->text);
  });
}

mrnom_status mrnom_model_hash(const mrnom_model* model, char* buf, size_t cap) {
  return guarded([&] {
    need(model, "model");
    copy_hex(mrnom::sha256_hex(model->text), buf, cap);
  });
}

mrnom_status mrnom_model_kind(const mrnom_model* model, char** kind) {
  return guarded([&] {
    need(model, "model");
    need(kind, "kind");
    *kind = dup(model->model.kind);
  });
}

void mrnom_model_free(mrnom_model* model) { delete model; }

mrnom_status mrnom_segment(const mrnom_config* cfg, const mrnom_model* merge_model, const mrnom_model* filter_model,
                           const mrnom_image* tile, mrnom_labels** out, char** timings_json) {
  return guarded([&] {
    need(cfg, "cfg");
    need(merge_model, "merge_model");
    need(filter_model, "filter_model");
    need(tile, "tile");
    need(out, "out");
    mrnom::Segmentation s = mrnom::segment_tile(tile->img, cfg->cfg, merge_model->model, filter_model->model);
    if (timings_json) {
      std::string j = "{";
      for (std::size_t i = 0; i < s.timings.size(); ++i)
        j += (i ? ", \"" : "\"") + s.timings[i].first + "\": " + std::to_string(s.timings[i].second);
      *timings_json = dup(j + "}");
    }
    *out = new mrnom_labels{std::move(s.labels)};
  });
}

mrnom_status mrnom_write_overlay(const mrnom_image* tile, const mrnom_labels* lb, const char* path) {
  return guarded([&] {
    need(tile, "tile");
    need(lb, "lb");
    need(path, "path");
    mrnom::write_png(path, mrnom::boundary_overlay(mrnom::luma(tile->img), lb->lb));
  });
}

mrnom_status mrnom_trainer_new(const mrnom_config* cfg, mrnom_trainer** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out, "out");
    *out = new mrnom_trainer{cfg->cfg, {}, {}, {}};
  });
}

mrnom_status mrnom_trainer_add(mrnom_trainer* tr, const mrnom_image* tile, const mrnom_labels* gt) {
  return guarded([&] {
    need(tr, "trainer");
    need(tile, "tile");
    need(gt, "gt");
    mrnom::require(gt->lb.width() == tile->img.width && gt->lb.height() == tile->img.height,
                   mrnom::ErrorCode::InvalidArgument, "ground truth does not match its tile");
    tr->tiles.push_back({tile->img, gt->lb});
  });
}

mrnom_status mrnom_trainer_run(mrnom_trainer* tr, mrnom_model** merge_model, mrnom_model** filter_model) {
  return guarded([&] {
    need(tr, "trainer");
    need(merge_model, "merge_model");
    need(filter_model, "filter_model");
    mrnom::TrainedModels m = mrnom::train_models(tr->tiles, tr->cfg);
    tr->merge_set = std::move(m.merge_set);
    tr->filter_set = std::move(m.filter_set);
    *merge_model = wrap(std::move(m.merge));
    *filter_model = wrap(std::move(m.filter));
  });
}

mrnom_status mrnom_trainer_export(const mrnom_trainer* tr, char** merge_csv, char** filter_csv) {
  return guarded([&] {
    need(tr, "trainer");
    if (merge_csv) *merge_csv = dup(tr->merge_set.to_csv());
    if (filter_csv) *filter_csv = dup(tr->filter_set.to_csv());
  });
}

void mrnom_trainer_free(mrnom_trainer* tr) { delete tr; }

mrnom_status mrnom_eval(const mrnom_labels* pred, const mrnom_labels* gt, const double* thresholds, size_t n,
                        mrnom_match* rows) {
  return guarded([&] {
    need(pred, "pred");
    need(gt, "gt");
    need(thresholds, "thresholds");
    need(rows, "rows");
    const auto reports = mrnom::ap_curve(pred->lb, gt->lb, std::vector<double>(thresholds, thresholds + n));
    for (std::size_t i = 0; i < n; ++i)
      rows[i] = mrnom_match{reports[i].threshold, reports[i].tp, reports[i].fp, reports[i].fn, reports[i].ap};
  });
}

double mrnom_average_precision(int tp, int fp, int fn) { return mrnom::average_precision(tp, fp, fn); }

mrnom_status mrnom_write_match_overlay(const mrnom_image* tile, const mrnom_labels* pred, const mrnom_labels* gt,
                                       double threshold, const char* path) {
  return guarded([&] {
    need(pred, "pred");
    need(gt, "gt");
    need(path, "path");
    const mrnom::GrayMap base =
        tile ? mrnom::luma(tile->img) : mrnom::GrayMap(gt->lb.width(), gt->lb.height(), 255.0, {0.0, 255.0});
    const auto report = mrnom::match_at_threshold(mrnom::iou_matrix(pred->lb, gt->lb), threshold);
    mrnom::write_png(path, mrnom::match_overlay(base, pred->lb, gt->lb, report));
  });
}

mrnom_status mrnom_synth(const mrnom_config* cfg, uint64_t seed, mrnom_image** tile, mrnom_labels** gt) {
  return guarded([&] {
    need(cfg, "cfg");
    need(tile, "tile");
    need(gt, "gt");
    mrnom::SynthSpec spec = cfg->cfg.synth;
    spec.seed = seed;
    mrnom::SynthTile t = mrnom::synth_generate(spec);
    *tile = new mrnom_image{std::move(t.image)};
    *gt = new mrnom_labels{std::move(t.gt)};
  });
}

}  // extern "C"
