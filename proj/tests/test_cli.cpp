#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "mrnom/mrnom.h"

namespace fs = std::filesystem;

namespace {

const fs::path& root() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "mrnom_test_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string("\"") + MRNOM_CLI_PATH + "\" " + args + " >" + (root() / "last.log").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string dir(const std::string& name) { return (root() / name).string(); }

void write_quick_config() {
  std::ofstream(root() / "quick.cfg") << "# smaller forests keep the test fast\nmerge.trees = 15\nfpf.trees = 15\n";
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
  write_quick_config();
  CHECK(run("") == 1);
  CHECK(run("frobnicate") == 1);
  CHECK(run("synth") == 1);
  CHECK(run("synth --out " + dir("x") + " --seed notanumber") == 1);
  std::ofstream(root() / "bad.cfg") << "no.such.key = 3\n";
  CHECK(run("synth --out " + dir("x") + " --config " + dir("bad.cfg")) == 1);
  CHECK(run("eval " + dir("x") + " " + dir("x") + " --out " + dir("x") + " --thresholds 0.9,0.5") == 1);
}

TEST_CASE("missing artifacts exit with 2") {
  CHECK(run("synth --out " + dir("x") + " --config " + dir("absent.cfg")) == 2);
  CHECK(run("segment " + dir("absent.png") + " --out " + dir("x") + " --merge-model " + dir("m.json") +
            " --filter-model " + dir("f.json")) == 2);
  CHECK(run("eval " + dir("absent_pred") + " " + dir("absent_gt") + " --out " + dir("x")) == 2);
  CHECK(run("train " + dir("absent_tiles") + " --out " + dir("x")) == 2);
}

TEST_CASE("degenerate training data exits with 3") {
  fs::create_directories(root() / "blank");
  std::vector<std::uint8_t> px(96 * 96, 205);
  std::vector<std::int32_t> empty(96 * 96, 0);
  mrnom_image* img = nullptr;
  mrnom_labels* gt = nullptr;
  REQUIRE(mrnom_image_from_pixels(96, 96, 1, px.data(), &img) == MRNOM_OK);
  REQUIRE(mrnom_labels_from_data(96, 96, empty.data(), &gt) == MRNOM_OK);
  REQUIRE(mrnom_image_write_png(img, (root() / "blank" / "t.png").string().c_str()) == MRNOM_OK);
  REQUIRE(mrnom_labels_write(gt, (root() / "blank" / "t_gt.png").string().c_str()) == MRNOM_OK);
  mrnom_image_free(img);
  mrnom_labels_free(gt);
  CHECK(run("train " + dir("blank") + " --out " + dir("blank_models")) == 3);
  CHECK(slurp(root() / "last.log").find("degenerate") != std::string::npos);

  fs::create_directories(root() / "orphan");
  fs::copy_file(root() / "blank" / "t.png", root() / "orphan" / "t.png", fs::copy_options::overwrite_existing);
  CHECK(run("train " + dir("orphan") + " --out " + dir("x")) == 2);
}

TEST_CASE("synth, train, segment and eval end to end") {
  write_quick_config();
  const std::string cfg = " --config " + dir("quick.cfg");
  REQUIRE(run("synth --out " + dir("tiles") + " --tiles 3 --seed 11" + cfg) == 0);
  CHECK(fs::exists(root() / "tiles" / "tile_000.png"));
  CHECK(fs::exists(root() / "tiles" / "tile_002_gt.png"));
  CHECK(fs::exists(root() / "tiles" / "synth_spec.txt"));

  REQUIRE(run("train " + dir("tiles") + " --out " + dir("models") + " --seed 5" + cfg) == 0);
  CHECK(fs::exists(root() / "models" / "merge_model.json"));
  CHECK(fs::exists(root() / "models" / "filter_model.json"));
  CHECK(slurp(root() / "models" / "train_manifest.json").find("merge_model_hash") != std::string::npos);

  const std::string models = " --merge-model " + dir("models/merge_model.json") + " --filter-model " +
                             dir("models/filter_model.json");
  CHECK(run("segment " + dir("tiles") + " --out " + dir("wrong") + " --merge-model " + dir("models/merge_model.json") +
            " --filter-model " + dir("models/merge_model.json")) == 2);
  REQUIRE(run("segment " + dir("tiles") + " --out " + dir("seg") + " --overlay --seed 5" + cfg + models) == 0);
  for (const char* f : {"tile_000_labels.png", "tile_001_overlay.png", "tile_002_manifest.json", "segment_report.csv",
                        "timings.json"})
    CHECK_MESSAGE(fs::exists(root() / "seg" / f), f);
  CHECK(!fs::exists(root() / "seg" / "tile_000_gt_labels.png"));
  const std::string manifest = slurp(root() / "seg" / "tile_000_manifest.json");
  for (const char* key : {"config_hash", "merge_model_hash", "filter_model_hash", "seed", "version"})
    CHECK_MESSAGE(manifest.find(key) != std::string::npos, key);

  REQUIRE(run("eval " + dir("seg") + " " + dir("tiles") + " --out " + dir("eval") + " --thresholds 0.5,0.75") == 0);
  const std::string pooled = slurp(root() / "eval" / "eval_pooled.csv");
  CHECK(pooled.rfind("threshold,tp,fp,fn,ap\n0.50,", 0) == 0);
  CHECK(pooled.find("\n0.75,") != std::string::npos);
  CHECK(fs::exists(root() / "eval" / "eval_per_tile.csv"));
  CHECK(fs::exists(root() / "eval" / "eval_summary.json"));
}
