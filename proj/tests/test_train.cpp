#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "pixcue/io.hpp"
#include "pixcue/mask.hpp"
#include "pixcue/rng.hpp"
#include "pixcue/train.hpp"

using namespace pixcue;
namespace fs = std::filesystem;

namespace {

RealImage random_unit_image(int n, uint64_t seed) {
  Rng rng(seed);
  RealImage img(n, n);
  for (double& x : img.v) x = rng.uniform();
  return img;
}

std::vector<TrainItem> tiny_dataset(int n_images, int n, uint64_t seed) {
  std::vector<TrainItem> items;
  for (int i = 0; i < n_images; ++i) {
    TrainItem it;
    it.image_id = i;
    it.image = random_unit_image(n, seed + static_cast<uint64_t>(i));
    it.mask = make_mask_random(n, 2.0, 0.125, seed + 100 + static_cast<uint64_t>(i));
    items.push_back(std::move(it));
  }
  return items;
}

TrainingConfig tiny_config() {
  TrainingConfig cfg;
  cfg.learning_rate = 1e-4;
  cfg.epochs = 1;
  cfg.batch_size = 1;
  cfg.seed = 7;
  cfg.validation_fraction = 0.2;
  cfg.n_bits = 4;
  cfg.arch = NetArch{2, 3, 16};
  return cfg;
}

bool params_equal(const NetParams& a, const NetParams& b) {
  NetParams ma = a, mb = b;
  auto ra = param_tensors(ma);
  auto rb = param_tensors(mb);
  for (size_t t = 0; t < ra.size(); ++t)
    if (*ra[t].data != *rb[t].data) return false;
  return true;
}

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("pixcue_train_test_" +
            std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()) +
            "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("one epoch with lr=0 leaves parameters at their init values") {
  TrainingConfig cfg = tiny_config();
  cfg.learning_rate = 0.0;
  std::vector<TrainItem> items = tiny_dataset(1, 16, 1);
  Checkpoint ckpt = train(items, cfg);
  CHECK(ckpt.train_loss_history.size() == 1);
  CHECK(ckpt.val_loss_history.size() == 1);

  NetArch arch = cfg.arch;
  arch.classes = 1 << cfg.n_bits;
  NetParams init = init_params(arch, cfg.seed);
  CHECK(params_equal(ckpt.params, init));
}

TEST_CASE("training is deterministic given config and seed") {
  TrainingConfig cfg = tiny_config();
  cfg.epochs = 3;
  cfg.learning_rate = 1e-3;
  std::vector<TrainItem> items = tiny_dataset(5, 16, 2);
  Checkpoint a = train(items, cfg);
  Checkpoint b = train(items, cfg);
  CHECK(params_equal(a.params, b.params));
  CHECK(a.train_loss_history == b.train_loss_history);
  CHECK(a.val_loss_history == b.val_loss_history);
  CHECK(a.val_image_ids == b.val_image_ids);
  CHECK(a.best_epoch == b.best_epoch);
}

TEST_CASE("loss decreases over a short aggressive run") {
  TrainingConfig cfg = tiny_config();
  cfg.epochs = 10;
  cfg.learning_rate = 1e-2;
  cfg.validation_fraction = 0.0;
  std::vector<TrainItem> items = tiny_dataset(4, 16, 3);
  Checkpoint ckpt = train(items, cfg);
  CHECK(ckpt.train_loss_history.back() < ckpt.train_loss_history.front());
}

TEST_CASE("best validation loss matches the minimum of the history") {
  TrainingConfig cfg = tiny_config();
  cfg.epochs = 5;
  cfg.learning_rate = 5e-3;
  std::vector<TrainItem> items = tiny_dataset(5, 16, 4);
  Checkpoint ckpt = train(items, cfg);
  double min_val =
      *std::min_element(ckpt.val_loss_history.begin(), ckpt.val_loss_history.end());
  CHECK(ckpt.best_val_loss == min_val);
  CHECK(ckpt.best_epoch >= 1);
  CHECK(ckpt.val_loss_history[static_cast<size_t>(ckpt.best_epoch - 1)] == min_val);
}

TEST_CASE("per-image split keeps augmented copies on one side") {
  TrainingConfig cfg = tiny_config();
  cfg.epochs = 1;
  cfg.validation_fraction = 0.4;
  // two mask variants per image
  std::vector<TrainItem> items = tiny_dataset(5, 16, 5);
  std::vector<TrainItem> doubled = items;
  for (TrainItem it : items) {
    it.mask = make_mask_random(16, 2.0, 0.125, 999 + static_cast<uint64_t>(it.image_id));
    doubled.push_back(std::move(it));
  }
  Checkpoint ckpt = train(doubled, cfg);
  CHECK(ckpt.val_image_ids.size() == 2);
  CHECK(ckpt.train_image_ids.size() == 3);
  for (int id : ckpt.val_image_ids)
    CHECK(std::find(ckpt.train_image_ids.begin(), ckpt.train_image_ids.end(), id) ==
          ckpt.train_image_ids.end());
}

TEST_CASE("divergence raises an error carrying the recorded history") {
  TrainingConfig cfg = tiny_config();
  cfg.epochs = 5;
  cfg.learning_rate = 1e8;
  std::vector<TrainItem> items = tiny_dataset(2, 16, 6);
  bool threw = false;
  try {
    train(items, cfg);
  } catch (const TrainDivergedError& e) {
    threw = true;
    CHECK(std::string(e.what()).find("diverged") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("empty dataset is rejected") {
  CHECK_THROWS_AS(train({}, tiny_config()), std::invalid_argument);
}

TEST_CASE("checkpoint save/load round-trips tensors bit-identically") {
  TempDir tmp;
  TrainingConfig cfg = tiny_config();
  cfg.epochs = 2;
  cfg.learning_rate = 1e-3;
  cfg.mask_spec_json = R"({"kind":"random","accel":2.0,"center_fraction":0.125,"seed":1})";
  std::vector<TrainItem> items = tiny_dataset(3, 16, 8);
  Checkpoint ckpt = train(items, cfg);

  fs::path path = tmp.path / "ckpt.pxc";
  save_checkpoint(ckpt, path);
  Checkpoint loaded = load_checkpoint(path);

  CHECK(params_equal(ckpt.params, loaded.params));
  CHECK(loaded.best_val_loss == ckpt.best_val_loss);
  CHECK(loaded.best_epoch == ckpt.best_epoch);
  CHECK(loaded.train_loss_history.size() == ckpt.train_loss_history.size());
  CHECK(loaded.val_image_ids == ckpt.val_image_ids);
  CHECK(loaded.config.n_bits == cfg.n_bits);
  CHECK(loaded.config.learning_rate == cfg.learning_rate);

  // a second save must produce an identical file
  fs::path path2 = tmp.path / "ckpt2.pxc";
  save_checkpoint(loaded, path2);
  CHECK(file_crc32(path) == file_crc32(path2));
}

TEST_CASE("checkpoint loader rejects bad magic and truncation") {
  TempDir tmp;
  TrainingConfig cfg = tiny_config();
  std::vector<TrainItem> items = tiny_dataset(1, 16, 9);
  Checkpoint ckpt = train(items, cfg);
  fs::path path = tmp.path / "ckpt.pxc";
  save_checkpoint(ckpt, path);

  SUBCASE("bad magic") {
    std::string data;
    {
      std::ifstream in(path, std::ios::binary);
      data.assign(std::istreambuf_iterator<char>(in), {});
    }
    data[0] = 'X';
    fs::path bad = tmp.path / "bad.pxc";
    atomic_write_file(bad, data);
    CHECK_THROWS_AS(load_checkpoint(bad), FormatError);
  }
  SUBCASE("truncated tensor data names the missing tensor") {
    std::string data;
    {
      std::ifstream in(path, std::ios::binary);
      data.assign(std::istreambuf_iterator<char>(in), {});
    }
    fs::path cut = tmp.path / "cut.pxc";
    atomic_write_file(cut, data.substr(0, data.size() - 200));
    try {
      load_checkpoint(cut);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find("tensor") != std::string::npos);
      CHECK(std::string(e.what()).find("head.") != std::string::npos);
    }
  }
}

TEST_CASE("radam with zero gradients never moves parameters") {
  NetArch arch{2, 3, 8};
  NetParams params = init_params(arch, 21);
  NetParams before = params;
  NetParams zero_grad = zeros_like(params);
  RAdam opt(1e-3);
  for (int i = 0; i < 10; ++i) opt.step(params, zero_grad);
  CHECK(params_equal(params, before));
}
