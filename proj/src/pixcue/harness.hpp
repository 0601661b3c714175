#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pixcue/metrics.hpp"
#include "pixcue/phantom.hpp"
#include "pixcue/train.hpp"
#include "pixcue/types.hpp"

namespace pixcue {

// Desk-scale defaults for every command; user configs are merged on top
// (JSON merge patch, so nested objects override field by field).
nlohmann::json default_config();

// Parse + merge a user config file over the defaults. Empty path = defaults.
// A seed override rederives every per-component seed from the given value.
nlohmann::json load_config(const std::string& config_path,
                           std::optional<uint64_t> seed_override);

struct PhantomRecord {
  int id = 0;
  std::string profile;
  RealImage image;
};

std::vector<PhantomRecord> build_phantom_set(const nlohmann::json& phantom_cfg);

// JSON forms of the forward-model specs (see README for the schema).
Ellipse ellipse_from_json(const nlohmann::json& j);
PhantomSpec phantom_spec_from_json(const nlohmann::json& j);

// Mask described by config; `salt` makes per-image random masks reproducible.
SamplingMask mask_from_config(const nlohmann::json& mask_cfg, int n, uint64_t salt);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct CommandResult {
  int exit_code = 0;
  std::vector<CheckResult> checks;
  std::filesystem::path manifest_path;
};

CommandResult run_simulate(const nlohmann::json& cfg, const std::filesystem::path& out_dir);
CommandResult run_train(const nlohmann::json& cfg, const std::filesystem::path& out_dir);
CommandResult run_reconstruct(const std::filesystem::path& checkpoint,
                              const std::filesystem::path& kspace,
                              const std::filesystem::path& mask,
                              const std::filesystem::path& out_dir);

struct UncertaintyRequest {
  std::string method;  // pixcue-exact | pixcue-fast | mc | mc-meandist
  std::string volume_path;
  std::string checkpoint_path;
  std::string kspace_path;
  std::string mask_path;
  int mc_passes = 50;
  double mc_dropout = 0.2;
  uint64_t mc_seed = 0;
};

CommandResult run_uncertainty(const UncertaintyRequest& req,
                              const std::filesystem::path& out_dir);

CommandResult run_experiment(const nlohmann::json& cfg, const std::filesystem::path& out_dir,
                             bool check);

CommandResult run_report(const std::filesystem::path& report_dir);

// Training-set assembly shared by run_train and the acceptance suite: each
// phantom paired with `masks_per_image` seeded mask draws.
std::vector<TrainItem> assemble_training_items(const std::vector<PhantomRecord>& phantoms,
                                               const nlohmann::json& mask_cfg,
                                               int masks_per_image);

TrainingConfig training_config_from(const nlohmann::json& cfg);

}  // namespace pixcue
