#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pixcue/net.hpp"
#include "pixcue/types.hpp"

namespace pixcue {

struct TrainingConfig {
  double learning_rate = 1e-4;
  int epochs = 30;
  int batch_size = 1;
  uint64_t seed = 0;
  double dropout_fraction = 0.0;  // 0 trains deterministically
  double validation_fraction = 0.2;
  int n_bits = 8;
  NetArch arch{6, 16, 256};
  std::string mask_spec_json;  // echoed into the checkpoint for provenance
};

// One training pair. Several items may share an image_id (the same phantom
// paired with different masks); the train/validation split is per image so
// no subject leaks across the boundary.
struct TrainItem {
  int image_id = 0;
  RealImage image;
  SamplingMask mask;
};

struct Checkpoint {
  NetParams params;
  TrainingConfig config;
  double best_val_loss = 0.0;
  int best_epoch = 0;
  std::vector<double> train_loss_history;
  std::vector<double> val_loss_history;
  std::vector<int> train_image_ids;
  std::vector<int> val_image_ids;
};

// Raised when the loss goes non-finite; carries whatever history was recorded.
struct TrainDivergedError : std::runtime_error {
  TrainDivergedError(const std::string& msg, std::vector<double> train_hist,
                     std::vector<double> val_hist)
      : std::runtime_error(msg),
        train_loss_history(std::move(train_hist)),
        val_loss_history(std::move(val_hist)) {}
  std::vector<double> train_loss_history;
  std::vector<double> val_loss_history;
};

// Rectified Adam over a flat view of the parameter tensors.
class RAdam {
 public:
  RAdam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(NetParams& params, const NetParams& grad);

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

Checkpoint train(const std::vector<TrainItem>& dataset, const TrainingConfig& config);

}  // namespace pixcue
