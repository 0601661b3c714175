#include "pixcue/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pixcue/fft.hpp"
#include "pixcue/phantom.hpp"
#include "pixcue/quantize.hpp"

namespace pixcue {

RAdam::RAdam(double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  require(lr >= 0.0, "radam: learning rate must be >= 0");
}

void RAdam::step(NetParams& params, const NetParams& grad) {
  auto prefs = param_tensors(params);
  auto grefs = param_tensors(const_cast<NetParams&>(grad));
  if (m_.empty()) {
    for (const TensorRef& t : prefs) {
      m_.emplace_back(t.data->size(), 0.0);
      v_.emplace_back(t.data->size(), 0.0);
    }
  }
  ++t_;
  double b1t = std::pow(beta1_, static_cast<double>(t_));
  double b2t = std::pow(beta2_, static_cast<double>(t_));
  double rho_inf = 2.0 / (1.0 - beta2_) - 1.0;
  double rho_t = rho_inf - 2.0 * static_cast<double>(t_) * b2t / (1.0 - b2t);
  bool rectified = rho_t > 4.0;
  double rect = 0.0;
  if (rectified)
    rect = std::sqrt(((rho_t - 4.0) * (rho_t - 2.0) * rho_inf) /
                     ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t));

  for (size_t ti = 0; ti < prefs.size(); ++ti) {
    std::vector<double>& p = *prefs[ti].data;
    const std::vector<double>& g = *grefs[ti].data;
    std::vector<double>& m = m_[ti];
    std::vector<double>& v = v_[ti];
    for (size_t i = 0; i < p.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      double mhat = m[i] / (1.0 - b1t);
      if (rectified) {
        double vhat = std::sqrt(v[i] / (1.0 - b2t));
        p[i] -= lr_ * rect * mhat / (vhat + eps_);
      } else {
        p[i] -= lr_ * mhat;
      }
    }
  }
}

namespace {

struct PreparedItem {
  int image_id = 0;
  KSpaceGrid y_u;
  SamplingMask mask;
  QuantizedImage labels;
};

void zero_params(NetParams& p) {
  for (TensorRef& t : param_tensors(p)) std::fill(t.data->begin(), t.data->end(), 0.0);
}

void scale_params(NetParams& p, double s) {
  for (TensorRef& t : param_tensors(p))
    for (double& x : *t.data) x *= s;
}

}  // namespace

Checkpoint train(const std::vector<TrainItem>& dataset, const TrainingConfig& config) {
  require(!dataset.empty(), "train: empty dataset");
  require(config.learning_rate >= 0.0, "train: learning rate must be >= 0");
  require(config.epochs >= 1, "train: epochs must be >= 1");
  require(config.batch_size >= 1, "train: batch size must be >= 1");
  require(config.dropout_fraction >= 0.0 && config.dropout_fraction < 1.0,
          "train: dropout fraction must be in [0,1)");
  require(config.validation_fraction >= 0.0 && config.validation_fraction < 1.0,
          "train: validation fraction must be in [0,1)");

  std::vector<PreparedItem> items;
  items.reserve(dataset.size());
  for (const TrainItem& it : dataset) {
    PreparedItem pi;
    pi.image_id = it.image_id;
    pi.mask = it.mask;
    pi.y_u = undersample(dft2_unitary(to_complex(it.image)), it.mask);
    pi.labels = quantize(it.image, config.n_bits);
    items.push_back(std::move(pi));
  }

  // Per-image split so augmented copies of one phantom never straddle it.
  std::vector<int> ids;
  for (const PreparedItem& it : items)
    if (std::find(ids.begin(), ids.end(), it.image_id) == ids.end())
      ids.push_back(it.image_id);
  Rng split_rng(config.seed, 0xA11);
  split_rng.shuffle(ids);
  size_t n_val = static_cast<size_t>(
      std::llround(config.validation_fraction * static_cast<double>(ids.size())));
  n_val = std::min(n_val, ids.size() - 1);
  std::vector<int> val_ids(ids.end() - static_cast<long>(n_val), ids.end());
  std::vector<int> train_ids(ids.begin(), ids.end() - static_cast<long>(n_val));

  auto is_val = [&val_ids](int id) {
    return std::find(val_ids.begin(), val_ids.end(), id) != val_ids.end();
  };
  std::vector<size_t> train_idx, val_idx;
  for (size_t i = 0; i < items.size(); ++i)
    (is_val(items[i].image_id) ? val_idx : train_idx).push_back(i);
  require(!train_idx.empty(), "train: no training items after split");

  NetArch arch = config.arch;
  arch.classes = 1 << config.n_bits;
  NetParams params = init_params(arch, config.seed);
  NetParams grad = zeros_like(params);
  RAdam opt(config.learning_rate);

  Checkpoint best;
  best.config = config;
  best.config.arch = arch;
  best.train_image_ids = train_ids;
  best.val_image_ids = val_ids;
  std::sort(best.train_image_ids.begin(), best.train_image_ids.end());
  std::sort(best.val_image_ids.begin(), best.val_image_ids.end());
  best.best_val_loss = std::numeric_limits<double>::infinity();

  std::vector<double> train_hist, val_hist;
  uint64_t drop_counter = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<size_t> order = train_idx;
    Rng epoch_rng(config.seed, 0x5E0000ull + static_cast<uint64_t>(epoch));
    epoch_rng.shuffle(order);

    double epoch_loss = 0.0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(config.batch_size)) {
      size_t end = std::min(order.size(), start + static_cast<size_t>(config.batch_size));
      zero_params(grad);
      double batch_loss = 0.0;
      for (size_t bi = start; bi < end; ++bi) {
        const PreparedItem& it = items[order[bi]];
        ForwardMode mode = ForwardMode::deterministic();
        if (config.dropout_fraction > 0.0)
          mode = ForwardMode::with_dropout(config.dropout_fraction,
                                           derive_seed(config.seed, ++drop_counter));
        try {
          batch_loss += net_loss_and_gradients(params, it.y_u, it.mask, it.labels, mode, grad);
        } catch (const std::runtime_error& e) {
          throw TrainDivergedError(std::string("train: diverged at epoch ") +
                                       std::to_string(epoch + 1) + ": " + e.what(),
                                   train_hist, val_hist);
        }
      }
      double inv = 1.0 / static_cast<double>(end - start);
      scale_params(grad, inv);
      epoch_loss += batch_loss;
      opt.step(params, grad);
    }
    epoch_loss /= static_cast<double>(order.size());
    if (!std::isfinite(epoch_loss))
      throw TrainDivergedError("train: non-finite training loss at epoch " +
                                   std::to_string(epoch + 1),
                               train_hist, val_hist);
    train_hist.push_back(epoch_loss);

    double val_loss = epoch_loss;
    if (!val_idx.empty()) {
      // Evaluate the f32-snapped view so the recorded loss matches what a
      // reloaded checkpoint reproduces.
      NetParams eval = params;
      snap_params_to_f32(eval);
      double acc = 0.0;
      for (size_t idx : val_idx) {
        const PreparedItem& it = items[idx];
        acc += net_loss(eval, it.y_u, it.mask, it.labels, ForwardMode::deterministic());
      }
      val_loss = acc / static_cast<double>(val_idx.size());
    }
    if (!std::isfinite(val_loss))
      throw TrainDivergedError("train: non-finite validation loss at epoch " +
                                   std::to_string(epoch + 1),
                               train_hist, val_hist);
    val_hist.push_back(val_loss);

    if (val_loss < best.best_val_loss) {
      best.best_val_loss = val_loss;
      best.best_epoch = epoch + 1;
      best.params = params;
      snap_params_to_f32(best.params);
    }
  }

  best.train_loss_history = std::move(train_hist);
  best.val_loss_history = std::move(val_hist);
  return best;
}

}  // namespace pixcue
