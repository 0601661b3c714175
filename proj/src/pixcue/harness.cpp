#include "pixcue/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "pixcue/fft.hpp"
#include "pixcue/forward_model.hpp"
#include "pixcue/io.hpp"
#include "pixcue/quantize.hpp"
#include "pixcue/uncertainty.hpp"
#include "pixcue/version.hpp"

namespace pixcue {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                     start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// Collects every emitted file so the manifest can account for all of them.
class ManifestBuilder {
 public:
  ManifestBuilder(fs::path out_dir, std::string command)
      : out_dir_(std::move(out_dir)), command_(std::move(command)) {
    fs::create_directories(out_dir_);
  }

  const fs::path& dir() const { return out_dir_; }

  fs::path target(const std::string& name) const { return out_dir_ / name; }

  void add(const fs::path& path) {
    char crc[16];
    std::snprintf(crc, sizeof(crc), "%08x", file_crc32(path));
    outputs_.push_back({{"path", fs::relative(path, out_dir_).string()},
                        {"crc32", crc},
                        {"bytes", fs::file_size(path)}});
  }

  void timing(const std::string& name, double ms) { timings_[name] = ms; }
  void note(const std::string& key, const json& value) { notes_[key] = value; }

  fs::path write(const json& config_echo, const std::vector<CheckResult>& checks) {
    json m;
    m["tool"] = kToolName;
    m["tool_version"] = kToolVersion;
    m["rng"] = {{"name", kRngName}, {"version", kRngVersion}};
    m["command"] = command_;
    m["config"] = config_echo;
    m["outputs"] = outputs_;
    m["timings_ms"] = timings_;
    if (!notes_.empty()) m["notes"] = notes_;
    if (!checks.empty()) {
      json arr = json::array();
      for (const CheckResult& c : checks)
        arr.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
      m["checks"] = arr;
    }
    fs::path path = out_dir_ / "manifest.json";
    atomic_write_file(path, m.dump(2) + "\n");
    return path;
  }

 private:
  fs::path out_dir_;
  std::string command_;
  json outputs_ = json::array();
  json timings_ = json::object();
  json notes_ = json::object();
};

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) {
    append_row(header);
    rows_ = 0;  // header does not count
  }

  void append_row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) body_ += ",";
      body_ += cells[i];
    }
    body_ += "\n";
    ++rows_;
  }

  int rows() const { return rows_; }

  void save(ManifestBuilder& mb, const std::string& name) const {
    fs::path p = mb.target(name);
    atomic_write_file(p, body_);
    mb.add(p);
  }

 private:
  std::string body_;
  int rows_ = 0;
};

std::string pad_id(int id) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03d", id);
  return buf;
}

// Base anatomy: a shell, an interior, a few lobes and small bright/dark
// features so the spectrum carries structure well beyond the center lines.
std::vector<Ellipse> base_ellipses() {
  auto e = [](double cx, double cy, double ax, double ay, double ang, double in) {
    return Ellipse{cx, cy, ax, ay, ang, in, Blend::kAdd};
  };
  return {
      e(0.500, 0.500, 0.345, 0.445, 0.00, 0.74),
      e(0.500, 0.500, 0.315, 0.415, 0.00, -0.36),
      e(0.500, 0.345, 0.160, 0.105, 0.00, 0.22),
      e(0.425, 0.530, 0.055, 0.140, 0.32, -0.20),
      e(0.575, 0.530, 0.055, 0.140, -0.32, -0.20),
      e(0.500, 0.665, 0.095, 0.065, 0.00, 0.27),
      e(0.360, 0.640, 0.032, 0.050, 0.60, 0.26),
      e(0.645, 0.365, 0.040, 0.028, -0.45, -0.16),
      e(0.550, 0.615, 0.024, 0.024, 0.00, 0.30),
  };
}

uint64_t cfg_seed(const json& cfg, const char* key) { return cfg.at(key).get<uint64_t>(); }

struct ValCase {
  int id = 0;
  std::string profile;
  RealImage ref;
  SamplingMask mask;  // the training-style mask for this image
  KSpaceGrid y_full;  // fully sampled, noiseless
};

struct ExperimentContext {
  json cfg;
  Checkpoint checkpoint;
  std::vector<PhantomRecord> phantoms;
  std::vector<ValCase> val;
  double foreground_threshold = 0.05;
};

RealImage reconstruct_expectation(const Checkpoint& ckpt, const KSpaceGrid& y_u,
                                  const SamplingMask& m, ProbabilityVolume* probs_out) {
  ProbabilityVolume probs =
      net_forward(y_u, m, ckpt.params, ForwardMode::deterministic());
  RealImage recon = expectation_image(probs);
  if (probs_out) *probs_out = std::move(probs);
  return recon;
}

Checkpoint obtain_checkpoint(const json& cfg, ManifestBuilder& mb, json& echo_notes);

ExperimentContext make_context(const json& cfg, ManifestBuilder& mb, json& notes) {
  ExperimentContext ctx;
  ctx.cfg = cfg;
  ctx.foreground_threshold = cfg.at("foreground_threshold").get<double>();
  ctx.phantoms = build_phantom_set(cfg.at("phantoms"));
  ctx.checkpoint = obtain_checkpoint(cfg, mb, notes);

  std::set<int> val_ids(ctx.checkpoint.val_image_ids.begin(),
                        ctx.checkpoint.val_image_ids.end());
  for (const PhantomRecord& pr : ctx.phantoms) {
    if (!val_ids.count(pr.id)) continue;
    ValCase vc;
    vc.id = pr.id;
    vc.profile = pr.profile;
    vc.ref = pr.image;
    vc.mask = mask_from_config(cfg.at("mask"), pr.image.rows,
                               static_cast<uint64_t>(pr.id) * 1000);
    vc.y_full = dft2_unitary(to_complex(pr.image));
    ctx.val.push_back(std::move(vc));
  }
  require(!ctx.val.empty(),
          "experiment: checkpoint validation ids do not match the phantom set");
  return ctx;
}

std::vector<std::string> metrics_row(int id, const std::string& profile, double accel,
                                     double sigma, double nmse_v, double psnr_v,
                                     double ssim_v, double unc_exact, double unc_fast,
                                     double unc_mc) {
  return {pad_id(id),          profile,
          fmt_double(accel),   fmt_double(sigma),
          fmt_double(nmse_v),  fmt_double(psnr_v),
          fmt_double(ssim_v),  fmt_double(unc_exact),
          fmt_double(unc_fast), fmt_double(unc_mc)};
}

const std::vector<std::string> kMetricsHeader = {
    "id",      "contrast_profile", "accel", "noise_sigma", "nmse",
    "psnr_db", "ssim",             "mean_uncertainty_pixcue_exact",
    "mean_uncertainty_pixcue_fast", "mean_uncertainty_mc"};

}  // namespace

json default_config() {
  json cfg;
  cfg["id"] = "exp1";
  cfg["checkpoint"] = "";
  cfg["foreground_threshold"] = 0.05;
  cfg["phantoms"] = {{"size", 64},
                     {"counts", {{"t1", 13}, {"t2", 13}, {"flair", 12}, {"identity", 12}}},
                     {"seed", 20240901},
                     {"jitter", 0.35},
                     {"extra_blobs_min", 3},
                     {"extra_blobs_max", 7}};
  cfg["mask"] = {{"kind", "random"}, {"accel", 4.0}, {"center_fraction", 0.08}, {"seed", 41}};
  cfg["alt_mask"] = {{"kind", "random"}, {"accel", 6.0}, {"center_fraction", 0.06}, {"seed", 43}};
  cfg["noise_sigmas"] = {0.0, 0.005, 0.01, 0.02};
  cfg["noise_seed"] = 7000;
  cfg["train"] = {{"learning_rate", 1e-4},
                  {"epochs", 30},
                  {"batch_size", 1},
                  {"seed", 1234},
                  {"dropout_fraction", 0.0},
                  {"validation_fraction", 0.2},
                  {"n_bits", 8},
                  {"iterations", 4},
                  {"hidden_channels", 16},
                  {"masks_per_image", 6}};
  cfg["mc"] = {{"passes", 50}, {"dropout_fraction", 0.2}, {"seed", 99}};
  cfg["anomaly"] = {{"ax", 0.05}, {"ay", 0.05}, {"intensity", 1.0}, {"seed", 505}};
  cfg["exp5_image_index"] = 0;
  return cfg;
}

json load_config(const std::string& config_path, std::optional<uint64_t> seed_override) {
  json cfg = default_config();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw IoError("cannot open config '" + config_path + "'");
    json user = json::parse(in, nullptr, false);
    if (user.is_discarded())
      throw FormatError("config '" + config_path + "' is not valid JSON");
    cfg.merge_patch(user);
  }
  if (seed_override) {
    uint64_t s = *seed_override;
    cfg["phantoms"]["seed"] = derive_seed(s, 1);
    cfg["mask"]["seed"] = derive_seed(s, 2);
    cfg["alt_mask"]["seed"] = derive_seed(s, 3);
    cfg["train"]["seed"] = derive_seed(s, 4);
    cfg["mc"]["seed"] = derive_seed(s, 5);
    cfg["noise_seed"] = derive_seed(s, 6);
    cfg["anomaly"]["seed"] = derive_seed(s, 7);
    cfg["seed_override"] = s;
  }
  return cfg;
}

std::vector<PhantomRecord> build_phantom_set(const json& phantom_cfg) {
  int size = phantom_cfg.at("size").get<int>();
  double jitter = phantom_cfg.at("jitter").get<double>();
  uint64_t seed = cfg_seed(phantom_cfg, "seed");
  int blobs_min = phantom_cfg.at("extra_blobs_min").get<int>();
  int blobs_max = phantom_cfg.at("extra_blobs_max").get<int>();
  require(blobs_min >= 0 && blobs_max >= blobs_min, "phantoms: bad extra blob range");

  // Sorted profile order keeps ids stable across runs.
  std::map<std::string, int> counts =
      phantom_cfg.at("counts").get<std::map<std::string, int>>();

  std::vector<PhantomRecord> out;
  int id = 0;
  for (const auto& [profile, count] : counts) {
    require(count >= 0, "phantoms: negative count");
    for (int i = 0; i < count; ++i, ++id) {
      uint64_t phantom_seed = derive_seed(seed, static_cast<uint64_t>(id));
      PhantomSpec spec;
      spec.size = size;
      spec.contrast_profile = profile;
      spec.jitter = jitter;
      spec.ellipses = base_ellipses();

      Rng blob_rng(phantom_seed, 0xB10B);
      int n_blobs = blobs_min +
                    static_cast<int>(blob_rng.uniform_below(
                        static_cast<uint64_t>(blobs_max - blobs_min + 1)));
      for (int b = 0; b < n_blobs; ++b) {
        Ellipse blob;
        blob.cx = 0.34 + 0.32 * blob_rng.uniform();
        blob.cy = 0.34 + 0.32 * blob_rng.uniform();
        blob.ax = 0.015 + 0.040 * blob_rng.uniform();
        blob.ay = 0.015 + 0.040 * blob_rng.uniform();
        blob.angle = std::numbers::pi * blob_rng.uniform();
        double mag = 0.10 + 0.18 * blob_rng.uniform();
        blob.intensity = blob_rng.uniform() < 0.5 ? mag : -mag;
        blob.blend = Blend::kAdd;
        spec.ellipses.push_back(blob);
      }

      PhantomRecord rec;
      rec.id = id;
      rec.profile = profile;
      rec.image = magnitude(generate_phantom(spec, phantom_seed));
      out.push_back(std::move(rec));
    }
  }
  require(!out.empty(), "phantoms: empty set");
  return out;
}

Ellipse ellipse_from_json(const json& j) {
  Ellipse e;
  e.cx = j.value("cx", e.cx);
  e.cy = j.value("cy", e.cy);
  e.ax = j.value("ax", e.ax);
  e.ay = j.value("ay", e.ay);
  e.angle = j.value("angle", e.angle);
  e.intensity = j.value("intensity", e.intensity);
  std::string blend = j.value("blend", std::string("add"));
  if (blend == "add")
    e.blend = Blend::kAdd;
  else if (blend == "replace")
    e.blend = Blend::kReplace;
  else
    throw std::invalid_argument("ellipse: unknown blend '" + blend + "'");
  return e;
}

PhantomSpec phantom_spec_from_json(const json& j) {
  PhantomSpec spec;
  spec.size = j.value("size", spec.size);
  spec.contrast_profile = j.value("contrast_profile", spec.contrast_profile);
  spec.jitter = j.value("jitter", spec.jitter);
  if (j.contains("ellipses"))
    for (const json& je : j.at("ellipses")) spec.ellipses.push_back(ellipse_from_json(je));
  if (j.contains("anomaly") && !j.at("anomaly").is_null())
    spec.anomaly = ellipse_from_json(j.at("anomaly"));
  return spec;
}

SamplingMask mask_from_config(const json& mask_cfg, int n, uint64_t salt) {
  std::string kind = mask_cfg.at("kind").get<std::string>();
  double accel = mask_cfg.at("accel").get<double>();
  double cf = mask_cfg.at("center_fraction").get<double>();
  if (kind == "equidistant") return make_mask_equidistant(n, accel, cf);
  if (kind == "random")
    return make_mask_random(n, accel, cf, derive_seed(cfg_seed(mask_cfg, "seed"), salt));
  throw std::invalid_argument("mask: unknown kind '" + kind + "'");
}

std::vector<TrainItem> assemble_training_items(const std::vector<PhantomRecord>& phantoms,
                                               const json& mask_cfg, int masks_per_image) {
  require(masks_per_image >= 1, "train: masks_per_image must be >= 1");
  std::vector<TrainItem> items;
  items.reserve(phantoms.size() * static_cast<size_t>(masks_per_image));
  for (const PhantomRecord& pr : phantoms) {
    for (int j = 0; j < masks_per_image; ++j) {
      TrainItem it;
      it.image_id = pr.id;
      it.image = pr.image;
      it.mask = mask_from_config(mask_cfg, pr.image.rows,
                                 static_cast<uint64_t>(pr.id) * 1000 + static_cast<uint64_t>(j));
      items.push_back(std::move(it));
    }
  }
  return items;
}

TrainingConfig training_config_from(const json& cfg) {
  const json& t = cfg.at("train");
  TrainingConfig tc;
  tc.learning_rate = t.at("learning_rate").get<double>();
  tc.epochs = t.at("epochs").get<int>();
  tc.batch_size = t.at("batch_size").get<int>();
  tc.seed = cfg_seed(t, "seed");
  tc.dropout_fraction = t.at("dropout_fraction").get<double>();
  tc.validation_fraction = t.at("validation_fraction").get<double>();
  tc.n_bits = t.at("n_bits").get<int>();
  tc.arch.iterations = t.at("iterations").get<int>();
  tc.arch.hidden_channels = t.at("hidden_channels").get<int>();
  tc.arch.classes = 1 << tc.n_bits;
  tc.mask_spec_json = cfg.at("mask").dump();
  return tc;
}

namespace {

Checkpoint train_into(const json& cfg, ManifestBuilder& mb) {
  std::vector<PhantomRecord> phantoms = build_phantom_set(cfg.at("phantoms"));
  int masks_per_image = cfg.at("train").at("masks_per_image").get<int>();
  std::vector<TrainItem> items =
      assemble_training_items(phantoms, cfg.at("mask"), masks_per_image);
  TrainingConfig tc = training_config_from(cfg);

  Stopwatch sw;
  Checkpoint ckpt = train(items, tc);
  mb.timing("train", sw.ms());

  fs::path ckpt_path = mb.target("checkpoint.pxc");
  save_checkpoint(ckpt, ckpt_path);
  mb.add(ckpt_path);

  CsvWriter loss_csv({"epoch", "train_loss", "val_loss"});
  for (size_t e = 0; e < ckpt.train_loss_history.size(); ++e)
    loss_csv.append_row({std::to_string(e + 1), fmt_double(ckpt.train_loss_history[e]),
                         fmt_double(ckpt.val_loss_history[e])});
  loss_csv.save(mb, "loss_history.csv");
  return ckpt;
}

Checkpoint obtain_checkpoint(const json& cfg, ManifestBuilder& mb, json& notes) {
  std::string path = cfg.at("checkpoint").get<std::string>();
  if (!path.empty()) {
    notes["checkpoint_source"] = path;
    return load_checkpoint(path);
  }
  notes["checkpoint_source"] = "trained in-run";
  return train_into(cfg, mb);
}

struct CaseOutcome {
  RealImage recon;
  RealImage err;
  UncertaintyMap unc_exact;
  UncertaintyMap unc_fast;
  BoolMask fg;
  double nmse_v = 0.0;
  double psnr_v = 0.0;
  double ssim_v = 0.0;
};

CaseOutcome evaluate_case(const ExperimentContext& ctx, const ValCase& vc,
                          const KSpaceGrid& y_u, const SamplingMask& mask) {
  CaseOutcome o;
  ProbabilityVolume probs;
  o.recon = reconstruct_expectation(ctx.checkpoint, y_u, mask, &probs);
  o.err = error_map(o.recon, vc.ref);
  o.unc_exact = exact_variance_map(probs);
  o.unc_fast = fast_variance_map(probs);
  o.fg = foreground_mask(vc.ref, ctx.foreground_threshold);
  o.nmse_v = nmse(o.recon, vc.ref);
  o.psnr_v = psnr_db(o.recon, vc.ref);
  o.ssim_v = ssim(o.recon, vc.ref);
  return o;
}

std::vector<double> fg_values(const RealImage& map, const BoolMask& fg) {
  std::vector<double> vals;
  vals.reserve(fg.count());
  for (size_t i = 0; i < map.size(); ++i)
    if (fg.v[i]) vals.push_back(map.v[i]);
  return vals;
}

// ---- Experiment I: reconstruction + uncertainty under the training mask ----
std::vector<CheckResult> exp1(const ExperimentContext& ctx, ManifestBuilder& mb) {
  CsvWriter metrics(kMetricsHeader);
  double accel = ctx.cfg.at("mask").at("accel").get<double>();
  std::vector<double> correlations;
  for (const ValCase& vc : ctx.val) {
    KSpaceGrid y_u = undersample(vc.y_full, vc.mask);
    CaseOutcome o = evaluate_case(ctx, vc, y_u, vc.mask);

    std::string tag = pad_id(vc.id);
    for (const auto& [name, img] :
         std::initializer_list<std::pair<const char*, const RealImage*>>{
             {"recon", &o.recon}, {"error", &o.err},
             {"unc_exact", &o.unc_exact}, {"unc_fast", &o.unc_fast}}) {
      fs::path p = mb.target(std::string(name) + "_" + tag + ".pxi");
      save_image(*img, p);
      mb.add(p);
    }

    CsvWriter pairs({"row", "col", "uncertainty", "abs_error"});
    for (int r = 0; r < o.unc_exact.rows; ++r)
      for (int c = 0; c < o.unc_exact.cols; ++c)
        pairs.append_row({std::to_string(r), std::to_string(c),
                          fmt_double(o.unc_exact.at(r, c)), fmt_double(o.err.at(r, c))});
    pairs.save(mb, "pixel_pairs_" + tag + ".csv");

    correlations.push_back(
        pearson(fg_values(o.unc_exact, o.fg), fg_values(o.err, o.fg)));
    metrics.append_row(metrics_row(vc.id, vc.profile, accel, 0.0, o.nmse_v, o.psnr_v,
                                   o.ssim_v, masked_mean(o.unc_exact, &o.fg),
                                   masked_mean(o.unc_fast, &o.fg),
                                   std::numeric_limits<double>::quiet_NaN()));
  }
  metrics.save(mb, "metrics.csv");

  double mean_r = 0.0;
  for (double r : correlations) mean_r += r;
  mean_r /= static_cast<double>(correlations.size());
  mb.note("mean_foreground_uncertainty_error_pearson", mean_r);

  CheckResult c;
  c.name = "exp1.uncertainty-error-correlation";
  c.pass = mean_r > 0.3;
  c.detail = "mean foreground pearson r = " + fmt_double(mean_r) + " (require > 0.3)";
  return {c};
}

// ---- Experiment II: k-space noise sweep ----
std::vector<CheckResult> exp2(const ExperimentContext& ctx, ManifestBuilder& mb) {
  std::vector<double> sigmas = ctx.cfg.at("noise_sigmas").get<std::vector<double>>();
  uint64_t noise_seed = cfg_seed(ctx.cfg, "noise_seed");
  double accel = ctx.cfg.at("mask").at("accel").get<double>();

  CsvWriter metrics(kMetricsHeader);
  CsvWriter summary({"noise_sigma", "mean_foreground_uncertainty", "mean_nmse",
                     "image_domain_snr_db"});
  std::vector<double> mean_unc_per_sigma;
  for (size_t si = 0; si < sigmas.size(); ++si) {
    double sigma = sigmas[si];
    double acc_unc = 0.0, acc_nmse = 0.0, acc_sig_pow = 0.0, acc_noise_pow = 0.0;
    for (const ValCase& vc : ctx.val) {
      NoiseSpec ns{sigma, derive_seed(noise_seed,
                                      static_cast<uint64_t>(vc.id) * 100 + si)};
      KSpaceGrid y_noisy = add_complex_noise(vc.y_full, ns);
      KSpaceGrid y_u = undersample(y_noisy, vc.mask);
      CaseOutcome o = evaluate_case(ctx, vc, y_u, vc.mask);

      // Image-domain SNR of the network input (zero-filled view).
      ComplexImage zf_clean = zero_filled(undersample(vc.y_full, vc.mask));
      ComplexImage zf_noisy = zero_filled(y_u);
      for (size_t i = 0; i < zf_clean.v.size(); ++i) {
        acc_sig_pow += std::norm(zf_clean.v[i]);
        acc_noise_pow += std::norm(zf_noisy.v[i] - zf_clean.v[i]);
      }

      double mu = masked_mean(o.unc_exact, &o.fg);
      acc_unc += mu;
      acc_nmse += o.nmse_v;
      metrics.append_row(metrics_row(vc.id, vc.profile, accel, sigma, o.nmse_v, o.psnr_v,
                                     o.ssim_v, mu, masked_mean(o.unc_fast, &o.fg),
                                     std::numeric_limits<double>::quiet_NaN()));
    }
    double n_val = static_cast<double>(ctx.val.size());
    double snr_db = acc_noise_pow > 0.0
                        ? 10.0 * std::log10(acc_sig_pow / acc_noise_pow)
                        : std::numeric_limits<double>::infinity();
    mean_unc_per_sigma.push_back(acc_unc / n_val);
    summary.append_row({fmt_double(sigma), fmt_double(acc_unc / n_val),
                        fmt_double(acc_nmse / n_val), fmt_double(snr_db)});
  }
  metrics.save(mb, "metrics.csv");
  summary.save(mb, "sigma_summary.csv");

  bool monotone = true;
  for (size_t i = 1; i < mean_unc_per_sigma.size(); ++i)
    if (mean_unc_per_sigma[i] < mean_unc_per_sigma[i - 1]) monotone = false;

  std::string detail = "mean foreground uncertainty per sigma:";
  for (double u : mean_unc_per_sigma) detail += " " + fmt_double(u);
  CheckResult c;
  c.name = "exp2.noise-monotone-uncertainty";
  c.pass = monotone;
  c.detail = detail;
  return {c};
}

// ---- Experiment III: unseen mask (higher acceleration, smaller center) ----
std::vector<CheckResult> exp3(const ExperimentContext& ctx, ManifestBuilder& mb) {
  double accel4 = ctx.cfg.at("mask").at("accel").get<double>();
  double accel6 = ctx.cfg.at("alt_mask").at("accel").get<double>();

  CsvWriter metrics(kMetricsHeader);
  double acc_u4 = 0.0, acc_u6 = 0.0;
  for (const ValCase& vc : ctx.val) {
    KSpaceGrid y_u4 = undersample(vc.y_full, vc.mask);
    CaseOutcome o4 = evaluate_case(ctx, vc, y_u4, vc.mask);

    SamplingMask mask6 = mask_from_config(ctx.cfg.at("alt_mask"), vc.ref.rows,
                                          static_cast<uint64_t>(vc.id) * 1000);
    KSpaceGrid y_u6 = undersample(vc.y_full, mask6);
    CaseOutcome o6 = evaluate_case(ctx, vc, y_u6, mask6);

    acc_u4 += masked_mean(o4.unc_exact, &o4.fg);
    acc_u6 += masked_mean(o6.unc_exact, &o6.fg);
    metrics.append_row(metrics_row(vc.id, vc.profile, accel4, 0.0, o4.nmse_v, o4.psnr_v,
                                   o4.ssim_v, masked_mean(o4.unc_exact, &o4.fg),
                                   masked_mean(o4.unc_fast, &o4.fg),
                                   std::numeric_limits<double>::quiet_NaN()));
    metrics.append_row(metrics_row(vc.id, vc.profile, accel6, 0.0, o6.nmse_v, o6.psnr_v,
                                   o6.ssim_v, masked_mean(o6.unc_exact, &o6.fg),
                                   masked_mean(o6.unc_fast, &o6.fg),
                                   std::numeric_limits<double>::quiet_NaN()));

    std::string tag = pad_id(vc.id);
    fs::path p = mb.target("unc_exact_alt_" + tag + ".pxi");
    save_image(o6.unc_exact, p);
    mb.add(p);
  }
  metrics.save(mb, "metrics.csv");

  double n_val = static_cast<double>(ctx.val.size());
  double u4 = acc_u4 / n_val;
  double u6 = acc_u6 / n_val;
  mb.note("mean_uncertainty_training_mask", u4);
  mb.note("mean_uncertainty_alt_mask", u6);

  CheckResult c;
  c.name = "exp3.unseen-mask-raises-uncertainty";
  c.pass = u6 > u4;
  c.detail = "mean foreground uncertainty " + fmt_double(u6) + " at " +
             fmt_double(accel6) + "x vs " + fmt_double(u4) + " at " + fmt_double(accel4) +
             "x";
  return {c};
}

// ---- Experiment IV: synthetic anomaly withheld from training ----
std::vector<CheckResult> exp4(const ExperimentContext& ctx, ManifestBuilder& mb) {
  const json& acfg = ctx.cfg.at("anomaly");
  double ax = acfg.at("ax").get<double>();
  double ay = acfg.at("ay").get<double>();
  double intensity = acfg.at("intensity").get<double>();
  uint64_t aseed = cfg_seed(acfg, "seed");

  CsvWriter rows({"id", "contrast_profile", "mean_uncertainty_inside",
                  "mean_uncertainty_outside_foreground", "inside_exceeds_outside"});
  int hits = 0;
  for (const ValCase& vc : ctx.val) {
    Rng rng(derive_seed(aseed, static_cast<uint64_t>(vc.id)));
    Ellipse anomaly;
    anomaly.cx = 0.40 + 0.20 * rng.uniform();
    anomaly.cy = 0.40 + 0.20 * rng.uniform();
    anomaly.ax = ax;
    anomaly.ay = ay;
    anomaly.angle = std::numbers::pi * rng.uniform();
    anomaly.intensity = intensity;
    anomaly.blend = Blend::kReplace;

    RealImage ref_anom = insert_anomaly(vc.ref, anomaly);
    KSpaceGrid y_u = undersample(dft2_unitary(to_complex(ref_anom)), vc.mask);

    ProbabilityVolume probs;
    RealImage recon = reconstruct_expectation(ctx.checkpoint, y_u, vc.mask, &probs);
    UncertaintyMap unc = exact_variance_map(probs);

    BoolMask fg = foreground_mask(ref_anom, ctx.foreground_threshold);
    int n = ref_anom.rows;
    double in_acc = 0.0, out_acc = 0.0;
    size_t in_n = 0, out_n = 0;
    for (int r = 0; r < n; ++r) {
      double v = (r + 0.5) / n;
      for (int c = 0; c < n; ++c) {
        double u = (c + 0.5) / n;
        size_t i = static_cast<size_t>(r) * n + c;
        if (point_in_ellipse(anomaly, u, v)) {
          in_acc += unc.v[i];
          ++in_n;
        } else if (fg.v[i]) {
          out_acc += unc.v[i];
          ++out_n;
        }
      }
    }
    require(in_n > 0 && out_n > 0, "exp4: anomaly or foreground region empty");
    double inside = in_acc / static_cast<double>(in_n);
    double outside = out_acc / static_cast<double>(out_n);
    bool hit = inside > outside;
    hits += hit ? 1 : 0;
    rows.append_row({pad_id(vc.id), vc.profile, fmt_double(inside), fmt_double(outside),
                     hit ? "1" : "0"});

    std::string tag = pad_id(vc.id);
    for (const auto& [name, img] :
         std::initializer_list<std::pair<const char*, const RealImage*>>{
             {"anomaly_ref", &ref_anom}, {"anomaly_recon", &recon},
             {"anomaly_unc", &unc}}) {
      fs::path p = mb.target(std::string(name) + "_" + tag + ".pxi");
      save_image(*img, p);
      mb.add(p);
    }
  }
  rows.save(mb, "anomaly.csv");
  mb.note("anomaly_hits", hits);
  mb.note("anomaly_cases", static_cast<int>(ctx.val.size()));

  CheckResult c;
  c.name = "exp4.anomaly-uncertainty";
  c.pass = hits * 10 >= static_cast<int>(ctx.val.size()) * 8;
  c.detail = std::to_string(hits) + "/" + std::to_string(ctx.val.size()) +
             " cases with higher uncertainty inside the anomaly (require >= 8/10)";
  return {c};
}

// ---- Experiment V: PixCUE vs MC dropout ----
std::vector<CheckResult> exp5(const ExperimentContext& ctx, ManifestBuilder& mb) {
  size_t index = ctx.cfg.at("exp5_image_index").get<size_t>();
  require(index < ctx.val.size(), "exp5: image index out of range");
  const ValCase& vc = ctx.val[index];
  KSpaceGrid y_u = undersample(vc.y_full, vc.mask);

  McConfig mc;
  mc.passes = ctx.cfg.at("mc").at("passes").get<int>();
  mc.dropout_fraction = ctx.cfg.at("mc").at("dropout_fraction").get<double>();
  mc.seed = cfg_seed(ctx.cfg.at("mc"), "seed");

  Stopwatch sw_pix;
  ProbabilityVolume probs =
      net_forward(y_u, vc.mask, ctx.checkpoint.params, ForwardMode::deterministic());
  UncertaintyMap pix = exact_variance_map(probs);
  double pixcue_ms = sw_pix.ms();

  Stopwatch sw_mc;
  UncertaintyMap mc_map = mc_dropout_variance(y_u, vc.mask, ctx.checkpoint.params, mc);
  double mc_ms = sw_mc.ms();

  Stopwatch sw_md;
  UncertaintyMap md_map =
      mc_mean_distribution_variance(y_u, vc.mask, ctx.checkpoint.params, mc);
  double md_ms = sw_md.ms();

  for (const auto& [name, img] :
       std::initializer_list<std::pair<const char*, const RealImage*>>{
           {"unc_pixcue", &pix}, {"unc_mc", &mc_map}, {"unc_mc_meandist", &md_map}}) {
    fs::path p = mb.target(std::string(name) + "_" + pad_id(vc.id) + ".pxi");
    save_image(*img, p);
    mb.add(p);
  }

  // The joint sample compares against the averaged-distribution MC variant,
  // which scores uncertainty in the same class-variance units as PixCUE.
  BoolMask fg = foreground_mask(vc.ref, ctx.foreground_threshold);
  std::vector<JointSample> samples =
      sample_joint(pix, md_map, 100, derive_seed(mc.seed, 0x5A), &fg);
  CsvWriter joint({"row", "col", "pixcue_uncertainty", "mc_uncertainty"});
  std::vector<double> xs, ys;
  for (const JointSample& s : samples) {
    joint.append_row({std::to_string(s.row), std::to_string(s.col), fmt_double(s.a),
                      fmt_double(s.b)});
    xs.push_back(s.a);
    ys.push_back(s.b);
  }
  joint.save(mb, "joint_sample.csv");

  double r_meandist = pearson(xs, ys);
  std::vector<double> pix_fg = fg_values(pix, fg);
  std::vector<double> mc_fg = fg_values(mc_map, fg);
  double r_eq5 = pearson(pix_fg, mc_fg);
  double factor = pixcue_ms > 0.0 ? mc_ms / pixcue_ms : 0.0;

  mb.timing("pixcue_single_pass", pixcue_ms);
  mb.timing("mc_dropout_variance", mc_ms);
  mb.timing("mc_mean_distribution_variance", md_ms);
  mb.note("mc_runtime_factor", factor);
  mb.note("joint_sample_pearson_r", r_meandist);
  mb.note("fullmap_pearson_r_vs_eq5_variant", r_eq5);
  mb.note("mc_passes", mc.passes);
  mb.note("mc_dropout_fraction", mc.dropout_fraction);

  CheckResult c;
  c.name = "exp5.pixcue-vs-mc-correlation";
  c.pass = r_meandist > 0.3 && factor > 1.0;
  c.detail = "pearson r = " + fmt_double(r_meandist) + " over 100 foreground pixels, MC/" +
             "PixCUE runtime factor = " + fmt_double(factor);
  return {c};
}

// ---- Experiment VI: uncertainty vs quality metrics ----
std::vector<CheckResult> exp6(const ExperimentContext& ctx, ManifestBuilder& mb) {
  std::vector<double> sigmas = ctx.cfg.at("noise_sigmas").get<std::vector<double>>();
  uint64_t noise_seed = cfg_seed(ctx.cfg, "noise_seed");
  double accel4 = ctx.cfg.at("mask").at("accel").get<double>();
  double accel6 = ctx.cfg.at("alt_mask").at("accel").get<double>();

  CsvWriter sweep({"id", "contrast_profile", "accel", "noise_sigma",
                   "mean_foreground_uncertainty", "nmse", "psnr_db", "ssim"});
  std::vector<double> unc, nm, ps, ss;

  auto add_point = [&](const ValCase& vc, double accel, double sigma,
                       const CaseOutcome& o) {
    double mu = masked_mean(o.unc_exact, &o.fg);
    unc.push_back(mu);
    nm.push_back(o.nmse_v);
    ps.push_back(o.psnr_v);
    ss.push_back(o.ssim_v);
    sweep.append_row({pad_id(vc.id), vc.profile, fmt_double(accel), fmt_double(sigma),
                      fmt_double(mu), fmt_double(o.nmse_v), fmt_double(o.psnr_v),
                      fmt_double(o.ssim_v)});
  };

  for (const ValCase& vc : ctx.val) {
    for (size_t si = 0; si < sigmas.size(); ++si) {
      NoiseSpec ns{sigmas[si],
                   derive_seed(noise_seed, 0xE6000000ull +
                                               static_cast<uint64_t>(vc.id) * 100 + si)};
      KSpaceGrid y_u = undersample(add_complex_noise(vc.y_full, ns), vc.mask);
      add_point(vc, accel4, sigmas[si], evaluate_case(ctx, vc, y_u, vc.mask));
    }
    SamplingMask mask6 = mask_from_config(ctx.cfg.at("alt_mask"), vc.ref.rows,
                                          static_cast<uint64_t>(vc.id) * 1000);
    KSpaceGrid y_u6 = undersample(vc.y_full, mask6);
    add_point(vc, accel6, 0.0, evaluate_case(ctx, vc, y_u6, mask6));
  }
  sweep.save(mb, "sweep.csv");

  CsvWriter fits({"metric", "model", "c0", "c1", "r_squared"});
  double nmse_slope = 0.0;
  for (const auto& [metric, ys] :
       std::initializer_list<std::pair<const char*, const std::vector<double>*>>{
           {"nmse", &nm}, {"psnr_db", &ps}, {"ssim", &ss}}) {
    FitResult lin = linear_fit(unc, *ys);
    if (std::string(metric) == "nmse") nmse_slope = lin.c1;
    fits.append_row({metric, "linear", fmt_double(lin.c0), fmt_double(lin.c1),
                     fmt_double(lin.r_squared)});
    std::string c0 = "nan", c1 = "nan", r2 = "nan";
    try {
      FitResult ex = exponential_fit(unc, *ys);
      c0 = fmt_double(ex.c0);
      c1 = fmt_double(ex.c1);
      r2 = fmt_double(ex.r_squared);
    } catch (const std::invalid_argument&) {
      // non-positive metric values; the exponential family does not apply
    }
    fits.append_row({metric, "exponential", c0, c1, r2});
  }
  fits.save(mb, "fits.csv");
  mb.note("nmse_linear_slope", nmse_slope);

  CheckResult c;
  c.name = "exp6.uncertainty-nmse-positive-slope";
  c.pass = nmse_slope > 0.0;
  c.detail = "linear fit of NMSE vs mean uncertainty has slope " + fmt_double(nmse_slope);
  return {c};
}

}  // namespace

CommandResult run_simulate(const json& cfg, const fs::path& out_dir) {
  ManifestBuilder mb(out_dir, "simulate");
  Stopwatch sw;
  std::vector<PhantomRecord> phantoms = build_phantom_set(cfg.at("phantoms"));
  std::vector<double> sigmas = cfg.at("noise_sigmas").get<std::vector<double>>();
  double sigma = sigmas.empty() ? 0.0 : sigmas.front();
  uint64_t noise_seed = cfg_seed(cfg, "noise_seed");

  for (const PhantomRecord& pr : phantoms) {
    std::string tag = pad_id(pr.id);
    fs::path ref_path = mb.target("phantom_" + tag + ".pxi");
    save_image(pr.image, ref_path);
    mb.add(ref_path);

    SamplingMask mask = mask_from_config(cfg.at("mask"), pr.image.rows,
                                         static_cast<uint64_t>(pr.id) * 1000);
    fs::path mask_path = mb.target("mask_" + tag + ".mask");
    save_mask(mask, mask_path);
    mb.add(mask_path);

    KSpaceGrid y = dft2_unitary(to_complex(pr.image));
    if (sigma > 0.0)
      y = add_complex_noise(y, {sigma, derive_seed(noise_seed, static_cast<uint64_t>(pr.id))});
    KSpaceGrid y_u = undersample(y, mask);
    fs::path k_path = mb.target("kspace_" + tag + ".pxi");
    save_image(y_u, k_path);
    mb.add(k_path);
  }
  mb.timing("total", sw.ms());

  CommandResult res;
  res.manifest_path = mb.write(cfg, {});
  return res;
}

CommandResult run_train(const json& cfg, const fs::path& out_dir) {
  ManifestBuilder mb(out_dir, "train");
  Stopwatch sw;
  train_into(cfg, mb);
  mb.timing("total", sw.ms());
  CommandResult res;
  res.manifest_path = mb.write(cfg, {});
  return res;
}

CommandResult run_reconstruct(const fs::path& checkpoint, const fs::path& kspace,
                              const fs::path& mask, const fs::path& out_dir) {
  ManifestBuilder mb(out_dir, "reconstruct");
  Stopwatch sw;
  Checkpoint ckpt = load_checkpoint(checkpoint);
  KSpaceGrid y_u;
  {
    ComplexImage img = load_complex_image(kspace);
    y_u.rows = img.rows;
    y_u.cols = img.cols;
    y_u.v = std::move(img.v);
  }
  SamplingMask m = load_mask(mask);

  ProbabilityVolume probs;
  RealImage recon = reconstruct_expectation(ckpt, y_u, m, &probs);

  fs::path recon_path = mb.target("recon.pxi");
  save_image(recon, recon_path);
  mb.add(recon_path);
  fs::path probs_path = mb.target("probs.pxp");
  save_volume(probs, probs_path);
  mb.add(probs_path);
  mb.timing("total", sw.ms());

  json echo;
  echo["checkpoint"] = checkpoint.string();
  echo["kspace"] = kspace.string();
  echo["mask"] = mask.string();
  CommandResult res;
  res.manifest_path = mb.write(echo, {});
  return res;
}

CommandResult run_uncertainty(const UncertaintyRequest& req, const fs::path& out_dir) {
  ManifestBuilder mb(out_dir, "uncertainty");
  Stopwatch sw;
  UncertaintyMap map;

  if (req.method == "pixcue-exact" || req.method == "pixcue-fast") {
    ProbabilityVolume probs;
    if (!req.volume_path.empty()) {
      probs = load_volume(req.volume_path);
    } else {
      require(!req.checkpoint_path.empty() && !req.kspace_path.empty() &&
                  !req.mask_path.empty(),
              "uncertainty: need a volume or checkpoint+kspace+mask");
      Checkpoint ckpt = load_checkpoint(req.checkpoint_path);
      ComplexImage img = load_complex_image(req.kspace_path);
      KSpaceGrid y_u;
      y_u.rows = img.rows;
      y_u.cols = img.cols;
      y_u.v = std::move(img.v);
      probs = net_forward(y_u, load_mask(req.mask_path), ckpt.params,
                          ForwardMode::deterministic());
    }
    map = req.method == "pixcue-exact" ? exact_variance_map(probs)
                                       : fast_variance_map(probs);
  } else if (req.method == "mc" || req.method == "mc-meandist") {
    require(!req.checkpoint_path.empty() && !req.kspace_path.empty() &&
                !req.mask_path.empty(),
            "uncertainty: MC methods need checkpoint+kspace+mask");
    Checkpoint ckpt = load_checkpoint(req.checkpoint_path);
    ComplexImage img = load_complex_image(req.kspace_path);
    KSpaceGrid y_u;
    y_u.rows = img.rows;
    y_u.cols = img.cols;
    y_u.v = std::move(img.v);
    SamplingMask m = load_mask(req.mask_path);
    McConfig mc{req.mc_passes, req.mc_dropout, req.mc_seed};
    map = req.method == "mc" ? mc_dropout_variance(y_u, m, ckpt.params, mc)
                             : mc_mean_distribution_variance(y_u, m, ckpt.params, mc);
  } else {
    throw std::invalid_argument("uncertainty: unknown method '" + req.method + "'");
  }

  fs::path map_path = mb.target("uncertainty.pxi");
  save_image(map, map_path);
  mb.add(map_path);
  mb.timing("total", sw.ms());

  json echo;
  echo["method"] = req.method;
  echo["volume"] = req.volume_path;
  echo["checkpoint"] = req.checkpoint_path;
  echo["kspace"] = req.kspace_path;
  echo["mask"] = req.mask_path;
  echo["mc"] = {{"passes", req.mc_passes},
                {"dropout_fraction", req.mc_dropout},
                {"seed", req.mc_seed}};
  CommandResult res;
  res.manifest_path = mb.write(echo, {});
  return res;
}

CommandResult run_experiment(const json& cfg, const fs::path& out_dir, bool check) {
  std::string id = cfg.at("id").get<std::string>();
  ManifestBuilder mb(out_dir, "experiment " + id);
  Stopwatch sw;

  json notes;
  ExperimentContext ctx = make_context(cfg, mb, notes);
  for (auto& [k, v] : notes.items()) mb.note(k, v);

  std::vector<CheckResult> checks;
  if (id == "exp1")
    checks = exp1(ctx, mb);
  else if (id == "exp2")
    checks = exp2(ctx, mb);
  else if (id == "exp3")
    checks = exp3(ctx, mb);
  else if (id == "exp4")
    checks = exp4(ctx, mb);
  else if (id == "exp5")
    checks = exp5(ctx, mb);
  else if (id == "exp6")
    checks = exp6(ctx, mb);
  else
    throw std::invalid_argument("experiment: unknown id '" + id + "' (expected exp1..exp6)");

  mb.timing("total", sw.ms());
  for (const CheckResult& c : checks)
    std::printf("check %s: %s (%s)\n", c.name.c_str(), c.pass ? "PASS" : "FAIL",
                c.detail.c_str());
  CommandResult res;
  res.checks = checks;
  res.manifest_path = mb.write(cfg, checks);
  if (check)
    for (const CheckResult& c : checks)
      if (!c.pass) res.exit_code = 1;
  return res;
}

CommandResult run_report(const fs::path& report_dir) {
  require(fs::is_directory(report_dir),
          "report: '" + report_dir.string() + "' is not a directory");

  std::vector<fs::path> csvs, images;
  for (const auto& entry : fs::directory_iterator(report_dir)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().extension() == ".csv") csvs.push_back(entry.path());
    if (entry.path().extension() == ".pxi") images.push_back(entry.path());
  }
  require(!csvs.empty() || !images.empty(),
          "report: no CSVs or images found in '" + report_dir.string() + "'");
  std::sort(csvs.begin(), csvs.end());
  std::sort(images.begin(), images.end());

  std::vector<fs::path> emitted;
  std::ostringstream summary;
  summary << kToolName << " " << kToolVersion << " report for "
          << report_dir.filename().string() << "\n\n";

  summary << "CSV files (" << csvs.size() << "):\n";
  for (const fs::path& p : csvs) {
    std::ifstream in(p);
    int lines = 0;
    std::string line;
    while (std::getline(in, line)) ++lines;
    summary << "  " << p.filename().string() << ": " << std::max(0, lines - 1)
            << " data rows\n";
  }

  int rasterized = 0;
  summary << "\nImages (" << images.size() << "):\n";
  for (const fs::path& p : images) {
    LoadedImage img = load_image(p);
    if (const RealImage* real = std::get_if<RealImage>(&img)) {
      fs::path pgm = p;
      pgm.replace_extension(".pgm");
      save_pgm(*real, pgm);
      emitted.push_back(pgm);
      ++rasterized;
      summary << "  " << p.filename().string() << " -> " << pgm.filename().string()
              << "\n";
    } else {
      summary << "  " << p.filename().string() << " (complex, not rasterized)\n";
    }
  }
  summary << "\nRasterized " << rasterized << " map(s) to 8-bit PGM.\n";

  fs::path summary_path = report_dir / "summary.txt";
  atomic_write_file(summary_path, summary.str());
  emitted.push_back(summary_path);

  // Named report_manifest.json so an experiment's own manifest survives.
  json m;
  m["tool"] = kToolName;
  m["tool_version"] = kToolVersion;
  m["command"] = "report";
  m["config"] = {{"report_dir", report_dir.string()}};
  json outputs = json::array();
  for (const fs::path& p : emitted) {
    char crc[16];
    std::snprintf(crc, sizeof(crc), "%08x", file_crc32(p));
    outputs.push_back({{"path", fs::relative(p, report_dir).string()},
                       {"crc32", crc},
                       {"bytes", fs::file_size(p)}});
  }
  m["outputs"] = outputs;

  CommandResult res;
  res.manifest_path = report_dir / "report_manifest.json";
  atomic_write_file(res.manifest_path, m.dump(2) + "\n");
  return res;
}

}  // namespace pixcue
