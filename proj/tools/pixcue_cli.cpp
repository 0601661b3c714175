// pixcue command line tool. Thin argument parser over the C API; all the
// actual work happens inside libpixcue.
#include <cstdint>
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "pixcue/pixcue.h"

namespace {

int finish(int status) {
  if (status != PIXCUE_OK && status != PIXCUE_ERR_CHECK_FAILED)
    std::fprintf(stderr, "pixcue: %s: %s\n", pixcue_strerror(status), pixcue_last_error());
  if (status == PIXCUE_ERR_CHECK_FAILED)
    std::fprintf(stderr, "pixcue: %s\n", pixcue_last_error());
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pixcue: undersampled MRI reconstruction with per-pixel uncertainty"};
  app.set_version_flag("--version", std::string(pixcue_version()));
  app.require_subcommand(1);

  std::string config, out_dir, checkpoint, kspace, mask, volume, method;
  uint64_t seed = 0;
  bool seed_set = false;
  bool check = false;
  int mc_passes = 50;
  double mc_dropout = 0.2;
  uint64_t mc_seed = 0;

  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", config, "JSON config file (defaults apply when omitted)");
    cmd->add_option("--seed", seed, "override every config seed from this master seed")
        ->each([&](const std::string&) { seed_set = true; });
  };
  auto add_out = [&](CLI::App* cmd) {
    cmd->add_option("--out", out_dir, "output directory")->required();
  };

  CLI::App* sim = app.add_subcommand("simulate", "generate phantoms, k-space and masks");
  add_config(sim);
  add_out(sim);

  CLI::App* train = app.add_subcommand("train", "train the reconstruction network");
  add_config(train);
  add_out(train);

  CLI::App* recon = app.add_subcommand("reconstruct", "reconstruct one k-space file");
  recon->add_option("--checkpoint", checkpoint, "trained .pxc checkpoint")->required();
  recon->add_option("--kspace", kspace, "undersampled k-space .pxi (complex)")->required();
  recon->add_option("--mask", mask, "sampling .mask file")->required();
  add_out(recon);

  CLI::App* unc = app.add_subcommand("uncertainty", "compute an uncertainty map");
  unc->add_option("--method", method,
                  "pixcue-exact | pixcue-fast | mc | mc-meandist")
      ->required();
  unc->add_option("--volume", volume, "probability volume .pxp (pixcue methods)");
  unc->add_option("--checkpoint", checkpoint, "trained .pxc checkpoint");
  unc->add_option("--kspace", kspace, "undersampled k-space .pxi");
  unc->add_option("--mask", mask, "sampling .mask file");
  unc->add_option("--passes", mc_passes, "MC forward passes")->capture_default_str();
  unc->add_option("--dropout", mc_dropout, "MC dropout fraction")->capture_default_str();
  unc->add_option("--mc-seed", mc_seed, "MC master seed")->capture_default_str();
  add_out(unc);

  CLI::App* exp = app.add_subcommand("experiment", "run one of exp1..exp6");
  add_config(exp);
  add_out(exp);
  exp->add_flag("--check", check, "nonzero exit when an acceptance property fails");

  CLI::App* report = app.add_subcommand("report", "summarize a result directory");
  report->add_option("--out", out_dir, "directory to summarize and rasterize")->required();

  CLI11_PARSE(app, argc, argv);

  const uint64_t* seed_ptr = seed_set ? &seed : nullptr;
  const char* cfg_ptr = config.empty() ? nullptr : config.c_str();

  if (sim->parsed())
    return finish(pixcue_cmd_simulate(cfg_ptr, out_dir.c_str(), seed_ptr));
  if (train->parsed())
    return finish(pixcue_cmd_train(cfg_ptr, out_dir.c_str(), seed_ptr));
  if (recon->parsed())
    return finish(pixcue_cmd_reconstruct(checkpoint.c_str(), kspace.c_str(), mask.c_str(),
                                         out_dir.c_str()));
  if (unc->parsed())
    return finish(pixcue_cmd_uncertainty(
        method.c_str(), volume.empty() ? nullptr : volume.c_str(),
        checkpoint.empty() ? nullptr : checkpoint.c_str(),
        kspace.empty() ? nullptr : kspace.c_str(), mask.empty() ? nullptr : mask.c_str(),
        mc_passes, mc_dropout, mc_seed, out_dir.c_str()));
  if (exp->parsed())
    return finish(pixcue_cmd_experiment(cfg_ptr, out_dir.c_str(), seed_ptr, check ? 1 : 0));
  if (report->parsed()) return finish(pixcue_cmd_report(out_dir.c_str()));
  return 1;
}
