// Command-line front end. Everything goes through the public C API in
// srnet.h; the core library is linked as a shared object.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "srnet.h"

namespace {

int report_failure(srnet_status status) {
  std::fprintf(stderr, "error (%d): %s\n", static_cast<int>(status),
               srnet_last_error());
  return 1;
}

struct ConfigHandle {
  srnet_config* cfg = nullptr;
  ~ConfigHandle() { srnet_config_destroy(cfg); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"space-time memory video object segmentation"};
  app.require_subcommand(1);

  std::string spec_path, config_path, out_dir, params_dir, frames_dir;
  std::string mask0_path, pred_dir, gt_dir, report_path, op_filter;

  CLI::App* synth = app.add_subcommand("synth", "render a synthetic sequence");
  synth->add_option("--spec", spec_path, "sequence spec file")->required();
  synth->add_option("--out", out_dir, "output directory")->required();

  CLI::App* train = app.add_subcommand("train", "train on a synthetic sequence");
  train->add_option("--spec", spec_path, "sequence spec file")->required();
  train->add_option("--config", config_path, "run config file");
  train->add_option("--out", out_dir, "model output directory")->required();

  CLI::App* infer = app.add_subcommand("infer", "segment a frame directory");
  infer->add_option("--params", params_dir, "trained model directory")
      ->required();
  infer->add_option("--frames", frames_dir, "directory of PPM/SRTN frames")
      ->required();
  infer->add_option("--mask0", mask0_path, "first-frame annotation (PGM)")
      ->required();
  infer->add_option("--out", out_dir, "mask output directory")->required();

  CLI::App* eval = app.add_subcommand("eval", "score predictions against gt");
  eval->add_option("--pred", pred_dir, "prediction directory")->required();
  eval->add_option("--gt", gt_dir, "ground-truth directory")->required();
  eval->add_option("--report", report_path, "CSV report path")->required();

  CLI::App* ablate = app.add_subcommand("ablate", "run ablation variants");
  ablate->add_option("--config", config_path, "config with ablate.* keys")
      ->required();
  ablate->add_option("--report", report_path, "table output path");

  CLI::App* gradcheck =
      app.add_subcommand("gradcheck", "finite-difference gradient table");
  gradcheck->add_option("--op", op_filter, "check only ops matching this name");

  CLI11_PARSE(app, argc, argv);

  if (synth->parsed()) {
    const srnet_status st = srnet_synth(spec_path.c_str(), out_dir.c_str());
    if (st != SRNET_OK) return report_failure(st);
    std::printf("sequence written to %s\n", out_dir.c_str());
    return 0;
  }

  if (train->parsed()) {
    ConfigHandle cfg;
    if (!config_path.empty()) {
      const srnet_status st = srnet_config_load(config_path.c_str(), &cfg.cfg);
      if (st != SRNET_OK) return report_failure(st);
    }
    double final_loss = 0.0;
    const srnet_status st =
        srnet_train(spec_path.c_str(), cfg.cfg, out_dir.c_str(), &final_loss);
    if (st != SRNET_OK) return report_failure(st);
    std::printf("model written to %s (final loss %.6f)\n", out_dir.c_str(),
                final_loss);
    return 0;
  }

  if (infer->parsed()) {
    double fps = 0.0;
    const srnet_status st =
        srnet_infer(params_dir.c_str(), frames_dir.c_str(), mask0_path.c_str(),
                    out_dir.c_str(), &fps);
    if (st != SRNET_OK) return report_failure(st);
    std::printf("masks written to %s (%.2f frames/s)\n", out_dir.c_str(), fps);
    return 0;
  }

  if (eval->parsed()) {
    double mean_j = 0.0, mean_f = 0.0;
    const srnet_status st = srnet_eval(pred_dir.c_str(), gt_dir.c_str(),
                                       report_path.c_str(), &mean_j, &mean_f);
    if (st != SRNET_OK) return report_failure(st);
    std::printf("J=%.4f F=%.4f J&F=%.4f (report: %s)\n", mean_j, mean_f,
                (mean_j + mean_f) / 2.0, report_path.c_str());
    return 0;
  }

  if (ablate->parsed()) {
    ConfigHandle cfg;
    srnet_status st = srnet_config_load(config_path.c_str(), &cfg.cfg);
    if (st != SRNET_OK) return report_failure(st);
    char* table = nullptr;
    st = srnet_ablate(cfg.cfg, report_path.empty() ? nullptr : report_path.c_str(),
                      &table);
    if (st != SRNET_OK) return report_failure(st);
    std::fputs(table, stdout);
    srnet_string_free(table);
    return 0;
  }

  if (gradcheck->parsed()) {
    char* table = nullptr;
    int num_failed = 0;
    const srnet_status st = srnet_gradcheck(
        op_filter.empty() ? nullptr : op_filter.c_str(), &table, &num_failed);
    if (st != SRNET_OK) return report_failure(st);
    std::fputs(table, stdout);
    srnet_string_free(table);
    return num_failed == 0 ? 0 : 2;
  }

  return 1;
}
