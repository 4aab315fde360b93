#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tenf/losses.hpp"
#include "tenf/mri.hpp"
#include "tenf/optim.hpp"
#include "tenf/tenf.hpp"

// End-to-end orchestration: configuration, the training loop, metric
// reporting, the ablation driver and image export. One training run per
// process; (config, seed) fully determines every output byte in
// single-threaded mode. Wall-clock timing is kept out of the report file so
// reports stay byte-reproducible; it goes to timing.txt instead.

namespace tenf {

struct TrainConfig {
  // data extents, validated against the input files
  Index nx = 64, ny = 64, nt = 8, ns = 4;

  // sampling
  std::string mask_kind = "vds";
  double accel = 8.0;
  Index center_lines = 4;
  uint64_t mask_seed = 0;

  // model
  std::string model = "patch"; // patch | global
  Shape ranks = {2, 2, 16, 2, 5};
  Index patch_size = 2;
  Index similar_count = 20; // K, including the key patch
  Index search_window = 10;
  Index hidden = 126;
  double sine_freq = 30.0;
  bool strict_sine_init = false;
  double core_init_std = 0.1;

  // optimization
  double base_lr = 1e-4;
  double lr_decay = 0.2;
  long lr_decay_every = 500;
  double weight_decay = 0.38;
  std::string weight_decay_target = "networks"; // networks | cores | both
  bool weight_decay_coupled = false;
  long iterations = 12000;

  // loss
  std::string loss_variant = "full";
  double lambda_s = 1e-3;
  double lambda_l = 5e-6;
  bool magnitude_tv = false;

  // run control
  long metric_cadence = 250;
  uint64_t seed = 0;
  std::string output_dir = "out";
  bool export_images = false;

  // input files (recon/ablate)
  std::string kspace_path;
  std::string sens_path;
  std::string mask_path;
  std::string truth_path; // optional

  LossWeights loss_weights() const;
  DecayTarget decay_target() const;
};

TrainConfig parse_train_config(const std::filesystem::path &path);
void save_train_config(const TrainConfig &config, const std::filesystem::path &path);
// Hash of the canonical serialization; identifies a run configuration.
uint64_t config_hash(const TrainConfig &config);

struct CheckpointRow {
  long iteration = 0;
  double total = 0.0, dc = 0.0, tv = 0.0, lr = 0.0;
  bool has_metrics = false;
  Metrics metrics;
};

struct RunReport {
  uint64_t config_digest = 0;
  uint64_t mask_digest = 0;
  uint64_t xinit_digest = 0;
  Shape effective_ranks;
  Index effective_k = 0;
  bool has_truth = false;
  Metrics zero_filled;
  std::vector<CheckpointRow> checkpoints;
  std::vector<double> loss_series; // total loss per iteration
  double dc_before = 0.0; // before k-space replacement
  double dc_after = 0.0;
  Metrics final_before;
  Metrics final_after;
  double elapsed_seconds = 0.0; // reported separately from report.txt
};

struct ReconResult {
  ImageSeries image; // after k-space replacement
  RunReport report;
};

// X_init -> pad -> block match -> init model -> full-batch training ->
// k-space replacement -> metrics. Throws TrainingError on a non-finite loss
// after writing a diagnostic snapshot to the output directory.
ReconResult run_reconstruction(const TrainConfig &config, const MultiCoilKSpace &y,
                               const CoilSensitivities &s, const SamplingMask &m,
                               const ImageSeries *truth);

// Writes report.txt, metrics.csv, loss.csv and timing.txt.
void write_report(const RunReport &report, const TrainConfig &config,
                  const std::filesystem::path &dir);

struct AblationRow {
  std::string variant;
  std::string model;
  RunReport report;
};

// {full, tv-only, lr-only, dc-only} x {patch, global} on identical data and
// seed; writes one run directory each plus ablation_table.txt/.csv.
std::vector<AblationRow> run_ablation_suite(const TrainConfig &base, const MultiCoilKSpace &y,
                                            const CoilSensitivities &s, const SamplingMask &m,
                                            const ImageSeries *truth,
                                            const std::filesystem::path &dir);

// Per-frame magnitude images, x-t and y-t center profiles, error maps
// against an optional reference, all as 16-bit graymaps plus a metrics CSV.
void export_views(const ImageSeries &x, const std::filesystem::path &dir,
                  const ImageSeries *ref = nullptr);

// Mask inspection images: one graymap per frame plus a ky-t line summary.
void export_mask(const SamplingMask &mask, const std::filesystem::path &dir);

} // namespace tenf
