#include "tenf/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "tenf/errors.hpp"
#include "tenf/io.hpp"
#include "tenf/patching.hpp"

namespace tenf {

namespace {

std::string fmt(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt6(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

Shape parse_shape(const std::string &raw)
{
  std::string cleaned = raw;
  for (char &c : cleaned) {
    if (c == ',') {
      c = ' ';
    }
  }
  std::istringstream is(cleaned);
  Shape shape;
  Index v = 0;
  while (is >> v) {
    shape.push_back(v);
  }
  return shape;
}

std::string shape_values(const Shape &shape)
{
  std::string out;
  for (size_t i = 0; i < shape.size(); ++i) {
    out += std::to_string(shape[i]);
    if (i + 1 < shape.size()) {
      out += " ";
    }
  }
  return out;
}

} // namespace

LossWeights TrainConfig::loss_weights() const
{
  LossWeights w;
  w.lambda_s = lambda_s;
  w.lambda_l = lambda_l;
  w.variant = loss_variant_from_name(loss_variant);
  w.magnitude_tv = magnitude_tv;
  return w;
}

DecayTarget TrainConfig::decay_target() const
{
  if (weight_decay_target == "networks") {
    return DecayTarget::Networks;
  }
  if (weight_decay_target == "cores") {
    return DecayTarget::Cores;
  }
  if (weight_decay_target == "both") {
    return DecayTarget::Both;
  }
  throw ConfigError("unknown weight_decay_target '" + weight_decay_target + "'");
}

TrainConfig parse_train_config(const std::filesystem::path &path)
{
  TrainConfig c;
  for (const auto &[key, value] : read_key_values(path)) {
    std::istringstream is(value);
    bool ok = true;
    if (key == "nx") {
      ok = static_cast<bool>(is >> c.nx);
    } else if (key == "ny") {
      ok = static_cast<bool>(is >> c.ny);
    } else if (key == "nt") {
      ok = static_cast<bool>(is >> c.nt);
    } else if (key == "ns") {
      ok = static_cast<bool>(is >> c.ns);
    } else if (key == "mask_kind") {
      c.mask_kind = value;
    } else if (key == "accel") {
      ok = static_cast<bool>(is >> c.accel);
    } else if (key == "center_lines") {
      ok = static_cast<bool>(is >> c.center_lines);
    } else if (key == "mask_seed") {
      ok = static_cast<bool>(is >> c.mask_seed);
    } else if (key == "model") {
      c.model = value;
    } else if (key == "ranks") {
      c.ranks = parse_shape(value);
    } else if (key == "patch_size") {
      ok = static_cast<bool>(is >> c.patch_size);
    } else if (key == "similar_count") {
      ok = static_cast<bool>(is >> c.similar_count);
    } else if (key == "search_window") {
      ok = static_cast<bool>(is >> c.search_window);
    } else if (key == "hidden") {
      ok = static_cast<bool>(is >> c.hidden);
    } else if (key == "sine_freq") {
      ok = static_cast<bool>(is >> c.sine_freq);
    } else if (key == "strict_sine_init") {
      ok = static_cast<bool>(is >> c.strict_sine_init);
    } else if (key == "core_init_std") {
      ok = static_cast<bool>(is >> c.core_init_std);
    } else if (key == "base_lr") {
      ok = static_cast<bool>(is >> c.base_lr);
    } else if (key == "lr_decay") {
      ok = static_cast<bool>(is >> c.lr_decay);
    } else if (key == "lr_decay_every") {
      ok = static_cast<bool>(is >> c.lr_decay_every);
    } else if (key == "weight_decay") {
      ok = static_cast<bool>(is >> c.weight_decay);
    } else if (key == "weight_decay_target") {
      c.weight_decay_target = value;
    } else if (key == "weight_decay_coupled") {
      ok = static_cast<bool>(is >> c.weight_decay_coupled);
    } else if (key == "iterations") {
      ok = static_cast<bool>(is >> c.iterations);
    } else if (key == "loss_variant") {
      c.loss_variant = value;
    } else if (key == "lambda_s") {
      ok = static_cast<bool>(is >> c.lambda_s);
    } else if (key == "lambda_l") {
      ok = static_cast<bool>(is >> c.lambda_l);
    } else if (key == "magnitude_tv") {
      ok = static_cast<bool>(is >> c.magnitude_tv);
    } else if (key == "metric_cadence") {
      ok = static_cast<bool>(is >> c.metric_cadence);
    } else if (key == "seed") {
      ok = static_cast<bool>(is >> c.seed);
    } else if (key == "output_dir") {
      c.output_dir = value;
    } else if (key == "export_images") {
      ok = static_cast<bool>(is >> c.export_images);
    } else if (key == "kspace_path") {
      c.kspace_path = value;
    } else if (key == "sens_path") {
      c.sens_path = value;
    } else if (key == "mask_path") {
      c.mask_path = value;
    } else if (key == "truth_path") {
      c.truth_path = value;
    } else {
      throw ConfigError("config: unknown key '" + key + "'");
    }
    if (!ok) {
      throw ConfigError("config: cannot parse value for '" + key + "'");
    }
  }

  if (c.nx < 1 || c.ny < 1 || c.nt < 1 || c.ns < 1) {
    throw ConfigError("config: extents must be positive");
  }
  if (c.model != "patch" && c.model != "global") {
    throw ConfigError("config: model must be 'patch' or 'global'");
  }
  if (c.ranks.size() != 5) {
    throw ConfigError("config: ranks must list five values");
  }
  if (c.iterations < 0 || c.metric_cadence < 1 || c.lr_decay_every < 1) {
    throw ConfigError("config: invalid iteration controls");
  }
  if (c.accel < 1.0 || c.base_lr <= 0.0 || c.lr_decay <= 0.0) {
    throw ConfigError("config: invalid optimization settings");
  }
  loss_variant_from_name(c.loss_variant);
  c.decay_target();
  return c;
}

namespace {

// include_paths = false for hashing: file locations and the output
// directory do not affect the computation, and reports hashed over them
// could never be byte-identical across runs in different directories.
std::string serialize_config(const TrainConfig &c, bool include_paths = true)
{
  std::ostringstream os;
  os << "nx = " << c.nx << "\n";
  os << "ny = " << c.ny << "\n";
  os << "nt = " << c.nt << "\n";
  os << "ns = " << c.ns << "\n";
  os << "mask_kind = " << c.mask_kind << "\n";
  os << "accel = " << fmt(c.accel) << "\n";
  os << "center_lines = " << c.center_lines << "\n";
  os << "mask_seed = " << c.mask_seed << "\n";
  os << "model = " << c.model << "\n";
  os << "ranks = " << shape_values(c.ranks) << "\n";
  os << "patch_size = " << c.patch_size << "\n";
  os << "similar_count = " << c.similar_count << "\n";
  os << "search_window = " << c.search_window << "\n";
  os << "hidden = " << c.hidden << "\n";
  os << "sine_freq = " << fmt(c.sine_freq) << "\n";
  os << "strict_sine_init = " << c.strict_sine_init << "\n";
  os << "core_init_std = " << fmt(c.core_init_std) << "\n";
  os << "base_lr = " << fmt(c.base_lr) << "\n";
  os << "lr_decay = " << fmt(c.lr_decay) << "\n";
  os << "lr_decay_every = " << c.lr_decay_every << "\n";
  os << "weight_decay = " << fmt(c.weight_decay) << "\n";
  os << "weight_decay_target = " << c.weight_decay_target << "\n";
  os << "weight_decay_coupled = " << c.weight_decay_coupled << "\n";
  os << "iterations = " << c.iterations << "\n";
  os << "loss_variant = " << c.loss_variant << "\n";
  os << "lambda_s = " << fmt(c.lambda_s) << "\n";
  os << "lambda_l = " << fmt(c.lambda_l) << "\n";
  os << "magnitude_tv = " << c.magnitude_tv << "\n";
  os << "metric_cadence = " << c.metric_cadence << "\n";
  os << "seed = " << c.seed << "\n";
  os << "export_images = " << c.export_images << "\n";
  if (include_paths) {
    os << "output_dir = " << c.output_dir << "\n";
    if (!c.kspace_path.empty()) {
      os << "kspace_path = " << c.kspace_path << "\n";
    }
    if (!c.sens_path.empty()) {
      os << "sens_path = " << c.sens_path << "\n";
    }
    if (!c.mask_path.empty()) {
      os << "mask_path = " << c.mask_path << "\n";
    }
    if (!c.truth_path.empty()) {
      os << "truth_path = " << c.truth_path << "\n";
    }
  }
  return os.str();
}

} // namespace

void save_train_config(const TrainConfig &config, const std::filesystem::path &path)
{
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write config to " + path.string());
  }
  out << serialize_config(config);
}

uint64_t config_hash(const TrainConfig &config)
{
  const std::string s = serialize_config(config, false);
  return fnv1a(s.data(), s.size());
}

namespace {

void snapshot_diagnostic(const TrainConfig &config, long iteration, double loss,
                         const ImageSeries &image)
{
  std::filesystem::create_directories(config.output_dir);
  const std::filesystem::path dir(config.output_dir);
  std::ofstream out(dir / "diagnostic.txt");
  out << "non-finite loss " << fmt(loss) << " at iteration " << iteration << "\n";
  save_tensor(image.data, dir / "diagnostic_image.tft");
}

} // namespace

ReconResult run_reconstruction(const TrainConfig &config, const MultiCoilKSpace &y,
                               const CoilSensitivities &s, const SamplingMask &m,
                               const ImageSeries *truth)
{
  if (y.nx() != config.nx || y.ny() != config.ny || y.nt() != config.nt ||
      y.ns() != config.ns) {
    throw ConfigError("recon: k-space " + shape_string(y.data.shape()) +
                      " does not match configured extents");
  }
  if (truth && truth->data.shape() != Shape{config.nx, config.ny, config.nt, 2}) {
    throw ConfigError("recon: ground truth extents do not match config");
  }
  const auto t0 = std::chrono::steady_clock::now();

  ReconResult result;
  RunReport &report = result.report;
  report.config_digest = config_hash(config);
  report.mask_digest = tensor_hash(m.pattern);

  const ImageSeries x_init = adjoint_encode(y, s, m);
  report.xinit_digest = tensor_hash(x_init.data);
  report.has_truth = truth != nullptr;
  if (truth) {
    report.zero_filled = compare_images(x_init, *truth);
  }

  const LossWeights weights = config.loss_weights();
  const EncodeConstants consts = make_encode_constants(y, s, m);
  const SineInit style = config.strict_sine_init ? SineInit::Strict : SineInit::Standard;

  const bool patch_mode = config.model == "patch";
  TenfModel model;
  GlobalTensorModel gmodel;
  PatchIndexMap map;
  ad::IndexMapPtr scatter_map, crop_map;
  Tensor inverse_count;
  std::function<ModelGraph(ad::Tape &)> build;
  std::vector<ModelParam> params;

  if (patch_mode) {
    const PaddedSeries padded = pad_replicate(x_init, config.patch_size);
    const Index span_x = std::min(config.search_window, padded.image.nx() - config.patch_size);
    const Index span_y = std::min(config.search_window, padded.image.ny() - config.patch_size);
    const Index available = (span_x + 1) * (span_y + 1);
    Index k_eff = config.similar_count;
    if (k_eff > available) {
      std::cerr << "note: clipping K from " << k_eff << " to " << available
                << " available candidates\n";
      k_eff = available;
    }
    Shape ranks = config.ranks;
    if (ranks[2] > config.nt) {
      std::cerr << "note: clipping r3 from " << ranks[2] << " to nt=" << config.nt << "\n";
      ranks[2] = config.nt;
    }
    if (ranks[4] > k_eff) {
      std::cerr << "note: clipping r5 from " << ranks[4] << " to K=" << k_eff << "\n";
      ranks[4] = k_eff;
    }
    report.effective_ranks = ranks;
    report.effective_k = k_eff;

    map = block_match(padded.image, config.patch_size, k_eff, config.search_window, padded.pad_x,
                      padded.pad_y);
    model = init_model(map, config.nt, ranks, config.seed, style, config.hidden, config.sine_freq,
                       config.core_init_std);
    scatter_map = std::make_shared<const std::vector<Index>>(batch_index_map(map));
    crop_map = std::make_shared<const std::vector<Index>>(crop_index_map(map));
    inverse_count = contribution_count(map);
    for (Index i = 0; i < inverse_count.size(); ++i) {
      inverse_count[i] = 1.0 / inverse_count[i];
    }
    build = [&](ad::Tape &tape) {
      return build_model_graph(tape, model, map, scatter_map, crop_map, inverse_count);
    };
    params = model_params(model, config.decay_target());
  } else {
    const Shape granks = global_ranks(config.nx, config.ny, config.nt);
    report.effective_ranks = granks;
    report.effective_k = 0;
    gmodel = init_global_model(config.nx, config.ny, config.nt, granks, config.seed, style,
                               config.hidden, config.sine_freq, config.core_init_std);
    build = [&](ad::Tape &tape) { return build_global_graph(tape, gmodel); };
    params = model_params(gmodel, config.decay_target());
  }

  std::vector<ParamRef> refs;
  refs.reserve(params.size());
  for (ModelParam &p : params) {
    refs.push_back({p.name, p.value, p.decay});
  }

  AdamState adam;
  const LrSchedule schedule{config.base_lr, config.lr_decay, config.lr_decay_every};
  report.loss_series.reserve(config.iterations);

  for (long it = 0; it < config.iterations; ++it) {
    ad::Tape tape;
    const ModelGraph graph = build(tape);
    const LossNodes loss = total_loss(tape, graph.image, consts, weights);
    const double total = loss.total->scalar();
    report.loss_series.push_back(total);
    if (!std::isfinite(total)) {
      snapshot_diagnostic(config, it, total, ImageSeries(graph.image->value));
      throw NumericalError("non-finite loss " + fmt(total) + " at iteration " +
                           std::to_string(it));
    }

    if (it % config.metric_cadence == 0 || it + 1 == config.iterations) {
      CheckpointRow row;
      row.iteration = it;
      row.total = total;
      row.dc = loss.dc->scalar();
      row.tv = loss.tv ? loss.tv->scalar() : 0.0;
      row.lr = loss.lr ? loss.lr->scalar() : 0.0;
      if (truth) {
        row.has_metrics = true;
        row.metrics = compare_images(ImageSeries(graph.image->value), *truth);
      }
      report.checkpoints.push_back(row);
    }

    tape.backward(loss.total);
    std::vector<const Tensor *> grads;
    grads.reserve(graph.params.size());
    for (ad::Node *p : graph.params) {
      grads.push_back(p->grad.empty() ? nullptr : &p->grad);
    }
    try {
      adam_step(refs, grads, adam, lr_at(schedule, it), config.weight_decay,
                config.weight_decay_coupled);
    } catch (const TrainingError &) {
      snapshot_diagnostic(config, it, total, ImageSeries(graph.image->value));
      throw;
    }
  }

  ImageSeries x_pre = x_init;
  if (config.iterations > 0) {
    x_pre = patch_mode ? reconstruct_image(model, map) : evaluate_global(gmodel);
  }
  report.dc_before = dc_value(x_pre, y, s, m);
  result.image = kspace_replacement(x_pre, y, s, m);
  report.dc_after = dc_value(result.image, y, s, m);
  if (truth) {
    report.final_before = compare_images(x_pre, *truth);
    report.final_after = compare_images(result.image, *truth);
  }
  report.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (patch_mode && !config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    save_patch_map(map, std::filesystem::path(config.output_dir) / "patch_map.txt");
    save_model(model, std::filesystem::path(config.output_dir) / "model");
  }
  return result;
}

void write_report(const RunReport &report, const TrainConfig &config,
                  const std::filesystem::path &dir)
{
  std::filesystem::create_directories(dir);

  {
    std::ofstream out(dir / "report.txt");
    if (!out) {
      throw IoError("cannot write report in " + dir.string());
    }
    out << "run report\n";
    out << "config_hash " << report.config_digest << "\n";
    out << "mask_hash " << report.mask_digest << "\n";
    out << "xinit_hash " << report.xinit_digest << "\n";
    out << "model " << config.model << "\n";
    out << "loss_variant " << config.loss_variant << "\n";
    out << "effective_ranks " << shape_values(report.effective_ranks) << "\n";
    out << "effective_k " << report.effective_k << "\n";
    out << "iterations " << config.iterations << "\n";
    if (report.has_truth) {
      out << "zero_filled psnr " << fmt6(report.zero_filled.psnr) << " ssim "
          << fmt6(report.zero_filled.ssim) << " rmse " << fmt6(report.zero_filled.rmse) << "\n";
      out << "final_before psnr " << fmt6(report.final_before.psnr) << " ssim "
          << fmt6(report.final_before.ssim) << " rmse " << fmt6(report.final_before.rmse) << "\n";
      out << "final_after psnr " << fmt6(report.final_after.psnr) << " ssim "
          << fmt6(report.final_after.ssim) << " rmse " << fmt6(report.final_after.rmse) << "\n";
    }
    out << "dc_before " << fmt(report.dc_before) << "\n";
    out << "dc_after " << fmt(report.dc_after) << "\n";
  }

  {
    std::ofstream out(dir / "metrics.csv");
    out << "iteration,total,dc,tv,lr,psnr,ssim,rmse\n";
    for (const CheckpointRow &row : report.checkpoints) {
      out << row.iteration << "," << fmt(row.total) << "," << fmt(row.dc) << "," << fmt(row.tv)
          << "," << fmt(row.lr);
      if (row.has_metrics) {
        out << "," << fmt(row.metrics.psnr) << "," << fmt(row.metrics.ssim) << ","
            << fmt(row.metrics.rmse);
      } else {
        out << ",,,";
      }
      out << "\n";
    }
  }

  {
    std::ofstream out(dir / "loss.csv");
    out << "iteration,total\n";
    for (size_t i = 0; i < report.loss_series.size(); ++i) {
      out << i << "," << fmt(report.loss_series[i]) << "\n";
    }
  }

  {
    std::ofstream out(dir / "timing.txt");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", report.elapsed_seconds);
    out << "elapsed_seconds " << buf << "\n";
    if (!report.loss_series.empty()) {
      std::snprintf(buf, sizeof buf, "%.6f",
                    report.elapsed_seconds / static_cast<double>(report.loss_series.size()));
      out << "seconds_per_iteration " << buf << "\n";
    }
  }

  save_train_config(config, dir / "config.txt");
}

std::vector<AblationRow> run_ablation_suite(const TrainConfig &base, const MultiCoilKSpace &y,
                                            const CoilSensitivities &s, const SamplingMask &m,
                                            const ImageSeries *truth,
                                            const std::filesystem::path &dir)
{
  const std::vector<std::string> variants = {"full", "tv-only", "lr-only", "dc-only"};
  const std::vector<std::string> models = {"patch", "global"};

  std::vector<AblationRow> rows;
  for (const std::string &model : models) {
    for (const std::string &variant : variants) {
      TrainConfig config = base;
      config.loss_variant = variant;
      config.model = model;
      config.output_dir = (dir / (variant + "-" + model)).string();
      std::cerr << "ablation: " << variant << " " << model << "\n";
      ReconResult r = run_reconstruction(config, y, s, m, truth);
      write_report(r.report, config, config.output_dir);
      save_tensor(r.image.data, std::filesystem::path(config.output_dir) / "image.tft");
      rows.push_back({variant, model, std::move(r.report)});
    }
  }

  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "ablation_table.txt");
    out << "variant    model   TV  LR  patch |    PSNR     SSIM     RMSE |  dc_after\n";
    for (const AblationRow &row : rows) {
      const LossVariant v = loss_variant_from_name(row.variant);
      const bool tv = v == LossVariant::Full || v == LossVariant::TvOnly;
      const bool lr = v == LossVariant::Full || v == LossVariant::LrOnly;
      char line[160];
      if (row.report.has_truth) {
        std::snprintf(line, sizeof line, "%-10s %-7s %-3s %-3s %-5s | %7.2f  %7.4f  %7.4f | %.3e",
                      row.variant.c_str(), row.model.c_str(), tv ? "yes" : "no",
                      lr ? "yes" : "no", row.model == "patch" ? "yes" : "no",
                      row.report.final_after.psnr, row.report.final_after.ssim,
                      row.report.final_after.rmse, row.report.dc_after);
      } else {
        std::snprintf(line, sizeof line, "%-10s %-7s %-3s %-3s %-5s | %7s  %7s  %7s | %.3e",
                      row.variant.c_str(), row.model.c_str(), tv ? "yes" : "no",
                      lr ? "yes" : "no", row.model == "patch" ? "yes" : "no", "-", "-", "-",
                      row.report.dc_after);
      }
      out << line << "\n";
    }
  }
  {
    std::ofstream out(dir / "ablation_table.csv");
    out << "variant,model,tv,lr,psnr,ssim,rmse,dc_after,mask_hash,xinit_hash\n";
    for (const AblationRow &row : rows) {
      const LossVariant v = loss_variant_from_name(row.variant);
      const bool tv = v == LossVariant::Full || v == LossVariant::TvOnly;
      const bool lr = v == LossVariant::Full || v == LossVariant::LrOnly;
      out << row.variant << "," << row.model << "," << tv << "," << lr << ",";
      if (row.report.has_truth) {
        out << fmt(row.report.final_after.psnr) << "," << fmt(row.report.final_after.ssim) << ","
            << fmt(row.report.final_after.rmse);
      } else {
        out << ",,";
      }
      out << "," << fmt(row.report.dc_after) << "," << row.report.mask_digest << ","
          << row.report.xinit_digest << "\n";
    }
  }
  return rows;
}

namespace {

std::vector<double> frame_magnitude(const ImageSeries &x, Index t, double norm)
{
  const Index nx = x.nx(), ny = x.ny();
  const Index half = x.data.size() / 2;
  const Index frame = nx * ny;
  std::vector<double> pix(frame);
  for (Index j = 0; j < ny; ++j) {
    for (Index i = 0; i < nx; ++i) {
      const Index p = i + nx * j + frame * t;
      pix[i + nx * j] = std::hypot(x.data[p], x.data[half + p]) / norm;
    }
  }
  return pix;
}

double peak_magnitude(const ImageSeries &x)
{
  const Index half = x.data.size() / 2;
  double peak = 0.0;
  for (Index i = 0; i < half; ++i) {
    peak = std::max(peak, std::hypot(x.data[i], x.data[half + i]));
  }
  return peak > 0.0 ? peak : 1.0;
}

} // namespace

void export_views(const ImageSeries &x, const std::filesystem::path &dir, const ImageSeries *ref)
{
  std::filesystem::create_directories(dir);
  const Index nx = x.nx(), ny = x.ny(), nt = x.nt();
  const Index half = x.data.size() / 2;
  const Index frame = nx * ny;
  const double norm = ref ? peak_magnitude(*ref) : peak_magnitude(x);

  char name[64];
  for (Index t = 0; t < nt; ++t) {
    std::snprintf(name, sizeof name, "frame_%03ld.pgm", static_cast<long>(t));
    write_pgm16(dir / name, frame_magnitude(x, t, norm), nx, ny);
  }

  // Center-line profiles: columns are frames.
  std::vector<double> xt(nx * nt);
  const Index jc = ny / 2;
  for (Index t = 0; t < nt; ++t) {
    for (Index i = 0; i < nx; ++i) {
      const Index p = i + nx * jc + frame * t;
      xt[t + nt * i] = std::hypot(x.data[p], x.data[half + p]) / norm;
    }
  }
  write_pgm16(dir / "xt_profile.pgm", xt, nt, nx);

  std::vector<double> yt(ny * nt);
  const Index ic = nx / 2;
  for (Index t = 0; t < nt; ++t) {
    for (Index j = 0; j < ny; ++j) {
      const Index p = ic + nx * j + frame * t;
      yt[t + nt * j] = std::hypot(x.data[p], x.data[half + p]) / norm;
    }
  }
  write_pgm16(dir / "yt_profile.pgm", yt, nt, ny);

  if (ref) {
    for (Index t = 0; t < nt; ++t) {
      std::vector<double> err(frame);
      for (Index j = 0; j < ny; ++j) {
        for (Index i = 0; i < nx; ++i) {
          const Index p = i + nx * j + frame * t;
          err[i + nx * j] = std::hypot(x.data[p] - ref->data[p],
                                       x.data[half + p] - ref->data[half + p]) /
                            norm;
        }
      }
      std::snprintf(name, sizeof name, "error_%03ld.pgm", static_cast<long>(t));
      write_pgm16(dir / name, err, nx, ny);
    }

    std::ofstream out(dir / "metrics.csv");
    out << "frame,psnr,ssim,rmse\n";
    for (Index t = 0; t < nt; ++t) {
      ImageSeries xf(nx, ny, 1), rf(nx, ny, 1);
      for (Index j = 0; j < ny; ++j) {
        for (Index i = 0; i < nx; ++i) {
          xf.data(i, j, 0, 0) = x.data(i, j, t, 0);
          xf.data(i, j, 0, 1) = x.data(i, j, t, 1);
          rf.data(i, j, 0, 0) = ref->data(i, j, t, 0);
          rf.data(i, j, 0, 1) = ref->data(i, j, t, 1);
        }
      }
      const Metrics mt = compare_images(xf, rf);
      out << t << "," << fmt(mt.psnr) << "," << fmt(mt.ssim) << "," << fmt(mt.rmse) << "\n";
    }
    const Metrics all = compare_images(x, *ref);
    out << "all," << fmt(all.psnr) << "," << fmt(all.ssim) << "," << fmt(all.rmse) << "\n";
  }
}

void export_mask(const SamplingMask &mask, const std::filesystem::path &dir)
{
  std::filesystem::create_directories(dir);
  const Index nx = mask.nx(), ny = mask.ny(), nt = mask.nt();
  char name[64];
  for (Index t = 0; t < nt; ++t) {
    std::vector<double> pix(nx * ny);
    for (Index j = 0; j < ny; ++j) {
      for (Index i = 0; i < nx; ++i) {
        pix[i + nx * j] = mask.pattern(i, j, t);
      }
    }
    std::snprintf(name, sizeof name, "mask_%03ld.pgm", static_cast<long>(t));
    write_pgm16(dir / name, pix, nx, ny);
  }
  // ky-t line occupancy (max over kx).
  std::vector<double> kyt(ny * nt);
  for (Index t = 0; t < nt; ++t) {
    for (Index j = 0; j < ny; ++j) {
      double v = 0.0;
      for (Index i = 0; i < nx; ++i) {
        v = std::max(v, mask.pattern(i, j, t));
      }
      kyt[t + nt * j] = v;
    }
  }
  write_pgm16(dir / "kyt.pgm", kyt, nt, ny);
}

} // namespace tenf
