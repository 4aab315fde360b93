#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "tenf/errors.hpp"
#include "tenf/harness.hpp"
#include "tenf/io.hpp"
#include "tenf/phantom.hpp"

namespace fs = std::filesystem;

namespace {

tenf::SamplingMask make_mask_from(const std::string &kind, tenf::Index nx, tenf::Index ny,
                                  tenf::Index nt, double accel, tenf::Index center, uint64_t seed)
{
  switch (tenf::mask_kind_from_name(kind)) {
  case tenf::MaskKind::VariableDensity:
    return tenf::make_vds_mask(nx, ny, nt, accel, center, seed);
  case tenf::MaskKind::PseudoRadial:
    return tenf::make_pseudo_radial_mask(nx, ny, nt, accel, seed);
  case tenf::MaskKind::PseudoSpiral:
    return tenf::make_pseudo_spiral_mask(nx, ny, nt, accel, seed);
  }
  throw tenf::ConfigError("unreachable mask kind");
}

struct LoadedData {
  tenf::MultiCoilKSpace y;
  tenf::CoilSensitivities s;
  tenf::SamplingMask m;
  std::optional<tenf::ImageSeries> truth;
};

LoadedData load_recon_inputs(const tenf::TrainConfig &config)
{
  if (config.kspace_path.empty() || config.sens_path.empty()) {
    throw tenf::ConfigError("config must set kspace_path and sens_path");
  }
  LoadedData d;
  d.y = tenf::MultiCoilKSpace(tenf::load_tensor(config.kspace_path));
  d.s = tenf::CoilSensitivities(tenf::load_tensor(config.sens_path));
  d.m.kind = tenf::mask_kind_from_name(config.mask_kind);
  d.m.nominal_r = config.accel;
  if (!config.mask_path.empty()) {
    d.m.pattern = tenf::load_tensor(config.mask_path);
    if (d.m.pattern.rank() != 3) {
      throw tenf::ConfigError("mask file must hold an (nx, ny, nt) tensor");
    }
  } else {
    d.m = make_mask_from(config.mask_kind, config.nx, config.ny, config.nt, config.accel,
                         config.center_lines, config.mask_seed);
  }
  if (!config.truth_path.empty()) {
    d.truth = tenf::ImageSeries(tenf::load_tensor(config.truth_path));
  }
  return d;
}

// Masked k-space: zero out unsampled positions of the full acquisition.
tenf::MultiCoilKSpace apply_mask(const tenf::MultiCoilKSpace &full, const tenf::SamplingMask &m)
{
  tenf::MultiCoilKSpace out = full;
  const tenf::Index frame = full.nx() * full.ny();
  const tenf::Index half = out.data.size() / 2;
  for (tenf::Index c = 0; c < full.ns(); ++c) {
    for (tenf::Index t = 0; t < full.nt(); ++t) {
      const double *mk = m.pattern.data() + frame * t;
      double *re = out.data.data() + frame * (t + full.nt() * c);
      double *im = out.data.data() + half + frame * (t + full.nt() * c);
      for (tenf::Index p = 0; p < frame; ++p) {
        if (mk[p] == 0.0) {
          re[p] = 0.0;
          im[p] = 0.0;
        }
      }
    }
  }
  return out;
}

int run(int argc, char **argv)
{
  CLI::App app{"Patch-grouped low-rank tensor-function reconstruction for dynamic MRI"};
  app.require_subcommand(1);

  // phantom
  auto *cmd_phantom = app.add_subcommand("phantom", "generate a synthetic dynamic dataset");
  std::string phantom_spec_path, phantom_out;
  cmd_phantom->add_option("--spec", phantom_spec_path, "phantom spec file (defaults built in)");
  cmd_phantom->add_option("--out", phantom_out, "output directory")->required();

  // mask
  auto *cmd_mask = app.add_subcommand("mask", "generate an undersampling mask");
  std::string mask_kind = "vds", mask_out, mask_pgm_dir;
  tenf::Index m_nx = 64, m_ny = 64, m_nt = 8, m_center = 4;
  double m_accel = 8.0;
  uint64_t m_seed = 0;
  cmd_mask->add_option("--kind", mask_kind, "vds | radial | spiral");
  cmd_mask->add_option("--nx", m_nx);
  cmd_mask->add_option("--ny", m_ny);
  cmd_mask->add_option("--nt", m_nt);
  cmd_mask->add_option("--accel", m_accel, "acceleration factor R");
  cmd_mask->add_option("--center", m_center, "always-sampled central lines (vds)");
  cmd_mask->add_option("--seed", m_seed);
  cmd_mask->add_option("--out", mask_out, "output .tft file")->required();
  cmd_mask->add_option("--pgm", mask_pgm_dir, "also write graymap images here");

  // recon
  auto *cmd_recon = app.add_subcommand("recon", "run a reconstruction from a config file");
  std::string recon_config;
  cmd_recon->add_option("--config", recon_config, "config file")->required();

  // ablate
  auto *cmd_ablate = app.add_subcommand("ablate", "run the loss/model ablation suite");
  std::string ablate_config;
  cmd_ablate->add_option("--config", ablate_config, "config file")->required();

  // metrics
  auto *cmd_metrics = app.add_subcommand("metrics", "compare two image files");
  std::string metrics_image, metrics_ref, metrics_csv;
  cmd_metrics->add_option("--image", metrics_image)->required();
  cmd_metrics->add_option("--ref", metrics_ref)->required();
  cmd_metrics->add_option("--csv", metrics_csv, "append a CSV row here");

  // export
  auto *cmd_export = app.add_subcommand("export", "write graymap views of an image file");
  std::string export_image, export_ref, export_out;
  cmd_export->add_option("--image", export_image)->required();
  cmd_export->add_option("--ref", export_ref);
  cmd_export->add_option("--out", export_out)->required();

  app.parse(argc, argv);

  if (cmd_phantom->parsed()) {
    tenf::PhantomSpec spec;
    if (!phantom_spec_path.empty()) {
      spec = tenf::parse_phantom_spec(phantom_spec_path);
    }
    const tenf::PhantomData data = tenf::generate_phantom(spec);
    fs::create_directories(phantom_out);
    tenf::save_tensor(data.truth.data, fs::path(phantom_out) / "truth.tft");
    tenf::save_tensor(data.sens.data, fs::path(phantom_out) / "sens.tft");
    tenf::save_tensor(data.kspace_full.data, fs::path(phantom_out) / "kspace_full.tft");
    std::cout << "phantom: " << spec.nx << "x" << spec.ny << "x" << spec.nt << ", " << spec.ns
              << " coils -> " << phantom_out << "\n";
    return 0;
  }

  if (cmd_mask->parsed()) {
    const tenf::SamplingMask mask =
        make_mask_from(mask_kind, m_nx, m_ny, m_nt, m_accel, m_center, m_seed);
    tenf::save_tensor(mask.pattern, mask_out);
    // Graymap views accompany the binary pattern; default next to it.
    if (mask_pgm_dir.empty()) {
      mask_pgm_dir = fs::path(mask_out).replace_extension().string() + "_views";
    }
    tenf::export_mask(mask, mask_pgm_dir);
    std::cout << "mask: kind=" << mask_kind << " nominal R=" << m_accel
              << " achieved R=" << tenf::achieved_acceleration(mask) << " -> " << mask_out << "\n";
    return 0;
  }

  if (cmd_recon->parsed()) {
    const tenf::TrainConfig config = tenf::parse_train_config(recon_config);
    const LoadedData d = load_recon_inputs(config);
    const tenf::MultiCoilKSpace y = apply_mask(d.y, d.m);
    const tenf::ReconResult result =
        tenf::run_reconstruction(config, y, d.s, d.m, d.truth ? &*d.truth : nullptr);
    const fs::path out(config.output_dir);
    tenf::write_report(result.report, config, out);
    tenf::save_tensor(result.image.data, out / "image.tft");
    tenf::save_tensor(d.m.pattern, out / "mask.tft");
    if (config.export_images) {
      tenf::export_views(result.image, out / "views", d.truth ? &*d.truth : nullptr);
      tenf::export_mask(d.m, out / "mask_views");
    }
    if (result.report.has_truth) {
      std::cout << "zero-filled psnr " << result.report.zero_filled.psnr << " dB, final psnr "
                << result.report.final_after.psnr << " dB\n";
    }
    std::cout << "recon: wrote " << out.string() << "\n";
    return 0;
  }

  if (cmd_ablate->parsed()) {
    const tenf::TrainConfig config = tenf::parse_train_config(ablate_config);
    const LoadedData d = load_recon_inputs(config);
    const tenf::MultiCoilKSpace y = apply_mask(d.y, d.m);
    tenf::run_ablation_suite(config, y, d.s, d.m, d.truth ? &*d.truth : nullptr,
                             config.output_dir);
    std::cout << "ablate: wrote " << config.output_dir << "\n";
    return 0;
  }

  if (cmd_metrics->parsed()) {
    const tenf::ImageSeries x(tenf::load_tensor(metrics_image));
    const tenf::ImageSeries ref(tenf::load_tensor(metrics_ref));
    const tenf::Metrics m = tenf::compare_images(x, ref);
    std::cout << "psnr " << m.psnr << "\nssim " << m.ssim << "\nrmse " << m.rmse << "\n";
    if (!metrics_csv.empty()) {
      std::ofstream out(metrics_csv, std::ios::app);
      out << metrics_image << "," << metrics_ref << "," << m.psnr << "," << m.ssim << ","
          << m.rmse << "\n";
    }
    return 0;
  }

  if (cmd_export->parsed()) {
    const tenf::ImageSeries x(tenf::load_tensor(export_image));
    std::optional<tenf::ImageSeries> ref;
    if (!export_ref.empty()) {
      ref = tenf::ImageSeries(tenf::load_tensor(export_ref));
    }
    tenf::export_views(x, export_out, ref ? &*ref : nullptr);
    std::cout << "export: wrote " << export_out << "\n";
    return 0;
  }
  return 0;
}

} // namespace

int main(int argc, char **argv)
{
  try {
    return run(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = CLI::App{}.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const tenf::ConfigError &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument &e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return 2;
  } catch (const tenf::NumericalError &e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const tenf::IoError &e) {
    std::cerr << "i/o failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
