// Acceptance suite: runs every criterion end to end and prints one
// PASS/FAIL line each. Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "tenf/autodiff.hpp"
#include "tenf/fft.hpp"
#include "tenf/harness.hpp"
#include "tenf/io.hpp"
#include "tenf/losses.hpp"
#include "tenf/mri.hpp"
#include "tenf/patching.hpp"
#include "tenf/phantom.hpp"
#include "tenf/rng.hpp"
#include "tenf/tenf.hpp"

using namespace tenf;
namespace fs = std::filesystem;

namespace {

double now_seconds()
{
  using clock = std::chrono::steady_clock;
  static const clock::time_point start = clock::now();
  return std::chrono::duration<double>(clock::now() - start).count();
}

Tensor random_tensor(const Shape &shape, Rng &rng)
{
  Tensor t(shape);
  for (Index i = 0; i < t.size(); ++i) {
    t[i] = rng.uniform(-1.0, 1.0);
  }
  return t;
}

ImageSeries random_series(Index nx, Index ny, Index nt, Rng &rng)
{
  return ImageSeries(random_tensor({nx, ny, nt, 2}, rng));
}

std::complex<double> cdot(const Tensor &a, const Tensor &b)
{
  const Index half = a.size() / 2;
  double re = 0.0, im = 0.0;
  for (Index i = 0; i < half; ++i) {
    re += a[i] * b[i] + a[half + i] * b[half + i];
    im += a[i] * b[half + i] - a[half + i] * b[i];
  }
  return {re, im};
}

double rdot(const Tensor &a, const Tensor &b)
{
  double acc = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    acc += a[i] * b[i];
  }
  return acc;
}

MultiCoilKSpace masked(const MultiCoilKSpace &full, const SamplingMask &m)
{
  MultiCoilKSpace out = full;
  const Index frame = full.nx() * full.ny();
  const Index half = out.data.size() / 2;
  for (Index c = 0; c < full.ns(); ++c) {
    for (Index t = 0; t < full.nt(); ++t) {
      for (Index p = 0; p < frame; ++p) {
        if (m.pattern[p + frame * t] == 0.0) {
          out.data[p + frame * (t + full.nt() * c)] = 0.0;
          out.data[half + p + frame * (t + full.nt() * c)] = 0.0;
        }
      }
    }
  }
  return out;
}

std::string slurp(const fs::path &p)
{
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// --- criterion 6/9 fixture: the seed-7 phantom experiment, run twice ------

struct EndToEnd {
  TrainConfig config;
  PhantomData data;
  SamplingMask mask;
  MultiCoilKSpace y;
  ReconResult runs[2];
  fs::path dirs[2];
  double seconds_per_run = 0.0;
  bool ready = false;
};

EndToEnd &end_to_end()
{
  static EndToEnd e;
  if (e.ready) {
    return e;
  }
  PhantomSpec spec;
  spec.nx = 64;
  spec.ny = 64;
  spec.nt = 8;
  spec.ns = 4;
  spec.noise_std = 0.01;
  spec.seed = 7;
  e.data = generate_phantom(spec);
  e.mask = make_vds_mask(64, 64, 8, 8.0, 4, 7);
  e.y = masked(e.data.kspace_full, e.mask);

  e.config = TrainConfig{};
  e.config.nx = 64;
  e.config.ny = 64;
  e.config.nt = 8;
  e.config.ns = 4;
  e.config.accel = 8.0;
  e.config.mask_seed = 7;
  e.config.seed = 7;
  e.config.iterations = 3000;
  e.config.metric_cadence = 250;

  const fs::path base = fs::temp_directory_path() / "tenf_acceptance_e2e";
  fs::remove_all(base);
  for (int run = 0; run < 2; ++run) {
    e.dirs[run] = base / std::to_string(run);
    TrainConfig config = e.config;
    config.output_dir = e.dirs[run].string();
    const double t0 = now_seconds();
    e.runs[run] = run_reconstruction(config, e.y, e.data.sens, e.mask, &e.data.truth);
    e.seconds_per_run = now_seconds() - t0;
    write_report(e.runs[run].report, config, e.dirs[run]);
    save_tensor(e.runs[run].image.data, e.dirs[run] / "image.tft");
  }
  e.ready = true;
  return e;
}

// --- criteria -------------------------------------------------------------

bool criterion_operators(std::string &note)
{
  const double t0 = now_seconds();
  Rng rng(101);
  double worst_encode = 0.0, worst_patch = 0.0, worst_fft = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    // Encoding operator adjointness.
    ImageSeries x = random_series(16, 12, 3, rng);
    CoilSensitivities s(16, 12, 3);
    for (Index i = 0; i < s.data.size(); ++i) {
      s.data[i] = rng.uniform(-1.0, 1.0);
    }
    SamplingMask m;
    m.pattern = Tensor({16, 12, 3});
    for (Index i = 0; i < m.pattern.size(); ++i) {
      m.pattern[i] = rng.uniform() < 0.4 ? 1.0 : 0.0;
    }
    MultiCoilKSpace y(16, 12, 3, 3);
    for (Index i = 0; i < y.data.size(); ++i) {
      y.data[i] = rng.uniform(-1.0, 1.0);
    }
    const auto lhs = cdot(forward_encode(x, s, m).data, y.data);
    const auto rhs = cdot(x.data, adjoint_encode(y, s, m).data);
    const double nx = std::sqrt(cdot(x.data, x.data).real());
    const double ny = std::sqrt(cdot(y.data, y.data).real());
    worst_encode = std::max(worst_encode, std::abs(lhs - rhs) / (nx * ny));

    // Patch operator adjointness.
    ImageSeries px = random_series(16, 16, 2, rng);
    const PatchIndexMap map = block_match(px, 2, 4, 3);
    NonlocalTensorBatch b;
    b.map = &map;
    b.data = random_tensor(map.batch_shape(), rng);
    const double pl = rdot(gather_groups(px, map).data, b.data);
    const double pr = rdot(px.data, scatter_adjoint(b).data);
    const double nxp = std::sqrt(rdot(px.data, px.data));
    const double nb = std::sqrt(rdot(b.data, b.data));
    worst_patch = std::max(worst_patch, std::abs(pl - pr) / (nxp * nb));

    // FFT round trip and norm preservation.
    const Tensor f = random_tensor({12, 10, 2, 2}, rng);
    const Tensor k = fftc::fft2c(f);
    const Tensor back = fftc::ifft2c(k);
    double maxdiff = 0.0;
    for (Index i = 0; i < f.size(); ++i) {
      maxdiff = std::max(maxdiff, std::abs(back[i] - f[i]));
    }
    worst_fft = std::max(worst_fft, maxdiff);
    worst_fft = std::max(worst_fft, std::abs(std::sqrt(rdot(f, f)) - std::sqrt(rdot(k, k))));
  }
  const double elapsed = now_seconds() - t0;
  std::ostringstream os;
  os << "A/A^H " << worst_encode << ", P/P^T " << worst_patch << ", fft " << worst_fft << ", "
     << elapsed << " s";
  note = os.str();
  return worst_encode < 1e-10 && worst_patch < 1e-10 && worst_fft < 1e-12 && elapsed < 10.0;
}

bool criterion_tensor_algebra(std::string &note)
{
  const double t0 = now_seconds();
  Rng rng(102);
  double worst = 0.0;
  const std::vector<Shape> shapes = {{3, 4, 5}, {2, 3, 4, 2}, {4, 4, 4, 2, 3}};
  for (const Shape &shape : shapes) {
    const Tensor t = random_tensor(shape, rng);
    for (int mode = 1; mode <= t.rank(); ++mode) {
      const Tensor round = fold(unfold(t, mode), mode, shape);
      for (Index i = 0; i < t.size(); ++i) {
        worst = std::max(worst, std::abs(round[i] - t[i]));
      }
      MatrixX<double> a(2, shape[mode - 1]);
      for (Index i = 0; i < a.size(); ++i) {
        a(i % 2, i / 2) = rng.uniform(-1.0, 1.0);
      }
      Shape out_shape = shape;
      out_shape[mode - 1] = 2;
      const Tensor direct = mode_product(t, a, mode);
      const Tensor via = fold(MatrixX<double>(a * unfold(t, mode)), mode, out_shape);
      for (Index i = 0; i < direct.size(); ++i) {
        worst = std::max(worst, std::abs(direct[i] - via[i]));
      }
    }
  }
  // Tucker reconstruction against explicit nested-loop contraction on a
  // (2,2,2,2,2) core expanded to 4x4x4x2x3.
  const Tensor core = random_tensor({2, 2, 2, 2, 2}, rng);
  const Shape dims = {4, 4, 4, 2, 3};
  std::vector<MatrixX<double>> factors;
  for (int m = 0; m < 5; ++m) {
    MatrixX<double> f(dims[m], 2);
    for (Index i = 0; i < f.size(); ++i) {
      f(i % dims[m], i / dims[m]) = rng.uniform(-1.0, 1.0);
    }
    factors.push_back(f);
  }
  const Tensor fast = tucker_reconstruct(core, factors);
  Tensor slow(dims);
  std::vector<Index> oi(5, 0);
  for (Index of = 0; of < slow.size(); ++of) {
    double acc = 0.0;
    std::vector<Index> ci(5, 0);
    for (Index cf = 0; cf < core.size(); ++cf) {
      double term = core[cf];
      for (int m = 0; m < 5; ++m) {
        term *= factors[m](oi[m], ci[m]);
      }
      acc += term;
      for (int m = 0; m < 5; ++m) {
        if (++ci[m] < 2) {
          break;
        }
        ci[m] = 0;
      }
    }
    slow[of] = acc;
    for (int m = 0; m < 5; ++m) {
      if (++oi[m] < dims[m]) {
        break;
      }
      oi[m] = 0;
    }
  }
  for (Index i = 0; i < fast.size(); ++i) {
    worst = std::max(worst, std::abs(fast[i] - slow[i]));
  }
  const double elapsed = now_seconds() - t0;
  std::ostringstream os;
  os << "max error " << worst << ", " << elapsed << " s";
  note = os.str();
  return worst < 1e-12 && elapsed < 10.0;
}

bool criterion_gradients(std::string &note)
{
  const double t0 = now_seconds();
  Rng rng(103);
  // 8x8x3 toy, 2 coils, p=2, K=2.
  ImageSeries truth = random_series(8, 8, 3, rng);
  CoilSensitivities s(8, 8, 2);
  for (Index i = 0; i < s.data.size(); ++i) {
    s.data[i] = rng.uniform(-1.0, 1.0);
  }
  SamplingMask m;
  m.pattern = Tensor({8, 8, 3});
  for (Index i = 0; i < m.pattern.size(); ++i) {
    m.pattern[i] = rng.uniform() < 0.5 ? 1.0 : 0.0;
  }
  const MultiCoilKSpace y = forward_encode(truth, s, m);
  const EncodeConstants consts = make_encode_constants(y, s, m);

  const PaddedSeries padded = pad_replicate(adjoint_encode(y, s, m), 2);
  const PatchIndexMap map = block_match(padded.image, 2, 2, 2, padded.pad_x, padded.pad_y);
  TenfModel model = init_model(map, 3, {2, 2, 3, 2, 2}, 103);
  for (Index i = 0; i < model.cores.size(); ++i) {
    model.cores[i] = rng.uniform(-0.5, 0.5);
  }
  auto scatter = std::make_shared<const std::vector<Index>>(batch_index_map(map));
  auto crop = std::make_shared<const std::vector<Index>>(crop_index_map(map));
  Tensor inv = contribution_count(map);
  for (Index i = 0; i < inv.size(); ++i) {
    inv[i] = 1.0 / inv[i];
  }
  auto params = model_params(model, DecayTarget::Networks);
  std::vector<Tensor *> values;
  for (auto &p : params) {
    values.push_back(p.value);
  }

  double worst = 0.0;
  for (LossVariant v :
       {LossVariant::Full, LossVariant::TvOnly, LossVariant::LrOnly, LossVariant::DcOnly}) {
    LossWeights w;
    w.variant = v;
    auto build = [&](ad::Tape &tape) {
      ad::BoundLoss b;
      const ModelGraph g = build_model_graph(tape, model, map, scatter, crop, inv);
      b.params = g.params;
      b.loss = total_loss(tape, g.image, consts, w).total;
      return b;
    };
    Rng pick(104);
    worst = std::max(worst, ad::check_gradients(build, values, 1e-6, 4, pick));
  }
  const double elapsed = now_seconds() - t0;
  std::ostringstream os;
  os << "max rel err " << worst << " over 4 variants x " << values.size() << " params, "
     << elapsed << " s";
  note = os.str();
  return worst < 1e-4 && elapsed < 120.0;
}

bool criterion_block_matching(std::string &note)
{
  int found = 0;
  for (int trial = 0; trial < 50; ++trial) {
    Rng rng(200 + trial);
    ImageSeries x = random_series(16, 16, 2, rng);
    // Plant an exact duplicate of the key patch at (6, 6) at a random
    // in-window offset.
    const Index ox = 1 + static_cast<Index>(rng.below(4)); // 2..5 pixels away
    const Index oy = 1 + static_cast<Index>(rng.below(4));
    for (Index ch = 0; ch < 2; ++ch) {
      for (Index t = 0; t < 2; ++t) {
        for (Index j = 0; j < 2; ++j) {
          for (Index i = 0; i < 2; ++i) {
            x.data(6 + ox + i, 6 + oy + j, t, ch) = x.data(6 + i, 6 + j, t, ch);
          }
        }
      }
    }
    const PatchIndexMap map = block_match(x, 2, 2, 6);
    const Index l = 3 + 8 * 3; // key origin (6, 6) on the 8x8 stride-2 grid
    if (map.groups[l][0].x == 6 && map.groups[l][0].y == 6 &&
        map.groups[l][1].x == 6 + ox && map.groups[l][1].y == 6 + oy) {
      ++found;
    }
  }

  // Tie-break contract on a constant image: candidates in (x0, y0) order.
  ImageSeries flat(6, 6, 1);
  for (Index i = 0; i < flat.data.size(); ++i) {
    flat.data[i] = 1.0;
  }
  const PatchIndexMap tie = block_match(flat, 2, 4, 2);
  const auto &g = tie.groups[4]; // key (2, 2)
  const bool ties_ok = g[0].x == 2 && g[0].y == 2 && g[1].x == 0 && g[1].y == 0 && g[2].x == 0 &&
                       g[2].y == 1 && g[3].x == 0 && g[3].y == 2;

  std::ostringstream os;
  os << found << "/50 planted duplicates in top-2, tie-break "
     << (ties_ok ? "exact" : "violated");
  note = os.str();
  return found == 50 && ties_ok;
}

bool criterion_tiling(std::string &note)
{
  Rng rng(105);
  bool exact = true;
  for (int trial = 0; trial < 5; ++trial) {
    ImageSeries x = random_series(10, 8, 3, rng);
    const PatchIndexMap map = block_match(x, 2, 1, 0);
    const ImageSeries round = assemble_average(gather_groups(x, map));
    for (Index i = 0; i < x.data.size(); ++i) {
      exact = exact && round.data[i] == x.data[i];
    }
  }
  note = exact ? "bit-exact over 5 random images" : "mismatch";
  return exact;
}

bool criterion_end_to_end(std::string &note)
{
  const EndToEnd &e = end_to_end();
  const RunReport &r = e.runs[0].report;
  const double gain = r.final_after.psnr - r.zero_filled.psnr;
  std::ostringstream os;
  os << "zero-filled " << r.zero_filled.psnr << " dB, final " << r.final_after.psnr
     << " dB (gain " << gain << "), dc " << r.dc_before << " -> " << r.dc_after << ", "
     << e.seconds_per_run << " s/run";
  note = os.str();
  return gain >= 6.0 && r.dc_after <= r.dc_before && e.seconds_per_run < 1800.0;
}

bool criterion_ablation(std::string &note)
{
  const EndToEnd &e = end_to_end();
  const fs::path dir = fs::temp_directory_path() / "tenf_acceptance_ablation";
  fs::remove_all(dir);
  TrainConfig config = e.config;
  config.iterations = 600;
  const auto rows = run_ablation_suite(config, e.y, e.data.sens, e.mask, &e.data.truth, dir);
  double full_psnr = 0.0, dc_only_psnr = 0.0;
  for (const auto &row : rows) {
    if (row.model == "patch" && row.variant == "full") {
      full_psnr = row.report.final_after.psnr;
    }
    if (row.model == "patch" && row.variant == "dc-only") {
      dc_only_psnr = row.report.final_after.psnr;
    }
  }
  const bool table = fs::exists(dir / "ablation_table.txt") &&
                     fs::exists(dir / "ablation_table.csv");
  std::ostringstream os;
  os << "full " << full_psnr << " dB vs dc-only " << dc_only_psnr << " dB, " << rows.size()
     << " runs, table " << (table ? "emitted" : "missing");
  note = os.str();
  return rows.size() == 8 && table && full_psnr >= dc_only_psnr - 0.1;
}

bool criterion_lr_schedule(std::string &note)
{
  const LrSchedule s;
  const bool ok = lr_at(s, 0) == 1e-4 && lr_at(s, 500) == 2e-5 && lr_at(s, 1000) == 4e-6;
  note = ok ? "1e-4 / 2e-5 / 4e-6 exact at 0/500/1000" : "schedule values drifted";
  return ok;
}

bool criterion_reproducibility(std::string &note)
{
  const EndToEnd &e = end_to_end();
  bool identical = true;
  std::string which;
  for (const char *name : {"report.txt", "metrics.csv", "loss.csv", "image.tft"}) {
    if (slurp(e.dirs[0] / name) != slurp(e.dirs[1] / name)) {
      identical = false;
      which += std::string(name) + " ";
    }
  }
  note = identical ? "report.txt, metrics.csv, loss.csv, image.tft byte-identical"
                   : "differs: " + which;
  return identical;
}

bool criterion_masks(std::string &note)
{
  double worst = 0.0;
  bool center_ok = true;
  for (double r : {8.0, 12.0, 16.0, 21.0}) {
    const Index center_lines = std::min<Index>(4, static_cast<Index>(64.0 / r));
    const SamplingMask vds = make_vds_mask(64, 64, 8, r, center_lines, 7);
    const SamplingMask rad = make_pseudo_radial_mask(64, 64, 8, r, 7);
    const SamplingMask spi = make_pseudo_spiral_mask(64, 64, 8, r, 7);
    for (const SamplingMask *m : {&vds, &rad, &spi}) {
      worst = std::max(worst, std::abs(achieved_acceleration(*m) - r) / r);
      for (Index t = 0; t < 8; ++t) {
        center_ok = center_ok && m->pattern(32, 32, t) == 1.0;
      }
    }
  }
  std::ostringstream os;
  os << "worst acceleration deviation " << 100.0 * worst << "%, center "
     << (center_ok ? "always sampled" : "missed");
  note = os.str();
  return worst <= 0.15 && center_ok;
}

struct Criterion {
  int id;
  const char *label;
  std::function<bool(std::string &)> run;
};

} // namespace

int main()
{
  const std::vector<Criterion> criteria = {
      {1, "operator adjointness and fft unitarity", criterion_operators},
      {2, "tensor mode algebra vs oracles", criterion_tensor_algebra},
      {3, "finite-difference gradients, all loss variants", criterion_gradients},
      {4, "block matching: planted duplicates and tie-break", criterion_block_matching},
      {5, "non-overlapping tiling identity", criterion_tiling},
      {6, "end-to-end phantom reconstruction gain", criterion_end_to_end},
      {7, "ablation suite and loss ordering", criterion_ablation},
      {8, "learning-rate schedule values", criterion_lr_schedule},
      {9, "byte-identical repeated runs", criterion_reproducibility},
      {10, "mask acceleration budgets and center coverage", criterion_masks},
  };

  int failures = 0;
  for (const Criterion &c : criteria) {
    std::string note;
    bool ok = false;
    try {
      ok = c.run(note);
    } catch (const std::exception &e) {
      note = std::string("exception: ") + e.what();
    }
    std::printf("%s  %2d  %s (%s)\n", ok ? "PASS" : "FAIL", c.id, c.label, note.c_str());
    std::fflush(stdout);
    failures += ok ? 0 : 1;
  }
  return failures;
}
