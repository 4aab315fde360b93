#include "tenf/mri.hpp"

#include <algorithm>
#include <cmath>

#include "tenf/errors.hpp"
#include "tenf/fft.hpp"
#include "tenf/rng.hpp"

namespace tenf {

namespace {

struct CxView {
  const double *re;
  const double *im;
};

CxView coil_view(const CoilSensitivities &s, Index c)
{
  const Index frame = s.nx() * s.ny();
  const Index half = s.data.size() / 2;
  return {s.data.data() + frame * c, s.data.data() + half + frame * c};
}

void check_encode_shapes(Index nx, Index ny, Index nt, const CoilSensitivities &s,
                         const SamplingMask &m)
{
  if (s.nx() != nx || s.ny() != ny) {
    throw std::invalid_argument("encode: sensitivities " + shape_string(s.data.shape()) +
                                " do not match image extents");
  }
  if (m.nx() != nx || m.ny() != ny || m.nt() != nt) {
    throw std::invalid_argument("encode: mask " + shape_string(m.pattern.shape()) +
                                " does not match image extents");
  }
}

} // namespace

const char *mask_kind_name(MaskKind kind)
{
  switch (kind) {
  case MaskKind::VariableDensity:
    return "vds";
  case MaskKind::PseudoRadial:
    return "radial";
  case MaskKind::PseudoSpiral:
    return "spiral";
  }
  return "?";
}

MaskKind mask_kind_from_name(const std::string &name)
{
  if (name == "vds") {
    return MaskKind::VariableDensity;
  }
  if (name == "radial") {
    return MaskKind::PseudoRadial;
  }
  if (name == "spiral") {
    return MaskKind::PseudoSpiral;
  }
  throw ConfigError("unknown mask kind '" + name + "' (expected vds, radial or spiral)");
}

double achieved_acceleration(const SamplingMask &mask)
{
  double ones = 0.0;
  for (Index i = 0; i < mask.pattern.size(); ++i) {
    ones += mask.pattern[i];
  }
  if (ones == 0.0) {
    throw std::invalid_argument("mask samples nothing");
  }
  return static_cast<double>(mask.pattern.size()) / ones;
}

MultiCoilKSpace forward_encode(const ImageSeries &x, const CoilSensitivities &s,
                               const SamplingMask &m)
{
  check_encode_shapes(x.nx(), x.ny(), x.nt(), s, m);
  const Index nx = x.nx(), ny = x.ny(), nt = x.nt(), ns = s.ns();
  const Index frame = nx * ny;
  const Index xhalf = x.data.size() / 2;

  MultiCoilKSpace out(nx, ny, nt, ns);
  const Index ohalf = out.data.size() / 2;

  ImageSeries weighted(nx, ny, nt);
  const Index whalf = weighted.data.size() / 2;
  for (Index c = 0; c < ns; ++c) {
    const CxView sc = coil_view(s, c);
    for (Index t = 0; t < nt; ++t) {
      const double *xr = x.data.data() + frame * t;
      const double *xi = x.data.data() + xhalf + frame * t;
      double *wr = weighted.data.data() + frame * t;
      double *wi = weighted.data.data() + whalf + frame * t;
      for (Index p = 0; p < frame; ++p) {
        wr[p] = sc.re[p] * xr[p] - sc.im[p] * xi[p];
        wi[p] = sc.re[p] * xi[p] + sc.im[p] * xr[p];
      }
    }
    const Tensor k = fftc::fft2c(weighted.data);
    const Index khalf = k.size() / 2;
    for (Index t = 0; t < nt; ++t) {
      const double *mk = m.pattern.data() + frame * t;
      const double *kr = k.data() + frame * t;
      const double *ki = k.data() + khalf + frame * t;
      double *yr = out.data.data() + frame * (t + nt * c);
      double *yi = out.data.data() + ohalf + frame * (t + nt * c);
      for (Index p = 0; p < frame; ++p) {
        yr[p] = mk[p] != 0.0 ? kr[p] : 0.0;
        yi[p] = mk[p] != 0.0 ? ki[p] : 0.0;
      }
    }
  }
  return out;
}

ImageSeries adjoint_encode(const MultiCoilKSpace &y, const CoilSensitivities &s,
                           const SamplingMask &m)
{
  check_encode_shapes(y.nx(), y.ny(), y.nt(), s, m);
  if (s.ns() != y.ns()) {
    throw std::invalid_argument("adjoint_encode: coil count mismatch");
  }
  const Index nx = y.nx(), ny = y.ny(), nt = y.nt(), ns = y.ns();
  const Index frame = nx * ny;
  const Index yhalf = y.data.size() / 2;

  ImageSeries out(nx, ny, nt);
  const Index ohalf = out.data.size() / 2;
  ImageSeries masked(nx, ny, nt);
  const Index mhalf = masked.data.size() / 2;

  for (Index c = 0; c < ns; ++c) {
    for (Index t = 0; t < nt; ++t) {
      const double *mk = m.pattern.data() + frame * t;
      const double *yr = y.data.data() + frame * (t + nt * c);
      const double *yi = y.data.data() + yhalf + frame * (t + nt * c);
      double *kr = masked.data.data() + frame * t;
      double *ki = masked.data.data() + mhalf + frame * t;
      for (Index p = 0; p < frame; ++p) {
        kr[p] = mk[p] != 0.0 ? yr[p] : 0.0;
        ki[p] = mk[p] != 0.0 ? yi[p] : 0.0;
      }
    }
    const Tensor img = fftc::ifft2c(masked.data);
    const Index ihalf = img.size() / 2;
    const CxView sc = coil_view(s, c);
    for (Index t = 0; t < nt; ++t) {
      const double *ir = img.data() + frame * t;
      const double *ii = img.data() + ihalf + frame * t;
      double *xr = out.data.data() + frame * t;
      double *xi = out.data.data() + ohalf + frame * t;
      for (Index p = 0; p < frame; ++p) {
        xr[p] += sc.re[p] * ir[p] + sc.im[p] * ii[p];
        xi[p] += sc.re[p] * ii[p] - sc.im[p] * ir[p];
      }
    }
  }
  return out;
}

ImageSeries time_averaged_image(const MultiCoilKSpace &y, const CoilSensitivities &s,
                                const SamplingMask &m)
{
  check_encode_shapes(y.nx(), y.ny(), y.nt(), s, m);
  const Index nx = y.nx(), ny = y.ny(), nt = y.nt(), ns = y.ns();
  const Index frame = nx * ny;
  const Index yhalf = y.data.size() / 2;

  std::vector<double> den(frame, 0.0);
  for (Index c = 0; c < ns; ++c) {
    const CxView sc = coil_view(s, c);
    for (Index p = 0; p < frame; ++p) {
      den[p] += sc.re[p] * sc.re[p] + sc.im[p] * sc.im[p];
    }
  }

  ImageSeries out(nx, ny, nt);
  const Index ohalf = out.data.size() / 2;
  Tensor avg({nx, ny, 1, 2});
  for (Index c = 0; c < ns; ++c) {
    for (Index p = 0; p < frame; ++p) {
      double re = 0.0, im = 0.0, count = 0.0;
      for (Index t = 0; t < nt; ++t) {
        if (m.pattern[p + frame * t] != 0.0) {
          re += y.data[p + frame * (t + nt * c)];
          im += y.data[yhalf + p + frame * (t + nt * c)];
          count += 1.0;
        }
      }
      avg[p] = count > 0.0 ? re / count : 0.0;
      avg[frame + p] = count > 0.0 ? im / count : 0.0;
    }
    const Tensor img = fftc::ifft2c(avg);
    const CxView sc = coil_view(s, c);
    for (Index p = 0; p < frame; ++p) {
      const double ir = img[p], ii = img[frame + p];
      const double re = sc.re[p] * ir + sc.im[p] * ii;
      const double im = sc.re[p] * ii - sc.im[p] * ir;
      for (Index t = 0; t < nt; ++t) {
        out.data[p + frame * t] += re;
        out.data[ohalf + p + frame * t] += im;
      }
    }
  }
  for (Index t = 0; t < nt; ++t) {
    for (Index p = 0; p < frame; ++p) {
      if (den[p] > 0.0) {
        out.data[p + frame * t] /= den[p];
        out.data[ohalf + p + frame * t] /= den[p];
      }
    }
  }
  return out;
}

SamplingMask make_vds_mask(Index nx, Index ny, Index nt, double r, Index center_lines,
                           uint64_t seed)
{
  if (r < 1.0 || center_lines < 1) {
    throw std::invalid_argument("make_vds_mask: need r >= 1 and center_lines >= 1");
  }
  // Lines per frame: the rounding of ny/r that lands closest to r.
  Index lines = ny;
  if (r > 1.0) {
    const Index lo = std::max<Index>(1, static_cast<Index>(std::floor(ny / r)));
    const Index hi = std::min(ny, lo + 1);
    lines = (std::abs(static_cast<double>(ny) / lo - r) <=
             std::abs(static_cast<double>(ny) / hi - r))
                ? lo
                : hi;
  }
  if (lines < center_lines) {
    throw std::invalid_argument("make_vds_mask: r=" + std::to_string(r) + " leaves only " +
                                std::to_string(lines) + " lines per frame, fewer than " +
                                std::to_string(center_lines) + " center lines");
  }
  const double achieved = static_cast<double>(ny) / static_cast<double>(lines);
  if (std::abs(achieved - r) > 0.15 * r) {
    throw std::invalid_argument("make_vds_mask: acceleration " + std::to_string(r) +
                                " not achievable within 15% at ny=" + std::to_string(ny));
  }

  const Index center = ny / 2;
  const double sigma = static_cast<double>(ny) / 6.0;
  Rng rng(seed);

  SamplingMask mask;
  mask.kind = MaskKind::VariableDensity;
  mask.nominal_r = r;
  mask.pattern = Tensor({nx, ny, nt});

  for (Index t = 0; t < nt; ++t) {
    std::vector<bool> on(ny, false);
    const Index first = center - center_lines / 2;
    for (Index j = 0; j < center_lines; ++j) {
      on[first + j] = true;
    }
    std::vector<Index> candidates;
    std::vector<double> weight;
    for (Index ky = 0; ky < ny; ++ky) {
      if (!on[ky]) {
        candidates.push_back(ky);
        const double d = static_cast<double>(ky - center);
        weight.push_back(std::exp(-d * d / (2.0 * sigma * sigma)));
      }
    }
    for (Index drawn = center_lines; drawn < lines; ++drawn) {
      double total = 0.0;
      for (double w : weight) {
        total += w;
      }
      double u = rng.uniform() * total;
      size_t pick = 0;
      for (; pick + 1 < candidates.size(); ++pick) {
        u -= weight[pick];
        if (u <= 0.0) {
          break;
        }
      }
      on[candidates[pick]] = true;
      candidates.erase(candidates.begin() + pick);
      weight.erase(weight.begin() + pick);
    }
    for (Index ky = 0; ky < ny; ++ky) {
      if (on[ky]) {
        for (Index kx = 0; kx < nx; ++kx) {
          mask.pattern(kx, ky, t) = 1.0;
        }
      }
    }
  }
  return mask;
}

namespace {

// Shared scaffolding for the rasterized trajectories: frames are built by
// adding whole spokes/arms until the per-frame sample budget is met, then
// the outermost samples of the final one are trimmed back to land within
// budget.
class FrameRaster {
public:
  FrameRaster(Index nx, Index ny) : nx_(nx), ny_(ny), hit_(nx * ny, 0) {}

  // Returns true if the point was newly set; records it in the undo list.
  bool add(double fx, double fy)
  {
    const Index ix = static_cast<Index>(std::lround(fx));
    const Index iy = static_cast<Index>(std::lround(fy));
    if (ix < 0 || ix >= nx_ || iy < 0 || iy >= ny_) {
      return false;
    }
    const Index flat = ix + nx_ * iy;
    if (hit_[flat]) {
      return false;
    }
    hit_[flat] = 1;
    undo_.push_back(flat);
    ++count_;
    return true;
  }

  void begin_stroke() { undo_.clear(); }

  // Removes the most recently added points (undo list tail first) until
  // count <= target or the stroke is exhausted.
  void trim_to(Index target)
  {
    while (count_ > target && !undo_.empty()) {
      hit_[undo_.back()] = 0;
      undo_.pop_back();
      --count_;
    }
  }

  Index count() const { return count_; }

  void write_frame(Tensor &pattern, Index t) const
  {
    for (Index iy = 0; iy < ny_; ++iy) {
      for (Index ix = 0; ix < nx_; ++ix) {
        if (hit_[ix + nx_ * iy]) {
          pattern(ix, iy, t) = 1.0;
        }
      }
    }
  }

private:
  Index nx_, ny_;
  std::vector<char> hit_;
  std::vector<Index> undo_;
  Index count_ = 0;
};

constexpr double kGoldenAngle = M_PI * 0.6180339887498949; // ~111.25 degrees

SamplingMask make_trajectory_mask(Index nx, Index ny, Index nt, double r, uint64_t seed,
                                  MaskKind kind)
{
  if (r < 1.0) {
    throw std::invalid_argument("trajectory mask: need r >= 1");
  }
  SamplingMask mask;
  mask.kind = kind;
  mask.nominal_r = r;
  mask.pattern = Tensor({nx, ny, nt});

  if (r < 1.05) {
    std::fill(mask.pattern.data(), mask.pattern.data() + mask.pattern.size(), 1.0);
    return mask;
  }

  Rng rng(seed);
  const double a0 = rng.uniform(0.0, M_PI);
  const double cx = static_cast<double>(nx / 2);
  const double cy = static_cast<double>(ny / 2);
  const double rmax = std::hypot(std::max(cx, static_cast<double>(nx - 1) - cx),
                                 std::max(cy, static_cast<double>(ny - 1) - cy));
  const Index target = std::max<Index>(1, static_cast<Index>(std::lround(nx * ny / r)));
  const Index max_strokes = 32 * std::max(nx, ny);

  for (Index t = 0; t < nt; ++t) {
    FrameRaster raster(nx, ny);
    const double frame_offset = a0 + kGoldenAngle * 0.5 * static_cast<double>(t);
    for (Index j = 0; j < max_strokes && raster.count() < target; ++j) {
      raster.begin_stroke();
      if (kind == MaskKind::PseudoRadial) {
        const double theta = std::fmod(frame_offset + kGoldenAngle * static_cast<double>(j), M_PI);
        for (double s = -rmax; s <= rmax; s += 0.5) {
          raster.add(cx + s * std::cos(theta), cy + s * std::sin(theta));
        }
      } else {
        const double theta0 = frame_offset + kGoldenAngle * static_cast<double>(j);
        const double pitch = 2.0; // radial growth per turn, in pixels
        double phi = 0.0;
        while (true) {
          const double rad = pitch * phi / (2.0 * M_PI);
          if (rad > rmax) {
            break;
          }
          raster.add(cx + rad * std::cos(theta0 + phi), cy + rad * std::sin(theta0 + phi));
          phi += 0.5 / std::max(1.0, std::hypot(pitch / (2.0 * M_PI), rad));
        }
      }
    }
    raster.trim_to(target);
    raster.write_frame(mask.pattern, t);
  }
  return mask;
}

} // namespace

SamplingMask make_pseudo_radial_mask(Index nx, Index ny, Index nt, double r, uint64_t seed)
{
  return make_trajectory_mask(nx, ny, nt, r, seed, MaskKind::PseudoRadial);
}

SamplingMask make_pseudo_spiral_mask(Index nx, Index ny, Index nt, double r, uint64_t seed)
{
  return make_trajectory_mask(nx, ny, nt, r, seed, MaskKind::PseudoSpiral);
}

Eigen::MatrixXcd casorati(const ImageSeries &x)
{
  const Index rows = x.nx() * x.ny();
  const Index nt = x.nt();
  const Index half = x.data.size() / 2;
  Eigen::MatrixXcd m(rows, nt);
  m.real() = Eigen::Map<const Eigen::MatrixXd>(x.data.data(), rows, nt);
  m.imag() = Eigen::Map<const Eigen::MatrixXd>(x.data.data() + half, rows, nt);
  return m;
}

namespace {

// Magnitude images of x and ref, both divided by max |ref|.
void normalized_magnitudes(const ImageSeries &x, const ImageSeries &ref, std::vector<double> &mx,
                           std::vector<double> &mr)
{
  if (x.data.shape() != ref.data.shape()) {
    throw std::invalid_argument("metrics: shape mismatch " + shape_string(x.data.shape()) +
                                " vs " + shape_string(ref.data.shape()));
  }
  const Index n = x.data.size() / 2;
  mx.resize(n);
  mr.resize(n);
  double peak = 0.0;
  for (Index i = 0; i < n; ++i) {
    mr[i] = std::hypot(ref.data[i], ref.data[n + i]);
    mx[i] = std::hypot(x.data[i], x.data[n + i]);
    peak = std::max(peak, mr[i]);
  }
  if (peak == 0.0) {
    throw std::invalid_argument("metrics: reference is identically zero");
  }
  for (Index i = 0; i < n; ++i) {
    mr[i] /= peak;
    mx[i] /= peak;
  }
}

} // namespace

double rmse(const ImageSeries &x, const ImageSeries &ref)
{
  std::vector<double> mx, mr;
  normalized_magnitudes(x, ref, mx, mr);
  double acc = 0.0;
  for (size_t i = 0; i < mx.size(); ++i) {
    const double d = mx[i] - mr[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(mx.size()));
}

double psnr(const ImageSeries &x, const ImageSeries &ref)
{
  const double e = rmse(x, ref);
  if (e <= 0.0) {
    return 200.0;
  }
  return std::min(200.0, 20.0 * std::log10(1.0 / e));
}

double ssim(const ImageSeries &x, const ImageSeries &ref)
{
  std::vector<double> mx, mr;
  normalized_magnitudes(x, ref, mx, mr);

  const Index nx = x.nx(), ny = x.ny(), nt = x.nt();
  Index w = std::min<Index>(11, std::min(nx, ny));
  if (w % 2 == 0) {
    --w;
  }
  const Index hw = w / 2;
  const double sigma = 1.5;
  std::vector<double> kernel(w * w);
  double ksum = 0.0;
  for (Index j = 0; j < w; ++j) {
    for (Index i = 0; i < w; ++i) {
      const double dx = static_cast<double>(i - hw), dy = static_cast<double>(j - hw);
      kernel[i + w * j] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      ksum += kernel[i + w * j];
    }
  }
  for (double &k : kernel) {
    k /= ksum;
  }

  const double c1 = 0.01 * 0.01;
  const double c2 = 0.03 * 0.03;
  double acc = 0.0;
  Index count = 0;
  for (Index t = 0; t < nt; ++t) {
    const double *a = mx.data() + nx * ny * t;
    const double *b = mr.data() + nx * ny * t;
    for (Index py = hw; py < ny - hw; ++py) {
      for (Index px = hw; px < nx - hw; ++px) {
        double mu_a = 0.0, mu_b = 0.0;
        for (Index j = 0; j < w; ++j) {
          for (Index i = 0; i < w; ++i) {
            const double k = kernel[i + w * j];
            const Index p = (px + i - hw) + nx * (py + j - hw);
            mu_a += k * a[p];
            mu_b += k * b[p];
          }
        }
        double var_a = 0.0, var_b = 0.0, cov = 0.0;
        for (Index j = 0; j < w; ++j) {
          for (Index i = 0; i < w; ++i) {
            const double k = kernel[i + w * j];
            const Index p = (px + i - hw) + nx * (py + j - hw);
            const double da = a[p] - mu_a;
            const double db = b[p] - mu_b;
            var_a += k * da * da;
            var_b += k * db * db;
            cov += k * da * db;
          }
        }
        acc += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
               ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
        ++count;
      }
    }
  }
  return count > 0 ? acc / static_cast<double>(count) : 1.0;
}

Metrics compare_images(const ImageSeries &x, const ImageSeries &ref)
{
  Metrics m;
  m.rmse = rmse(x, ref);
  m.psnr = psnr(x, ref);
  m.ssim = ssim(x, ref);
  return m;
}

} // namespace tenf
