#pragma once

#include <Eigen/Dense>

#include "tenf/tensor.hpp"

// The multi-coil Cartesian encoding model: per frame and coil the image is
// weighted by the coil sensitivity, Fourier transformed (centered,
// orthonormal) and sampled by a binary mask. Complex values are carried as a
// trailing real/imag channel mode everywhere.

namespace tenf {

struct ImageSeries {
  Tensor data; // (nx, ny, nt, 2)

  ImageSeries() = default;
  ImageSeries(Index nx, Index ny, Index nt) : data({nx, ny, nt, 2}) {}
  explicit ImageSeries(Tensor t) : data(std::move(t))
  {
    if (data.rank() != 4 || data.shape()[3] != 2) {
      throw std::invalid_argument("ImageSeries: expected (nx, ny, nt, 2), got " +
                                  shape_string(data.shape()));
    }
  }

  Index nx() const { return data.shape()[0]; }
  Index ny() const { return data.shape()[1]; }
  Index nt() const { return data.shape()[2]; }
};

struct MultiCoilKSpace {
  Tensor data; // (nx, ny, nt, ns, 2)

  MultiCoilKSpace() = default;
  MultiCoilKSpace(Index nx, Index ny, Index nt, Index ns) : data({nx, ny, nt, ns, 2}) {}
  explicit MultiCoilKSpace(Tensor t) : data(std::move(t))
  {
    if (data.rank() != 5 || data.shape()[4] != 2) {
      throw std::invalid_argument("MultiCoilKSpace: expected (nx, ny, nt, ns, 2), got " +
                                  shape_string(data.shape()));
    }
  }

  Index nx() const { return data.shape()[0]; }
  Index ny() const { return data.shape()[1]; }
  Index nt() const { return data.shape()[2]; }
  Index ns() const { return data.shape()[3]; }
};

struct CoilSensitivities {
  Tensor data; // (nx, ny, ns, 2), time-invariant

  CoilSensitivities() = default;
  CoilSensitivities(Index nx, Index ny, Index ns) : data({nx, ny, ns, 2}) {}
  explicit CoilSensitivities(Tensor t) : data(std::move(t))
  {
    if (data.rank() != 4 || data.shape()[3] != 2) {
      throw std::invalid_argument("CoilSensitivities: expected (nx, ny, ns, 2), got " +
                                  shape_string(data.shape()));
    }
  }

  Index nx() const { return data.shape()[0]; }
  Index ny() const { return data.shape()[1]; }
  Index ns() const { return data.shape()[2]; }
};

enum class MaskKind { VariableDensity, PseudoRadial, PseudoSpiral };

const char *mask_kind_name(MaskKind kind);
MaskKind mask_kind_from_name(const std::string &name);

struct SamplingMask {
  MaskKind kind = MaskKind::VariableDensity;
  double nominal_r = 1.0;
  Tensor pattern; // (nx, ny, nt), entries 0 or 1

  Index nx() const { return pattern.shape()[0]; }
  Index ny() const { return pattern.shape()[1]; }
  Index nt() const { return pattern.shape()[2]; }
};

double achieved_acceleration(const SamplingMask &mask);

// A = MFS applied frame by frame; unsampled entries are exactly zero.
MultiCoilKSpace forward_encode(const ImageSeries &x, const CoilSensitivities &s,
                               const SamplingMask &m);

// A^H: the zero-filling reconstruction sum_c conj(s_c) . ifft2c(m . y_c).
ImageSeries adjoint_encode(const MultiCoilKSpace &y, const CoilSensitivities &s,
                           const SamplingMask &m);

// View-shared baseline: per coil, average the sampled k-space over frames
// (count-normalized per location), transform back and combine with
// conj(s_c) / sum |s|^2. The static result is broadcast over frames.
ImageSeries time_averaged_image(const MultiCoilKSpace &y, const CoilSensitivities &s,
                                const SamplingMask &m);

// Cartesian ky-t pattern: fully sampled readout, per-frame phase-encode
// lines drawn without replacement from a Gaussian density (sigma = ny/6)
// centered on ky = ny/2, with `center_lines` central lines always included.
SamplingMask make_vds_mask(Index nx, Index ny, Index nt, double r, Index center_lines,
                           uint64_t seed);

// Grid points nearest to golden-angle-rotated spokes / Archimedean spiral
// arms; the rotation offset advances per frame.
SamplingMask make_pseudo_radial_mask(Index nx, Index ny, Index nt, double r, uint64_t seed);
SamplingMask make_pseudo_spiral_mask(Index nx, Index ny, Index nt, double r, uint64_t seed);

// Columns are vectorized frames, in storage order.
Eigen::MatrixXcd casorati(const ImageSeries &x);

// Metrics on magnitude images normalized so max |ref| = 1. PSNR is capped at
// 200 dB for identical inputs. SSIM uses an 11x11 Gaussian window with
// sigma 1.5 (shrunk for tiny images), K1 = 0.01, K2 = 0.03, averaged over
// frames.
double rmse(const ImageSeries &x, const ImageSeries &ref);
double psnr(const ImageSeries &x, const ImageSeries &ref);
double ssim(const ImageSeries &x, const ImageSeries &ref);

struct Metrics {
  double psnr = 0.0;
  double ssim = 0.0;
  double rmse = 0.0;
};

Metrics compare_images(const ImageSeries &x, const ImageSeries &ref);

} // namespace tenf
