#include "tenf/fft.hpp"

#include <unsupported/Eigen/FFT>

#include <complex>
#include <vector>

#include "tenf/threads.hpp"

namespace tenf::fftc {

namespace {

using Cx = std::complex<double>;

// One frame: assemble with a circular shift, transform both axes, write back
// with the opposite shift. Shift amounts follow the usual convention
// (ifftshift before the transform, fftshift after), so the zero frequency
// lands at (nx/2, ny/2).
void transform_frame(const double *re, const double *im, double *ore, double *oim, Index nx,
                     Index ny, bool inverse, std::vector<Cx> &buf, std::vector<Cx> &line)
{
  static thread_local Eigen::FFT<double> fft;

  const Index pre_x = nx / 2, pre_y = ny / 2;         // ifftshift
  const Index post_x = (nx + 1) / 2, post_y = (ny + 1) / 2; // fftshift

  buf.resize(static_cast<size_t>(nx) * ny);
  line.resize(static_cast<size_t>(std::max(nx, ny)));

  for (Index j = 0; j < ny; ++j) {
    const Index sj = (j + pre_y) % ny;
    for (Index i = 0; i < nx; ++i) {
      const Index si = (i + pre_x) % nx;
      buf[i + nx * j] = Cx(re[si + nx * sj], im[si + nx * sj]);
    }
  }

  for (Index j = 0; j < ny; ++j) {
    Cx *col = buf.data() + nx * j;
    if (inverse) {
      fft.inv(line.data(), col, static_cast<int>(nx));
    } else {
      fft.fwd(line.data(), col, static_cast<int>(nx));
    }
    std::copy(line.begin(), line.begin() + nx, col);
  }

  std::vector<Cx> row(static_cast<size_t>(ny));
  for (Index i = 0; i < nx; ++i) {
    for (Index j = 0; j < ny; ++j) {
      row[j] = buf[i + nx * j];
    }
    if (inverse) {
      fft.inv(line.data(), row.data(), static_cast<int>(ny));
    } else {
      fft.fwd(line.data(), row.data(), static_cast<int>(ny));
    }
    for (Index j = 0; j < ny; ++j) {
      buf[i + nx * j] = line[j];
    }
  }

  // Eigen's inv already divides by nx*ny; rescale both directions to the
  // unitary convention.
  const double root = std::sqrt(static_cast<double>(nx) * static_cast<double>(ny));
  const double scale = inverse ? root : 1.0 / root;
  for (Index j = 0; j < ny; ++j) {
    const Index sj = (j + post_y) % ny;
    for (Index i = 0; i < nx; ++i) {
      const Index si = (i + post_x) % nx;
      const Cx v = buf[si + nx * sj] * scale;
      ore[i + nx * j] = v.real();
      oim[i + nx * j] = v.imag();
    }
  }
}

Tensor transform(const Tensor &x, bool inverse)
{
  if (x.rank() < 3 || x.shape().back() != 2) {
    throw std::invalid_argument("fft2c: expected a (..., 2) channel-pair tensor, got " +
                                shape_string(x.shape()));
  }
  const Index nx = x.shape()[0];
  const Index ny = x.shape()[1];
  const Index frame = nx * ny;
  const Index half = x.size() / 2;
  const Index nframes = half / frame;

  Tensor out(x.shape());
  parallel_for(nframes, [&](int64_t f) {
    std::vector<Cx> buf, line;
    transform_frame(x.data() + f * frame, x.data() + half + f * frame, out.data() + f * frame,
                    out.data() + half + f * frame, nx, ny, inverse, buf, line);
  });
  return out;
}

} // namespace

Tensor fft2c(const Tensor &x) { return transform(x, false); }

Tensor ifft2c(const Tensor &x) { return transform(x, true); }

} // namespace tenf::fftc
