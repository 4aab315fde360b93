#include "tenf/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tenf/errors.hpp"
#include "tenf/io.hpp"
#include "tenf/rng.hpp"

namespace tenf {

std::vector<Ellipse> default_ellipses()
{
  return {
      {0.00, 0.00, 0.82, 0.90, 0.50, 0.00, 0.0},  // torso
      {-0.42, -0.18, 0.24, 0.34, -0.22, 0.02, 0.0}, // left lung
      {0.42, -0.18, 0.24, 0.34, -0.22, 0.02, 3.1},  // right lung
      {0.12, 0.22, 0.30, 0.28, 0.45, 0.16, 0.0},  // myocardium
      {0.12, 0.22, 0.17, 0.15, -0.28, 0.30, 0.0}, // blood pool
      {0.05, 0.14, 0.05, 0.05, 0.35, 0.12, 1.2},  // papillary-like insert
      {-0.28, 0.42, 0.30, 0.22, 0.18, 0.00, 0.0}, // liver-like block
  };
}

PhantomData generate_phantom(const PhantomSpec &spec)
{
  if (spec.nx < 1 || spec.ny < 1 || spec.nt < 1 || spec.ns < 1 || spec.noise_std < 0.0) {
    throw std::invalid_argument("generate_phantom: invalid spec");
  }
  const Index nx = spec.nx, ny = spec.ny, nt = spec.nt, ns = spec.ns;
  const std::vector<Ellipse> shapes = spec.ellipses.empty() ? default_ellipses() : spec.ellipses;

  PhantomData data;
  data.truth = ImageSeries(nx, ny, nt);
  const Index half = data.truth.data.size() / 2;
  const Index frame = nx * ny;

  // Soft-edged additive ellipses; edge width ~1.5 pixels in normalized units.
  const double edge = 1.5 * 2.0 / static_cast<double>(std::min(nx, ny));
  std::vector<double> mag(frame);
  for (Index t = 0; t < nt; ++t) {
    const double cycle = 2.0 * M_PI * static_cast<double>(t) / static_cast<double>(nt);
    std::fill(mag.begin(), mag.end(), 0.0);
    for (const Ellipse &e : shapes) {
      const double pulse = 1.0 + e.motion_amp * std::sin(cycle + e.motion_phase);
      const double a = e.ax * pulse;
      const double b = e.ay * pulse;
      for (Index j = 0; j < ny; ++j) {
        const double v = -1.0 + 2.0 * (static_cast<double>(j) + 0.5) / static_cast<double>(ny);
        for (Index i = 0; i < nx; ++i) {
          const double u = -1.0 + 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(nx);
          const double rho = std::hypot((u - e.cx) / a, (v - e.cy) / b);
          const double cover = std::clamp((1.0 - rho) / edge + 0.5, 0.0, 1.0);
          mag[i + nx * j] += e.intensity * cover;
        }
      }
    }
    for (Index j = 0; j < ny; ++j) {
      const double v = -1.0 + 2.0 * (static_cast<double>(j) + 0.5) / static_cast<double>(ny);
      for (Index i = 0; i < nx; ++i) {
        const double u = -1.0 + 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(nx);
        const double m = std::max(0.0, mag[i + nx * j]);
        const double phase = 0.6 * u - 0.4 * v + 0.5 * (u * u - v * v);
        data.truth.data[i + nx * j + frame * t] = m * std::cos(phase);
        data.truth.data[half + i + nx * j + frame * t] = m * std::sin(phase);
      }
    }
  }

  double peak = 0.0;
  for (Index i = 0; i < half; ++i) {
    peak = std::max(peak, std::hypot(data.truth.data[i], data.truth.data[half + i]));
  }
  if (peak == 0.0) {
    throw std::invalid_argument("generate_phantom: phantom is identically zero");
  }
  for (Index i = 0; i < data.truth.data.size(); ++i) {
    data.truth.data[i] /= peak;
  }

  // Gaussian coil profiles centered around the edge of the field of view,
  // with a mild per-coil linear phase.
  data.sens = CoilSensitivities(nx, ny, ns);
  const Index sh = data.sens.data.size() / 2;
  for (Index c = 0; c < ns; ++c) {
    const double ang = 2.0 * M_PI * static_cast<double>(c) / static_cast<double>(ns);
    const double px = 0.95 * std::cos(ang);
    const double py = 0.95 * std::sin(ang);
    for (Index j = 0; j < ny; ++j) {
      const double v = -1.0 + 2.0 * (static_cast<double>(j) + 0.5) / static_cast<double>(ny);
      for (Index i = 0; i < nx; ++i) {
        const double u = -1.0 + 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(nx);
        const double d2 = (u - px) * (u - px) + (v - py) * (v - py);
        const double amp = std::exp(-d2 / (2.0 * 0.60 * 0.60));
        const double ph = 0.4 * (u * std::cos(ang) + v * std::sin(ang)) + ang / 3.0;
        data.sens.data[i + nx * j + frame * c] = amp * std::cos(ph);
        data.sens.data[sh + i + nx * j + frame * c] = amp * std::sin(ph);
      }
    }
  }

  SamplingMask full;
  full.kind = MaskKind::VariableDensity;
  full.nominal_r = 1.0;
  full.pattern = Tensor::constant({nx, ny, nt}, 1.0);
  data.kspace_full = forward_encode(data.truth, data.sens, full);

  if (spec.noise_std > 0.0) {
    Rng rng(spec.seed);
    for (Index i = 0; i < data.kspace_full.data.size(); ++i) {
      data.kspace_full.data[i] += rng.normal(0.0, spec.noise_std);
    }
  }
  return data;
}

PhantomSpec parse_phantom_spec(const std::filesystem::path &path)
{
  PhantomSpec spec;
  for (const auto &[key, raw] : read_key_values(path)) {
    std::string value = raw;
    std::replace(value.begin(), value.end(), ',', ' ');
    std::istringstream is(value);
    if (key == "nx") {
      is >> spec.nx;
    } else if (key == "ny") {
      is >> spec.ny;
    } else if (key == "nt") {
      is >> spec.nt;
    } else if (key == "ns") {
      is >> spec.ns;
    } else if (key == "noise_std") {
      is >> spec.noise_std;
    } else if (key == "seed") {
      is >> spec.seed;
    } else if (key == "ellipse") {
      Ellipse e;
      is >> e.cx >> e.cy >> e.ax >> e.ay >> e.intensity >> e.motion_amp >> e.motion_phase;
      spec.ellipses.push_back(e);
    } else {
      throw ConfigError("phantom spec: unknown key '" + key + "'");
    }
    if (is.fail()) {
      throw ConfigError("phantom spec: cannot parse value for '" + key + "'");
    }
  }
  return spec;
}

} // namespace tenf
