#include "tenf/losses.hpp"

#include <cmath>

#include "tenf/errors.hpp"
#include "tenf/fft.hpp"

namespace tenf {

const char *loss_variant_name(LossVariant v)
{
  switch (v) {
  case LossVariant::Full:
    return "full";
  case LossVariant::TvOnly:
    return "tv-only";
  case LossVariant::LrOnly:
    return "lr-only";
  case LossVariant::DcOnly:
    return "dc-only";
  }
  return "?";
}

LossVariant loss_variant_from_name(const std::string &name)
{
  if (name == "full") {
    return LossVariant::Full;
  }
  if (name == "tv-only") {
    return LossVariant::TvOnly;
  }
  if (name == "lr-only") {
    return LossVariant::LrOnly;
  }
  if (name == "dc-only") {
    return LossVariant::DcOnly;
  }
  throw ConfigError("unknown loss variant '" + name + "'");
}

EncodeConstants make_encode_constants(const MultiCoilKSpace &y, const CoilSensitivities &s,
                                      const SamplingMask &m)
{
  const Index nx = y.nx(), ny = y.ny(), nt = y.nt(), ns = y.ns();
  if (s.nx() != nx || s.ny() != ny || s.ns() != ns || m.nx() != nx || m.ny() != ny ||
      m.nt() != nt) {
    throw std::invalid_argument("encode constants: inconsistent shapes");
  }
  EncodeConstants c;
  c.nx = nx;
  c.ny = ny;
  c.nt = nt;
  c.ns = ns;

  const Index frame = nx * ny;
  const Index series = frame * nt;
  const Index shalf = s.data.size() / 2;
  const Index yhalf = y.data.size() / 2;

  for (Index coil = 0; coil < ns; ++coil) {
    Tensor re({nx, ny, nt, 2});
    Tensor im({nx, ny, nt, 2});
    const double *sr = s.data.data() + frame * coil;
    const double *si = s.data.data() + shalf + frame * coil;
    for (Index t = 0; t < nt; ++t) {
      for (Index p = 0; p < frame; ++p) {
        re[p + frame * t] = sr[p];
        re[series + p + frame * t] = sr[p];
        im[p + frame * t] = -si[p];
        im[series + p + frame * t] = si[p];
      }
    }
    c.coil_re.push_back(std::move(re));
    c.coil_im_signed.push_back(std::move(im));

    Tensor ny_c({nx, ny, nt, 2});
    const double *yr = y.data.data() + series * coil;
    const double *yi = y.data.data() + yhalf + series * coil;
    for (Index i = 0; i < series; ++i) {
      ny_c[i] = -yr[i];
      ny_c[series + i] = -yi[i];
    }
    c.neg_y.push_back(std::move(ny_c));
  }

  c.mask_pair = Tensor({nx, ny, nt, 2});
  for (Index i = 0; i < series; ++i) {
    c.mask_pair[i] = m.pattern[i];
    c.mask_pair[series + i] = m.pattern[i];
  }

  auto swap = std::make_shared<std::vector<Index>>(2 * series);
  for (Index i = 0; i < series; ++i) {
    (*swap)[i] = series + i;
    (*swap)[series + i] = i;
  }
  c.swap_map = std::move(swap);
  return c;
}

ad::Node *complex_mul_const(ad::Tape &tape, ad::Node *x, const Tensor &re_pair,
                            const Tensor &im_signed_pair, const ad::IndexMapPtr &swap_map)
{
  // (a+ib)(c+id): channel pair (ac - bd, bc + ad) assembled from two real
  // elementwise products, using a channel swap for the cross terms.
  ad::Node *direct = tape.mul(x, tape.leaf(re_pair));
  ad::Node *swapped = tape.gather(x, swap_map, x->value.shape());
  ad::Node *cross = tape.mul(swapped, tape.leaf(im_signed_pair));
  return tape.add(direct, cross);
}

ad::Node *dc_loss(ad::Tape &tape, ad::Node *x, const EncodeConstants &consts)
{
  ad::Node *total = nullptr;
  ad::Node *mask = tape.leaf(consts.mask_pair);
  for (Index c = 0; c < consts.ns; ++c) {
    ad::Node *weighted =
        complex_mul_const(tape, x, consts.coil_re[c], consts.coil_im_signed[c], consts.swap_map);
    ad::Node *k = tape.fft2c(weighted);
    ad::Node *residual = tape.add(tape.mul(k, mask), tape.leaf(consts.neg_y[c]));
    ad::Node *term = tape.frobenius_sq(residual);
    total = total ? tape.add(total, term) : term;
  }
  return total;
}

ad::Node *tv_loss(ad::Tape &tape, ad::Node *x, bool magnitude_tv)
{
  ad::Node *base = magnitude_tv ? tape.magnitude(x) : x;
  ad::Node *tv = tape.abs_diff_sum(base, 1);
  tv = tape.add(tv, tape.abs_diff_sum(base, 2));
  tv = tape.add(tv, tape.abs_diff_sum(base, 3));
  return tv;
}

ad::Node *lr_loss(ad::Tape &tape, ad::Node *x) { return tape.casorati_nuclear_norm(x); }

LossNodes total_loss(ad::Tape &tape, ad::Node *x, const EncodeConstants &consts,
                     const LossWeights &weights)
{
  LossNodes nodes;
  nodes.dc = dc_loss(tape, x, consts);
  nodes.total = nodes.dc;
  if (const double ls = weights.effective_lambda_s(); ls != 0.0) {
    nodes.tv = tv_loss(tape, x, weights.magnitude_tv);
    nodes.total = tape.add(nodes.total, tape.scale(nodes.tv, ls));
  }
  if (const double ll = weights.effective_lambda_l(); ll != 0.0) {
    nodes.lr = lr_loss(tape, x);
    nodes.total = tape.add(nodes.total, tape.scale(nodes.lr, ll));
  }
  return nodes;
}

ad::Node *dc_loss(ad::Tape &tape, ad::Node *x, const MultiCoilKSpace &y,
                  const CoilSensitivities &s, const SamplingMask &m)
{
  return dc_loss(tape, x, make_encode_constants(y, s, m));
}

LossNodes total_loss(ad::Tape &tape, ad::Node *x, const MultiCoilKSpace &y,
                     const CoilSensitivities &s, const SamplingMask &m, const LossWeights &weights)
{
  return total_loss(tape, x, make_encode_constants(y, s, m), weights);
}

double dc_value(const ImageSeries &x, const MultiCoilKSpace &y, const CoilSensitivities &s,
                const SamplingMask &m)
{
  const MultiCoilKSpace ax = forward_encode(x, s, m);
  double acc = 0.0;
  for (Index i = 0; i < ax.data.size(); ++i) {
    const double d = ax.data[i] - y.data[i];
    acc += d * d;
  }
  return acc;
}

ImageSeries kspace_replacement(const ImageSeries &x, const MultiCoilKSpace &y,
                               const CoilSensitivities &s, const SamplingMask &m)
{
  const Index nx = x.nx(), ny = x.ny(), nt = x.nt(), ns = s.ns();
  const Index frame = nx * ny;
  const Index xhalf = x.data.size() / 2;
  const Index shalf = s.data.size() / 2;
  const Index yhalf = y.data.size() / 2;

  ImageSeries acc(nx, ny, nt);
  const Index ahalf = acc.data.size() / 2;
  ImageSeries weighted(nx, ny, nt);
  const Index whalf = weighted.data.size() / 2;
  std::vector<double> denom(frame, 0.0);

  for (Index c = 0; c < ns; ++c) {
    const double *sr = s.data.data() + frame * c;
    const double *si = s.data.data() + shalf + frame * c;
    for (Index p = 0; p < frame; ++p) {
      denom[p] += sr[p] * sr[p] + si[p] * si[p];
    }
    for (Index t = 0; t < nt; ++t) {
      const double *xr = x.data.data() + frame * t;
      const double *xi = x.data.data() + xhalf + frame * t;
      double *wr = weighted.data.data() + frame * t;
      double *wi = weighted.data.data() + whalf + frame * t;
      for (Index p = 0; p < frame; ++p) {
        wr[p] = sr[p] * xr[p] - si[p] * xi[p];
        wi[p] = sr[p] * xi[p] + si[p] * xr[p];
      }
    }
    Tensor k = fftc::fft2c(weighted.data);
    const Index khalf = k.size() / 2;
    for (Index t = 0; t < nt; ++t) {
      const double *mk = m.pattern.data() + frame * t;
      const double *yr = y.data.data() + frame * (t + nt * c);
      const double *yi = y.data.data() + yhalf + frame * (t + nt * c);
      double *kr = k.data() + frame * t;
      double *ki = k.data() + khalf + frame * t;
      for (Index p = 0; p < frame; ++p) {
        if (mk[p] != 0.0) {
          kr[p] = yr[p];
          ki[p] = yi[p];
        }
      }
    }
    const Tensor img = fftc::ifft2c(k);
    const Index ihalf = img.size() / 2;
    for (Index t = 0; t < nt; ++t) {
      const double *ir = img.data() + frame * t;
      const double *ii = img.data() + ihalf + frame * t;
      double *ar = acc.data.data() + frame * t;
      double *ai = acc.data.data() + ahalf + frame * t;
      for (Index p = 0; p < frame; ++p) {
        ar[p] += sr[p] * ir[p] + si[p] * ii[p];
        ai[p] += sr[p] * ii[p] - si[p] * ir[p];
      }
    }
  }

  ImageSeries out = x;
  const Index ohalf = out.data.size() / 2;
  for (Index t = 0; t < nt; ++t) {
    for (Index p = 0; p < frame; ++p) {
      if (denom[p] > 0.0) {
        out.data[p + frame * t] = acc.data[p + frame * t] / denom[p];
        out.data[ohalf + p + frame * t] = acc.data[ahalf + p + frame * t] / denom[p];
      }
    }
  }
  return out;
}

} // namespace tenf
