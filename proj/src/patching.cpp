#include "tenf/patching.hpp"

#include <algorithm>
#include <fstream>

#include "tenf/errors.hpp"
#include "tenf/threads.hpp"

namespace tenf {

PaddedSeries pad_replicate(const ImageSeries &x, Index p)
{
  if (p < 1) {
    throw std::invalid_argument("pad_replicate: patch size must be >= 1");
  }
  const Index nx = x.nx(), ny = x.ny(), nt = x.nt();
  const Index nxp = ((nx + p - 1) / p) * p;
  const Index nyp = ((ny + p - 1) / p) * p;
  PaddedSeries out;
  out.pad_x = nxp - nx;
  out.pad_y = nyp - ny;
  if (out.pad_x == 0 && out.pad_y == 0) {
    out.image = x;
    return out;
  }
  out.image = ImageSeries(nxp, nyp, nt);
  for (Index ch = 0; ch < 2; ++ch) {
    for (Index t = 0; t < nt; ++t) {
      for (Index j = 0; j < nyp; ++j) {
        const Index sj = std::min(j, ny - 1);
        for (Index i = 0; i < nxp; ++i) {
          const Index si = std::min(i, nx - 1);
          out.image.data(i, j, t, ch) = x.data(si, sj, t, ch);
        }
      }
    }
  }
  return out;
}

ImageSeries crop_padding(const ImageSeries &padded, Index pad_x, Index pad_y)
{
  if (pad_x == 0 && pad_y == 0) {
    return padded;
  }
  const Index nx = padded.nx() - pad_x, ny = padded.ny() - pad_y, nt = padded.nt();
  ImageSeries out(nx, ny, nt);
  for (Index ch = 0; ch < 2; ++ch) {
    for (Index t = 0; t < nt; ++t) {
      for (Index j = 0; j < ny; ++j) {
        for (Index i = 0; i < nx; ++i) {
          out.data(i, j, t, ch) = padded.data(i, j, t, ch);
        }
      }
    }
  }
  return out;
}

namespace {

double patch_distance(const ImageSeries &x, PatchOrigin a, PatchOrigin b, Index p)
{
  const Index nt = x.nt();
  double acc = 0.0;
  for (Index ch = 0; ch < 2; ++ch) {
    for (Index t = 0; t < nt; ++t) {
      for (Index j = 0; j < p; ++j) {
        for (Index i = 0; i < p; ++i) {
          const double d = x.data(a.x + i, a.y + j, t, ch) - x.data(b.x + i, b.y + j, t, ch);
          acc += d * d;
        }
      }
    }
  }
  return acc;
}

} // namespace

PatchIndexMap block_match(const ImageSeries &padded, Index p, Index k, Index window, Index pad_x,
                          Index pad_y)
{
  if (p < 1 || k < 1 || window < 0) {
    throw std::invalid_argument("block_match: need p >= 1, k >= 1, window >= 0");
  }
  const Index nxp = padded.nx(), nyp = padded.ny();
  if (nxp % p != 0 || nyp % p != 0) {
    throw std::invalid_argument("block_match: image " + shape_string(padded.data.shape()) +
                                " not padded to a multiple of p=" + std::to_string(p));
  }

  PatchIndexMap map;
  map.p = p;
  map.k = k;
  map.nt = padded.nt();
  map.nxp = nxp;
  map.nyp = nyp;
  map.pad_x = pad_x;
  map.pad_y = pad_y;

  const Index gx = nxp / p;
  const Index gy = nyp / p;
  map.groups.resize(gx * gy);

  // Every key patch must find k candidates even in the worst-clamped corner.
  const Index worst = (std::min(window, nxp - p) + 1) * (std::min(window, nyp - p) + 1);
  if (k > worst) {
    throw std::invalid_argument("block_match: k=" + std::to_string(k) + " exceeds the " +
                                std::to_string(worst) + " candidates in the window");
  }

  struct Candidate {
    double dist;
    PatchOrigin origin;
  };

  parallel_for(gx * gy, [&](int64_t l) {
    const Index kx = (l % gx) * p;
    const Index ky = (l / gx) * p;
    const PatchOrigin key{kx, ky};
    const Index x_lo = std::max<Index>(0, kx - window);
    const Index x_hi = std::min(nxp - p, kx + window);
    const Index y_lo = std::max<Index>(0, ky - window);
    const Index y_hi = std::min(nyp - p, ky + window);

    std::vector<Candidate> candidates;
    candidates.reserve((x_hi - x_lo + 1) * (y_hi - y_lo + 1));
    for (Index x0 = x_lo; x0 <= x_hi; ++x0) {
      for (Index y0 = y_lo; y0 <= y_hi; ++y0) {
        if (x0 == kx && y0 == ky) {
          continue; // slot 0 is the key itself
        }
        candidates.push_back({patch_distance(padded, key, {x0, y0}, p), {x0, y0}});
      }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate &a, const Candidate &b) {
      if (a.dist != b.dist) {
        return a.dist < b.dist;
      }
      if (a.origin.x != b.origin.x) {
        return a.origin.x < b.origin.x;
      }
      return a.origin.y < b.origin.y;
    });
    std::vector<PatchOrigin> group;
    group.reserve(k);
    group.push_back(key);
    for (Index j = 0; j + 1 < k; ++j) {
      group.push_back(candidates[j].origin);
    }
    map.groups[l] = std::move(group);
  });
  return map;
}

namespace {

void check_batch(const NonlocalTensorBatch &batch)
{
  if (!batch.map || batch.data.shape() != batch.map->batch_shape()) {
    throw std::invalid_argument("non-local batch inconsistent with its index map");
  }
}

} // namespace

NonlocalTensorBatch gather_groups(const ImageSeries &padded, const PatchIndexMap &map)
{
  if (padded.nx() != map.nxp || padded.ny() != map.nyp || padded.nt() != map.nt) {
    throw std::invalid_argument("gather_groups: image " + shape_string(padded.data.shape()) +
                                " does not match map extents");
  }
  NonlocalTensorBatch batch;
  batch.map = &map;
  batch.data = Tensor(map.batch_shape());
  double *dst = batch.data.data();
  const Index p = map.p, nt = map.nt;
  for (Index l = 0; l < map.group_count(); ++l) {
    for (Index s = 0; s < map.k; ++s) {
      const PatchOrigin o = map.groups[l][s];
      if (o.x < 0 || o.x + p > map.nxp || o.y < 0 || o.y + p > map.nyp) {
        throw std::invalid_argument("gather_groups: patch origin out of bounds");
      }
      for (Index ch = 0; ch < 2; ++ch) {
        for (Index t = 0; t < nt; ++t) {
          for (Index j = 0; j < p; ++j) {
            for (Index i = 0; i < p; ++i) {
              *dst++ = padded.data(o.x + i, o.y + j, t, ch);
            }
          }
        }
      }
    }
  }
  return batch;
}

ImageSeries scatter_adjoint(const NonlocalTensorBatch &batch)
{
  check_batch(batch);
  const PatchIndexMap &map = *batch.map;
  ImageSeries out(map.nxp, map.nyp, map.nt);
  const double *src = batch.data.data();
  const Index p = map.p, nt = map.nt;
  for (Index l = 0; l < map.group_count(); ++l) {
    for (Index s = 0; s < map.k; ++s) {
      const PatchOrigin o = map.groups[l][s];
      for (Index ch = 0; ch < 2; ++ch) {
        for (Index t = 0; t < nt; ++t) {
          for (Index j = 0; j < p; ++j) {
            for (Index i = 0; i < p; ++i) {
              out.data(o.x + i, o.y + j, t, ch) += *src++;
            }
          }
        }
      }
    }
  }
  return out;
}

ImageSeries assemble_average(const NonlocalTensorBatch &batch)
{
  check_batch(batch);
  ImageSeries out = scatter_adjoint(batch);
  const Tensor count = contribution_count(*batch.map);
  for (Index i = 0; i < out.data.size(); ++i) {
    out.data[i] /= count[i];
  }
  return out;
}

Tensor contribution_count(const PatchIndexMap &map)
{
  Tensor count(map.padded_shape());
  for (Index l = 0; l < map.group_count(); ++l) {
    for (Index s = 0; s < map.k; ++s) {
      const PatchOrigin o = map.groups[l][s];
      for (Index ch = 0; ch < 2; ++ch) {
        for (Index t = 0; t < map.nt; ++t) {
          for (Index j = 0; j < map.p; ++j) {
            for (Index i = 0; i < map.p; ++i) {
              count(o.x + i, o.y + j, t, ch) += 1.0;
            }
          }
        }
      }
    }
  }
  return count;
}

std::vector<Index> batch_index_map(const PatchIndexMap &map)
{
  std::vector<Index> idx;
  idx.reserve(shape_product(map.batch_shape()));
  const Index p = map.p, nt = map.nt, nxp = map.nxp, nyp = map.nyp;
  for (Index l = 0; l < map.group_count(); ++l) {
    for (Index s = 0; s < map.k; ++s) {
      const PatchOrigin o = map.groups[l][s];
      for (Index ch = 0; ch < 2; ++ch) {
        for (Index t = 0; t < nt; ++t) {
          for (Index j = 0; j < p; ++j) {
            for (Index i = 0; i < p; ++i) {
              idx.push_back((o.x + i) + nxp * ((o.y + j) + nyp * (t + nt * ch)));
            }
          }
        }
      }
    }
  }
  return idx;
}

std::vector<Index> crop_index_map(const PatchIndexMap &map)
{
  const Index nx = map.nxp - map.pad_x, ny = map.nyp - map.pad_y;
  std::vector<Index> idx;
  idx.reserve(nx * ny * map.nt * 2);
  for (Index ch = 0; ch < 2; ++ch) {
    for (Index t = 0; t < map.nt; ++t) {
      for (Index j = 0; j < ny; ++j) {
        for (Index i = 0; i < nx; ++i) {
          idx.push_back(i + map.nxp * (j + map.nyp * (t + map.nt * ch)));
        }
      }
    }
  }
  return idx;
}

void save_patch_map(const PatchIndexMap &map, const std::filesystem::path &path)
{
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write patch map to " + path.string());
  }
  out << "tenf-patchmap 1\n";
  out << map.p << " " << map.k << " " << map.nt << " " << map.nxp << " " << map.nyp << " "
      << map.pad_x << " " << map.pad_y << " " << map.group_count() << "\n";
  for (const auto &group : map.groups) {
    for (size_t s = 0; s < group.size(); ++s) {
      out << group[s].x << " " << group[s].y << (s + 1 < group.size() ? " " : "");
    }
    out << "\n";
  }
  if (!out) {
    throw IoError("failed writing patch map to " + path.string());
  }
}

PatchIndexMap load_patch_map(const std::filesystem::path &path)
{
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot read patch map from " + path.string());
  }
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "tenf-patchmap" || version != 1) {
    throw IoError("bad patch map header in " + path.string());
  }
  PatchIndexMap map;
  Index l_count = 0;
  in >> map.p >> map.k >> map.nt >> map.nxp >> map.nyp >> map.pad_x >> map.pad_y >> l_count;
  map.groups.resize(l_count);
  for (Index l = 0; l < l_count; ++l) {
    map.groups[l].resize(map.k);
    for (Index s = 0; s < map.k; ++s) {
      in >> map.groups[l][s].x >> map.groups[l][s].y;
    }
  }
  if (!in) {
    throw IoError("truncated patch map in " + path.string());
  }
  return map;
}

} // namespace tenf
