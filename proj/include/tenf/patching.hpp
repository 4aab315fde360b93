#pragma once

#include <filesystem>
#include <vector>

#include "tenf/mri.hpp"
#include "tenf/tensor.hpp"

// Key-patch partitioning and block matching. The image is tiled by
// non-overlapping p x p key patches (after replication padding); each key
// patch is grouped with the K-1 most similar patches found by stride-1
// search inside a window, measured by squared Euclidean distance over the
// (p, p, nt, 2) block. Matching runs once on the initial image and the
// resulting index map is frozen.
//
// Group l of the batch is the 5-mode tensor (p, p, nt, 2, K) with slot 0
// holding the key patch; groups are stacked along a trailing mode, so the
// whole batch is (p, p, nt, 2, K, L). Key patches are ordered x-fastest on
// the stride-p grid. Distance ties are broken by candidate origin,
// (x0, y0) ascending lexicographically.

namespace tenf {

struct PatchOrigin {
  Index x = 0;
  Index y = 0;
};

struct PatchIndexMap {
  Index p = 0;
  Index k = 0;
  Index nt = 0;
  Index nxp = 0, nyp = 0;   // padded extents
  Index pad_x = 0, pad_y = 0;
  std::vector<std::vector<PatchOrigin>> groups; // [L][k], slot 0 is the key

  Index group_count() const { return static_cast<Index>(groups.size()); }
  Shape group_shape() const { return {p, p, nt, 2, k}; }
  Shape batch_shape() const { return {p, p, nt, 2, k, group_count()}; }
  Shape padded_shape() const { return {nxp, nyp, nt, 2}; }
};

struct NonlocalTensorBatch {
  Tensor data; // (p, p, nt, 2, K, L)
  const PatchIndexMap *map = nullptr;
};

struct PaddedSeries {
  ImageSeries image;
  Index pad_x = 0;
  Index pad_y = 0;
};

// Rounds the spatial extents up to multiples of p by replicating the last
// row/column on the right/bottom.
PaddedSeries pad_replicate(const ImageSeries &x, Index p);

// Crops the replication padding back off.
ImageSeries crop_padding(const ImageSeries &padded, Index pad_x, Index pad_y);

PatchIndexMap block_match(const ImageSeries &padded, Index p, Index k, Index window,
                          Index pad_x = 0, Index pad_y = 0);

// Operator P: extract every group's patches from the padded series.
NonlocalTensorBatch gather_groups(const ImageSeries &padded, const PatchIndexMap &map);

// Operator P^T: sum-accumulate every patch back into its origin. Exact
// adjoint of gather_groups.
ImageSeries scatter_adjoint(const NonlocalTensorBatch &batch);

// scatter_adjoint divided pixelwise by the contribution count.
ImageSeries assemble_average(const NonlocalTensorBatch &batch);

// Per-pixel patch coverage of the padded domain, replicated over channels;
// always >= 1 because the key patches tile the image.
Tensor contribution_count(const PatchIndexMap &map);

// Flat index maps for driving gather/scatter autodiff nodes: batch element
// -> padded-series element, and cropped-series element -> padded-series
// element.
std::vector<Index> batch_index_map(const PatchIndexMap &map);
std::vector<Index> crop_index_map(const PatchIndexMap &map);

void save_patch_map(const PatchIndexMap &map, const std::filesystem::path &path);
PatchIndexMap load_patch_map(const std::filesystem::path &path);

} // namespace tenf
