#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <vector>

#include "tenf/autodiff.hpp"
#include "tenf/patching.hpp"
#include "tenf/rng.hpp"
#include "tenf/tensor.hpp"

// The learnable tensor-function model: one trainable core tensor per patch
// group plus a small sine-activated coordinate network per mode, shared by
// all groups. Evaluating network i over its coordinate axis yields the
// factor matrix U^(i); a group is the Tucker product of its core with the
// five factors. Groups are stacked along a sixth mode so the whole batch is
// evaluated with five mode products.

namespace tenf {

// Three affine layers (in -> hidden -> hidden -> out); sine activation with
// the given frequency after the first two.
struct FactorNetwork {
  Tensor w1, b1; // (hidden, 1), (hidden)
  Tensor w2, b2; // (hidden, hidden), (hidden)
  Tensor w3, b3; // (out, hidden), (out)
  double freq = 30.0;

  Index hidden() const { return w1.shape()[0]; }
  Index out_dim() const { return w3.shape()[0]; }

  Eigen::MatrixXd forward(const Eigen::VectorXd &coords) const;
};

// First layer U[-1/n, 1/n] with n = fan-in. Later layers default to the
// sine-network heuristic U[-sqrt(6/n)/freq, sqrt(6/n)/freq]; Strict drops
// the 1/freq factor. Biases use U[-1/sqrt(n), 1/sqrt(n)].
enum class SineInit { Standard, Strict };

FactorNetwork init_factor_network(Index hidden, Index out_dim, double freq, SineInit style,
                                  Rng &rng);

// Per-mode sample positions, linearly spaced over [-1, 1] (a single point
// maps to 0).
Eigen::VectorXd coordinate_axis(Index n);

struct TenfModel {
  Shape ranks;      // (r1..r5)
  Shape group_dims; // (p, p, nt, 2, K)
  Tensor cores;     // (r1..r5, L)
  std::vector<FactorNetwork> nets;    // 5
  std::vector<Eigen::VectorXd> grid;  // 5 coordinate axes

  Index group_count() const { return cores.shape()[5]; }
};

TenfModel init_model(const PatchIndexMap &map, Index nt, const Shape &ranks, uint64_t seed,
                     SineInit style = SineInit::Standard, Index hidden = 126, double freq = 30.0,
                     double core_std = 0.1);

// Factor matrices U^(i) of shape (n_i, r_i), shared across all groups.
std::vector<Eigen::MatrixXd> evaluate_factors(const TenfModel &model);

// Tucker product of group l's core with the given factors.
Tensor evaluate_group(const TenfModel &model, Index l, const std::vector<Eigen::MatrixXd> &factors);

// All groups at once: (p, p, nt, 2, K, L).
Tensor evaluate_batch(const TenfModel &model, const std::vector<Eigen::MatrixXd> &factors);

// Evaluate, average overlaps, crop the padding and return the image series.
ImageSeries reconstruct_image(const TenfModel &model, const PatchIndexMap &map);

// Ablation variant: a single 4-mode tensor function over the full image
// grid, no patching.
struct GlobalTensorModel {
  Shape ranks; // (r1..r4)
  Index nx = 0, ny = 0, nt = 0;
  Tensor core; // (r1..r4)
  std::vector<FactorNetwork> nets;   // 4
  std::vector<Eigen::VectorXd> grid; // 4 axes: x, y, t, channel
};

// Desk-scale default ranks: (round(160 nx/256), round(160 ny/256),
// min(15, nt), 2), clipped to the mode extents.
Shape global_ranks(Index nx, Index ny, Index nt);

GlobalTensorModel init_global_model(Index nx, Index ny, Index nt, const Shape &ranks,
                                    uint64_t seed, SineInit style = SineInit::Standard,
                                    Index hidden = 126, double freq = 30.0,
                                    double core_std = 0.1);

ImageSeries evaluate_global(const GlobalTensorModel &model);

// Graph construction for training. Parameter leaves are created in a fixed
// order (cores, then each network's w1 b1 w2 b2 w3 b3) so gradients line up
// with param_refs()/param_names().
struct ModelGraph {
  std::vector<ad::Node *> params;
  ad::Node *image = nullptr; // (nx, ny, nt, 2)
};

ModelGraph build_model_graph(ad::Tape &tape, const TenfModel &model, const PatchIndexMap &map,
                             const ad::IndexMapPtr &scatter_map, const ad::IndexMapPtr &crop_map,
                             const Tensor &inverse_count);

ModelGraph build_global_graph(ad::Tape &tape, const GlobalTensorModel &model);

enum class DecayTarget { Networks, Cores, Both };

// Mutable views of every trainable tensor, in graph order; weight decay is
// flagged on core tensors and/or network weight matrices (never biases).
struct ModelParam {
  std::string name;
  Tensor *value;
  bool decay;
};

std::vector<ModelParam> model_params(TenfModel &model, DecayTarget target);
std::vector<ModelParam> model_params(GlobalTensorModel &model, DecayTarget target);

void save_model(const TenfModel &model, const std::filesystem::path &dir);
TenfModel load_model(const std::filesystem::path &dir);

} // namespace tenf
