#include "tenf/tenf.hpp"

#include <cmath>
#include <fstream>

#include "tenf/errors.hpp"
#include "tenf/io.hpp"

namespace tenf {

Eigen::MatrixXd FactorNetwork::forward(const Eigen::VectorXd &coords) const
{
  using Eigen::MatrixXd;
  using Eigen::RowVectorXd;
  const Index h = hidden();
  const auto w1m = Eigen::Map<const MatrixXd>(w1.data(), h, 1);
  const auto w2m = Eigen::Map<const MatrixXd>(w2.data(), h, h);
  const auto w3m = Eigen::Map<const MatrixXd>(w3.data(), out_dim(), h);

  MatrixXd z1 = coords * w1m.transpose();
  z1.rowwise() += Eigen::Map<const RowVectorXd>(b1.data(), h);
  z1 = (freq * z1).array().sin().matrix();

  MatrixXd z2 = z1 * w2m.transpose();
  z2.rowwise() += Eigen::Map<const RowVectorXd>(b2.data(), h);
  z2 = (freq * z2).array().sin().matrix();

  MatrixXd out = z2 * w3m.transpose();
  out.rowwise() += Eigen::Map<const RowVectorXd>(b3.data(), out_dim());
  return out;
}

namespace {

void fill_uniform(Tensor &t, double bound, Rng &rng)
{
  for (Index i = 0; i < t.size(); ++i) {
    t[i] = rng.uniform(-bound, bound);
  }
}

} // namespace

FactorNetwork init_factor_network(Index hidden, Index out_dim, double freq, SineInit style,
                                  Rng &rng)
{
  FactorNetwork net;
  net.freq = freq;
  net.w1 = Tensor({hidden, 1});
  net.b1 = Tensor({hidden});
  net.w2 = Tensor({hidden, hidden});
  net.b2 = Tensor({hidden});
  net.w3 = Tensor({out_dim, hidden});
  net.b3 = Tensor({out_dim});

  fill_uniform(net.w1, 1.0, rng); // fan-in 1
  // The 1/freq factor pre-compensates the frequency multiplied inside the
  // sine, so it applies to the sine-activated hidden layer only; the final
  // linear layer keeps the plain sqrt(6/n) bound and produces O(1) factor
  // entries. Strict mode reproduces the bare sqrt(6)/n bound everywhere.
  const double hidden_bound = style == SineInit::Standard
                                  ? std::sqrt(6.0 / static_cast<double>(hidden)) / freq
                                  : std::sqrt(6.0) / static_cast<double>(hidden);
  const double out_bound = style == SineInit::Standard
                               ? std::sqrt(6.0 / static_cast<double>(hidden))
                               : std::sqrt(6.0) / static_cast<double>(hidden);
  fill_uniform(net.w2, hidden_bound, rng);
  fill_uniform(net.w3, out_bound, rng);
  // Biases get the usual U[-1/sqrt(fan_in), 1/sqrt(fan_in)]. Nonzero biases
  // matter here: with zero biases a sine network is an odd function, so the
  // rows it produces at +/-c start out exactly dependent.
  fill_uniform(net.b1, 1.0, rng);
  const double bb = 1.0 / std::sqrt(static_cast<double>(hidden));
  fill_uniform(net.b2, bb, rng);
  fill_uniform(net.b3, bb, rng);
  return net;
}

Eigen::VectorXd coordinate_axis(Index n)
{
  Eigen::VectorXd v(n);
  if (n == 1) {
    v[0] = 0.0;
    return v;
  }
  for (Index i = 0; i < n; ++i) {
    v[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return v;
}

namespace {

void check_ranks(const Shape &ranks, const Shape &dims, const char *what)
{
  if (ranks.size() != dims.size()) {
    throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(dims.size()) +
                                " ranks, got " + std::to_string(ranks.size()));
  }
  for (size_t i = 0; i < ranks.size(); ++i) {
    if (ranks[i] < 1 || ranks[i] > dims[i]) {
      throw std::invalid_argument(std::string(what) + ": rank " + std::to_string(ranks[i]) +
                                  " exceeds mode " + std::to_string(i + 1) + " extent " +
                                  std::to_string(dims[i]));
    }
  }
}

void fill_normal(Tensor &t, double std, Rng &rng)
{
  for (Index i = 0; i < t.size(); ++i) {
    t[i] = rng.normal(0.0, std);
  }
}

} // namespace

TenfModel init_model(const PatchIndexMap &map, Index nt, const Shape &ranks, uint64_t seed,
                     SineInit style, Index hidden, double freq, double core_std)
{
  TenfModel model;
  model.ranks = ranks;
  model.group_dims = {map.p, map.p, nt, 2, map.k};
  check_ranks(ranks, model.group_dims, "init_model");

  Rng rng(seed);
  Shape core_shape = ranks;
  core_shape.push_back(map.group_count());
  model.cores = Tensor(core_shape);
  fill_normal(model.cores, core_std, rng);

  for (int i = 0; i < 5; ++i) {
    model.nets.push_back(init_factor_network(hidden, ranks[i], freq, style, rng));
    model.grid.push_back(coordinate_axis(model.group_dims[i]));
  }
  return model;
}

std::vector<Eigen::MatrixXd> evaluate_factors(const TenfModel &model)
{
  std::vector<Eigen::MatrixXd> factors;
  factors.reserve(model.nets.size());
  for (size_t i = 0; i < model.nets.size(); ++i) {
    factors.push_back(model.nets[i].forward(model.grid[i]));
  }
  return factors;
}

Tensor evaluate_group(const TenfModel &model, Index l, const std::vector<Eigen::MatrixXd> &factors)
{
  const Index block = shape_product(model.ranks);
  Tensor core(model.ranks);
  std::copy(model.cores.data() + block * l, model.cores.data() + block * (l + 1), core.data());
  return tucker_reconstruct(core, factors);
}

Tensor evaluate_batch(const TenfModel &model, const std::vector<Eigen::MatrixXd> &factors)
{
  Tensor t = model.cores;
  for (int m = 0; m < 5; ++m) {
    t = mode_product(t, factors[m], m + 1);
  }
  return t;
}

ImageSeries reconstruct_image(const TenfModel &model, const PatchIndexMap &map)
{
  NonlocalTensorBatch batch;
  batch.data = evaluate_batch(model, evaluate_factors(model));
  batch.map = &map;
  return crop_padding(assemble_average(batch), map.pad_x, map.pad_y);
}

Shape global_ranks(Index nx, Index ny, Index nt)
{
  auto scaled = [](Index n) {
    const Index r = static_cast<Index>(std::lround(160.0 * static_cast<double>(n) / 256.0));
    return std::clamp<Index>(r, 1, n);
  };
  return {scaled(nx), scaled(ny), std::min<Index>(15, nt), 2};
}

GlobalTensorModel init_global_model(Index nx, Index ny, Index nt, const Shape &ranks,
                                    uint64_t seed, SineInit style, Index hidden, double freq,
                                    double core_std)
{
  GlobalTensorModel model;
  model.ranks = ranks;
  model.nx = nx;
  model.ny = ny;
  model.nt = nt;
  const Shape dims = {nx, ny, nt, 2};
  check_ranks(ranks, dims, "init_global_model");

  Rng rng(seed);
  model.core = Tensor(ranks);
  fill_normal(model.core, core_std, rng);
  for (int i = 0; i < 4; ++i) {
    model.nets.push_back(init_factor_network(hidden, ranks[i], freq, style, rng));
    model.grid.push_back(coordinate_axis(dims[i]));
  }
  return model;
}

ImageSeries evaluate_global(const GlobalTensorModel &model)
{
  Tensor t = model.core;
  for (int m = 0; m < 4; ++m) {
    t = mode_product(t, model.nets[m].forward(model.grid[m]), m + 1);
  }
  return ImageSeries(std::move(t));
}

namespace {

// Emits the 3-layer network forward pass; appends the six parameter leaves.
ad::Node *build_network_graph(ad::Tape &tape, const FactorNetwork &net,
                              const Eigen::VectorXd &axis, const std::string &prefix,
                              std::vector<ad::Node *> &params)
{
  Tensor coords({axis.size(), 1});
  std::copy(axis.data(), axis.data() + axis.size(), coords.data());
  ad::Node *x = tape.leaf(std::move(coords));

  ad::Node *w1 = tape.leaf(net.w1, true, prefix + ".w1");
  ad::Node *b1 = tape.leaf(net.b1, true, prefix + ".b1");
  ad::Node *w2 = tape.leaf(net.w2, true, prefix + ".w2");
  ad::Node *b2 = tape.leaf(net.b2, true, prefix + ".b2");
  ad::Node *w3 = tape.leaf(net.w3, true, prefix + ".w3");
  ad::Node *b3 = tape.leaf(net.b3, true, prefix + ".b3");
  params.insert(params.end(), {w1, b1, w2, b2, w3, b3});

  ad::Node *z1 = tape.sine(tape.linear(x, w1, b1), net.freq);
  ad::Node *z2 = tape.sine(tape.linear(z1, w2, b2), net.freq);
  return tape.linear(z2, w3, b3);
}

} // namespace

ModelGraph build_model_graph(ad::Tape &tape, const TenfModel &model, const PatchIndexMap &map,
                             const ad::IndexMapPtr &scatter_map, const ad::IndexMapPtr &crop_map,
                             const Tensor &inverse_count)
{
  ModelGraph g;
  ad::Node *batch = tape.leaf(model.cores, true, "cores");
  g.params.push_back(batch);
  for (int i = 0; i < 5; ++i) {
    ad::Node *u = build_network_graph(tape, model.nets[i], model.grid[i],
                                      "net" + std::to_string(i + 1), g.params);
    batch = tape.mode_product(batch, u, i + 1);
  }
  ad::Node *scattered = tape.scatter_add(batch, scatter_map, map.padded_shape());
  ad::Node *averaged = tape.mul(scattered, tape.leaf(inverse_count));
  const Shape image_shape = {map.nxp - map.pad_x, map.nyp - map.pad_y, map.nt, 2};
  g.image = tape.gather(averaged, crop_map, image_shape);
  return g;
}

ModelGraph build_global_graph(ad::Tape &tape, const GlobalTensorModel &model)
{
  ModelGraph g;
  ad::Node *t = tape.leaf(model.core, true, "core");
  g.params.push_back(t);
  for (int i = 0; i < 4; ++i) {
    ad::Node *u = build_network_graph(tape, model.nets[i], model.grid[i],
                                      "net" + std::to_string(i + 1), g.params);
    t = tape.mode_product(t, u, i + 1);
  }
  g.image = t;
  return g;
}

namespace {

void append_net_params(std::vector<ModelParam> &out, FactorNetwork &net, const std::string &prefix,
                       bool decay_weights)
{
  out.push_back({prefix + ".w1", &net.w1, decay_weights});
  out.push_back({prefix + ".b1", &net.b1, false});
  out.push_back({prefix + ".w2", &net.w2, decay_weights});
  out.push_back({prefix + ".b2", &net.b2, false});
  out.push_back({prefix + ".w3", &net.w3, decay_weights});
  out.push_back({prefix + ".b3", &net.b3, false});
}

} // namespace

std::vector<ModelParam> model_params(TenfModel &model, DecayTarget target)
{
  const bool decay_cores = target == DecayTarget::Cores || target == DecayTarget::Both;
  const bool decay_nets = target == DecayTarget::Networks || target == DecayTarget::Both;
  std::vector<ModelParam> out;
  out.push_back({"cores", &model.cores, decay_cores});
  for (size_t i = 0; i < model.nets.size(); ++i) {
    append_net_params(out, model.nets[i], "net" + std::to_string(i + 1), decay_nets);
  }
  return out;
}

std::vector<ModelParam> model_params(GlobalTensorModel &model, DecayTarget target)
{
  const bool decay_cores = target == DecayTarget::Cores || target == DecayTarget::Both;
  const bool decay_nets = target == DecayTarget::Networks || target == DecayTarget::Both;
  std::vector<ModelParam> out;
  out.push_back({"core", &model.core, decay_cores});
  for (size_t i = 0; i < model.nets.size(); ++i) {
    append_net_params(out, model.nets[i], "net" + std::to_string(i + 1), decay_nets);
  }
  return out;
}

void save_model(const TenfModel &model, const std::filesystem::path &dir)
{
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "model.txt");
  if (!manifest) {
    throw IoError("cannot write model manifest in " + dir.string());
  }
  manifest << "tenf-model 1\n";
  manifest << "coords linspace-v1\n";
  manifest << "freq " << model.nets[0].freq << "\n";
  manifest << "hidden " << model.nets[0].hidden() << "\n";
  manifest << "ranks";
  for (Index r : model.ranks) {
    manifest << " " << r;
  }
  manifest << "\ngroup_dims";
  for (Index d : model.group_dims) {
    manifest << " " << d;
  }
  manifest << "\n";
  save_tensor(model.cores, dir / "cores.tft");
  for (size_t i = 0; i < model.nets.size(); ++i) {
    const std::string p = "net" + std::to_string(i + 1);
    save_tensor(model.nets[i].w1, dir / (p + ".w1.tft"));
    save_tensor(model.nets[i].b1, dir / (p + ".b1.tft"));
    save_tensor(model.nets[i].w2, dir / (p + ".w2.tft"));
    save_tensor(model.nets[i].b2, dir / (p + ".b2.tft"));
    save_tensor(model.nets[i].w3, dir / (p + ".w3.tft"));
    save_tensor(model.nets[i].b3, dir / (p + ".b3.tft"));
  }
}

TenfModel load_model(const std::filesystem::path &dir)
{
  std::ifstream manifest(dir / "model.txt");
  if (!manifest) {
    throw IoError("cannot read model manifest in " + dir.string());
  }
  std::string magic, coords_key, coords_tag, freq_key, hidden_key, ranks_key, dims_key;
  int version = 0;
  double freq = 0.0;
  Index hidden = 0;
  TenfModel model;
  manifest >> magic >> version >> coords_key >> coords_tag >> freq_key >> freq >> hidden_key >>
      hidden >> ranks_key;
  if (magic != "tenf-model" || version != 1 || coords_tag != "linspace-v1") {
    throw IoError("unsupported model manifest in " + dir.string());
  }
  model.ranks.resize(5);
  for (Index &r : model.ranks) {
    manifest >> r;
  }
  manifest >> dims_key;
  model.group_dims.resize(5);
  for (Index &d : model.group_dims) {
    manifest >> d;
  }
  if (!manifest) {
    throw IoError("truncated model manifest in " + dir.string());
  }
  model.cores = load_tensor(dir / "cores.tft");
  for (int i = 0; i < 5; ++i) {
    const std::string p = "net" + std::to_string(i + 1);
    FactorNetwork net;
    net.freq = freq;
    net.w1 = load_tensor(dir / (p + ".w1.tft"));
    net.b1 = load_tensor(dir / (p + ".b1.tft"));
    net.w2 = load_tensor(dir / (p + ".w2.tft"));
    net.b2 = load_tensor(dir / (p + ".b2.tft"));
    net.w3 = load_tensor(dir / (p + ".w3.tft"));
    net.b3 = load_tensor(dir / (p + ".b3.tft"));
    model.nets.push_back(std::move(net));
    model.grid.push_back(coordinate_axis(model.group_dims[i]));
  }
  return model;
}

} // namespace tenf
