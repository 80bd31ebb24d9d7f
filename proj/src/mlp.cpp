#include "rilo/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include <nlohmann/json.hpp>

#include "rilo/errors.hpp"
#include "rilo/rng.hpp"

namespace rilo {

namespace {

double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }
double softplus(double u) { return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u))); }

LinearLayer make_layer(int out, int in, std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / (in + out));
  LinearLayer l;
  l.W.resize(out, in);
  for (Eigen::Index i = 0; i < l.W.size(); ++i) l.W.data()[i] = uniform_real(rng, -a, a);
  l.b = Eigen::VectorXd::Zero(out);
  return l;
}

std::vector<LinearLayer> make_stack(const std::vector<int>& widths, std::uint64_t seed,
                                    std::uint64_t stream0) {
  std::vector<LinearLayer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    auto rng = seeded_engine(seed, stream0 + l);
    layers.push_back(make_layer(widths[l + 1], widths[l], rng));
  }
  return layers;
}

std::vector<int> head_widths(const MlpSpec& spec, int in, int out) {
  std::vector<int> w;
  w.push_back(in);
  w.insert(w.end(), spec.head_hidden.begin(), spec.head_hidden.end());
  w.push_back(out);
  return w;
}

// Forward caches. A[0] is the input; A[l] = relu(Z[l]) for trunk layers.
struct TrunkCache {
  std::vector<Eigen::MatrixXd> Z;
  std::vector<Eigen::MatrixXd> A;
};

TrunkCache trunk_forward(const std::vector<LinearLayer>& trunk, const Eigen::MatrixXd& X) {
  TrunkCache c;
  c.A.push_back(X);
  for (const LinearLayer& l : trunk) {
    Eigen::MatrixXd Z = (c.A.back() * l.W.transpose()).rowwise() + l.b.transpose();
    c.A.push_back(Z.cwiseMax(0.0));
    c.Z.push_back(std::move(Z));
  }
  return c;
}

void trunk_backward(const std::vector<LinearLayer>& trunk, const TrunkCache& c,
                    Eigen::MatrixXd dA, std::vector<LinearLayer>& grad) {
  for (int l = static_cast<int>(trunk.size()) - 1; l >= 0; --l) {
    const Eigen::MatrixXd dZ = dA.cwiseProduct((c.Z[l].array() > 0.0).cast<double>().matrix());
    grad[l].W += dZ.transpose() * c.A[l];
    grad[l].b += dZ.colwise().sum().transpose();
    if (l > 0) dA = dZ * trunk[l].W;
  }
}

// Channel-wise max over rows; records the first argmax row per channel so the
// backward pass routes each pooled gradient to exactly one point.
void max_pool(const Eigen::MatrixXd& F, Eigen::VectorXd& g, std::vector<Eigen::Index>& amax) {
  g.resize(F.cols());
  amax.resize(F.cols());
  for (Eigen::Index j = 0; j < F.cols(); ++j) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < F.rows(); ++i)
      if (F(i, j) > F(best, j)) best = i;
    g(j) = F(best, j);
    amax[j] = best;
  }
}

// Batched head forward: relu between layers, linear last layer.
struct HeadCache {
  std::vector<Eigen::MatrixXd> Z;
  std::vector<Eigen::MatrixXd> A;  // A[0] = input
};

HeadCache head_forward(const std::vector<LinearLayer>& head, const Eigen::MatrixXd& in) {
  HeadCache c;
  c.A.push_back(in);
  for (std::size_t l = 0; l < head.size(); ++l) {
    Eigen::MatrixXd Z = (c.A.back() * head[l].W.transpose()).rowwise() + head[l].b.transpose();
    if (l + 1 < head.size())
      c.A.push_back(Z.cwiseMax(0.0));
    else
      c.A.push_back(Z);  // linear output
    c.Z.push_back(std::move(Z));
  }
  return c;
}

Eigen::MatrixXd head_backward(const std::vector<LinearLayer>& head, const HeadCache& c,
                              Eigen::MatrixXd dOut, std::vector<LinearLayer>& grad) {
  Eigen::MatrixXd dA = std::move(dOut);
  for (int l = static_cast<int>(head.size()) - 1; l >= 0; --l) {
    Eigen::MatrixXd dZ = dA;
    if (l + 1 < static_cast<int>(head.size()))
      dZ = dA.cwiseProduct((c.Z[l].array() > 0.0).cast<double>().matrix());
    grad[l].W += dZ.transpose() * c.A[l];
    grad[l].b += dZ.colwise().sum().transpose();
    dA = dZ * head[l].W;
  }
  return dA;  // gradient w.r.t. the head input
}

template <typename Net, typename Fn>
void visit_params(Net& net, Fn&& fn) {
  for (std::size_t l = 0; l < net.trunk.size(); ++l) {
    fn("trunk." + std::to_string(l) + ".W", net.trunk[l].W.data(), net.trunk[l].W.rows(),
       net.trunk[l].W.cols());
    fn("trunk." + std::to_string(l) + ".b", net.trunk[l].b.data(), net.trunk[l].b.size(),
       Eigen::Index{1});
  }
  for (std::size_t l = 0; l < net.head.size(); ++l) {
    fn("head." + std::to_string(l) + ".W", net.head[l].W.data(), net.head[l].W.rows(),
       net.head[l].W.cols());
    fn("head." + std::to_string(l) + ".b", net.head[l].b.data(), net.head[l].b.size(),
       Eigen::Index{1});
  }
}

template <typename Net>
std::vector<double> flatten_impl(const Net& net) {
  std::vector<double> out;
  visit_params(const_cast<Net&>(net),
               [&](const std::string&, double* p, Eigen::Index r, Eigen::Index c) {
                 out.insert(out.end(), p, p + r * c);
               });
  return out;
}

template <typename Net>
void unflatten_impl(Net& net, const std::vector<double>& theta) {
  std::size_t off = 0;
  visit_params(net, [&](const std::string&, double* p, Eigen::Index r, Eigen::Index c) {
    const std::size_t n = static_cast<std::size_t>(r * c);
    if (off + n > theta.size()) throw std::invalid_argument("unflatten_params: vector too short");
    std::copy(theta.begin() + off, theta.begin() + off + n, p);
    off += n;
  });
  if (off != theta.size()) throw std::invalid_argument("unflatten_params: vector too long");
}

template <typename Net>
Net zeros_impl(const Net& net) {
  Net z = net;
  for (auto& l : z.trunk) {
    l.W.setZero();
    l.b.setZero();
  }
  for (auto& l : z.head) {
    l.W.setZero();
    l.b.setZero();
  }
  return z;
}

template <typename Net>
void save_impl(const Net& net, const std::filesystem::path& path) {
  nlohmann::json manifest;
  manifest["dtype"] = "float32";
  manifest["tensors"] = nlohmann::json::array();

  std::ofstream bin(path, std::ios::binary | std::ios::trunc);
  if (!bin) throw IoError("cannot open checkpoint for writing: " + path.string());
  std::size_t offset = 0;
  visit_params(const_cast<Net&>(net),
               [&](const std::string& name, double* p, Eigen::Index r, Eigen::Index c) {
                 // Eigen stores column-major; write row-major as documented.
                 std::vector<float> buf(static_cast<std::size_t>(r * c));
                 for (Eigen::Index i = 0; i < r; ++i)
                   for (Eigen::Index j = 0; j < c; ++j)
                     buf[static_cast<std::size_t>(i * c + j)] = static_cast<float>(p[j * r + i]);
                 bin.write(reinterpret_cast<const char*>(buf.data()),
                           static_cast<std::streamsize>(buf.size() * sizeof(float)));
                 manifest["tensors"].push_back(
                     {{"name", name}, {"shape", {r, c}}, {"offset", offset}});
                 offset += buf.size() * sizeof(float);
               });
  if (!bin) throw IoError("write failed: " + path.string());
  bin.close();

  std::ofstream js(path.string() + ".json", std::ios::trunc);
  if (!js) throw IoError("cannot open manifest for writing: " + path.string() + ".json");
  js << manifest.dump(2) << "\n";
  if (!js) throw IoError("write failed: " + path.string() + ".json");
}

template <typename Net>
void load_impl(Net& net, const std::filesystem::path& path) {
  std::ifstream js(path.string() + ".json");
  if (!js) throw IoError("cannot open manifest: " + path.string() + ".json");
  nlohmann::json manifest;
  try {
    js >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad checkpoint manifest " + path.string() + ".json: " + e.what());
  }
  if (manifest.value("dtype", "") != "float32")
    throw FormatError(path.string() + ".json: expected dtype float32");

  std::ifstream bin(path, std::ios::binary);
  if (!bin) throw IoError("cannot open checkpoint: " + path.string());

  std::size_t cursor = 0;
  visit_params(net, [&](const std::string& name, double* p, Eigen::Index r, Eigen::Index c) {
    if (cursor >= manifest["tensors"].size())
      throw FormatError(path.string() + ": checkpoint has too few tensors");
    const auto& t = manifest["tensors"][cursor++];
    if (t.value("name", "") != name)
      throw FormatError(path.string() + ": expected tensor \"" + name + "\", found \"" +
                        t.value("name", "") + "\"");
    const auto shape = t.at("shape");
    if (shape.size() != 2 || shape[0].get<Eigen::Index>() != r ||
        shape[1].get<Eigen::Index>() != c)
      throw FormatError(path.string() + ": tensor \"" + name + "\" has mismatched shape");
    bin.seekg(static_cast<std::streamoff>(t.at("offset").get<std::size_t>()));
    std::vector<float> buf(static_cast<std::size_t>(r * c));
    bin.read(reinterpret_cast<char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!bin) throw FormatError(path.string() + ": truncated tensor \"" + name + "\"");
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j)
        p[j * r + i] = static_cast<double>(buf[static_cast<std::size_t>(i * c + j)]);
  });
  if (cursor != manifest["tensors"].size())
    throw FormatError(path.string() + ": checkpoint has extra tensors");
}

}  // namespace

void MlpSpec::validate() const {
  if (trunk_widths.size() < 2 || trunk_widths.front() != 6)
    throw ConfigError("MlpSpec: trunk must start at width 6 (the MKP row)");
  for (const int w : trunk_widths)
    if (w < 1) throw ConfigError("MlpSpec: trunk widths must be positive");
  for (const int w : head_hidden)
    if (w < 1) throw ConfigError("MlpSpec: head widths must be positive");
}

SelectionNet SelectionNet::create(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  SelectionNet net;
  net.trunk = make_stack(spec.trunk_widths, seed, 0);
  net.head = make_stack(head_widths(spec, 2 * spec.feature_width(), 1), seed, 100);
  return net;
}

RegressionNet RegressionNet::create(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  RegressionNet net;
  net.trunk = make_stack(spec.trunk_widths, seed, 0);
  net.head = make_stack(head_widths(spec, spec.feature_width(), 3), seed, 100);
  return net;
}

Eigen::VectorXd selection_scores(const SelectionNet& net, const Eigen::MatrixXd& X) {
  if (X.rows() < 1) throw std::invalid_argument("selection_scores: need at least one pair");
  const TrunkCache tc = trunk_forward(net.trunk, X);
  const Eigen::MatrixXd& F = tc.A.back();
  Eigen::VectorXd g;
  std::vector<Eigen::Index> amax;
  max_pool(F, g, amax);

  Eigen::MatrixXd C(F.rows(), 2 * F.cols());
  C << F, g.transpose().replicate(F.rows(), 1);
  const HeadCache hc = head_forward(net.head, C);
  return hc.A.back().col(0).unaryExpr([](double u) { return sigmoid(u); });
}

std::vector<int> top_k_indices(const Eigen::VectorXd& scores, int k) {
  if (k < 1) throw std::invalid_argument("top_k_indices: k must be >= 1");
  std::vector<int> idx(static_cast<std::size_t>(scores.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return scores(a) > scores(b); });
  idx.resize(std::min<std::size_t>(idx.size(), static_cast<std::size_t>(k)));
  return idx;
}

SelectionOutput selection_forward(const SelectionNet& net, const MKPSet& mkps, int k) {
  SelectionOutput out;
  out.scores = selection_scores(net, mkps.pairs);
  out.top_k = top_k_indices(out.scores, k);
  return out;
}

Eigen::Vector3d regression_forward(const RegressionNet& net, const Eigen::MatrixXd& X) {
  if (X.rows() < 1) throw std::invalid_argument("regression_forward: need at least one pair");
  const TrunkCache tc = trunk_forward(net.trunk, X);
  Eigen::VectorXd g;
  std::vector<Eigen::Index> amax;
  max_pool(tc.A.back(), g, amax);
  const HeadCache hc = head_forward(net.head, g.transpose());
  return hc.A.back().row(0).transpose();
}

double rotation_loss(const Eigen::Vector3d& pred, const UnitQuaternion& gt) {
  return (pred - gt.vector_part()).squaredNorm();
}

double translation_loss(const Eigen::Vector3d& pred, const Eigen::Vector3d& gt) {
  return (pred - gt).squaredNorm();
}

double selection_bce(const Eigen::VectorXd& scores, const Eigen::VectorXi& labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("selection_bce: score/label size mismatch");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    const double s = std::min(std::max(scores(i), 1e-12), 1.0 - 1e-12);
    sum += labels(i) ? -std::log(s) : -std::log1p(-s);
  }
  return sum / static_cast<double>(scores.size());
}

double selection_loss_grad(const SelectionNet& net, const Eigen::MatrixXd& X,
                           const Eigen::VectorXi& labels, SelectionNet& grad) {
  const Eigen::Index m = X.rows();
  if (labels.size() != m)
    throw std::invalid_argument("selection_loss_grad: label count mismatch");

  const TrunkCache tc = trunk_forward(net.trunk, X);
  const Eigen::MatrixXd& F = tc.A.back();
  Eigen::VectorXd g;
  std::vector<Eigen::Index> amax;
  max_pool(F, g, amax);
  Eigen::MatrixXd C(m, 2 * F.cols());
  C << F, g.transpose().replicate(m, 1);
  const HeadCache hc = head_forward(net.head, C);
  const Eigen::VectorXd u = hc.A.back().col(0);

  double loss = 0.0;
  Eigen::MatrixXd du(m, 1);
  for (Eigen::Index i = 0; i < m; ++i) {
    loss += softplus(u(i)) - (labels(i) ? u(i) : 0.0);
    du(i, 0) = (sigmoid(u(i)) - (labels(i) ? 1.0 : 0.0)) / static_cast<double>(m);
  }
  loss /= static_cast<double>(m);

  const Eigen::MatrixXd dC = head_backward(net.head, hc, std::move(du), grad.head);
  Eigen::MatrixXd dF = dC.leftCols(F.cols());
  const Eigen::VectorXd dg = dC.rightCols(F.cols()).colwise().sum().transpose();
  for (Eigen::Index j = 0; j < F.cols(); ++j) dF(amax[j], j) += dg(j);
  trunk_backward(net.trunk, tc, std::move(dF), grad.trunk);
  return loss;
}

double regression_loss_grad(const RegressionNet& net, const Eigen::MatrixXd& X,
                            const Eigen::Vector3d& target, RegressionNet& grad) {
  const TrunkCache tc = trunk_forward(net.trunk, X);
  const Eigen::MatrixXd& F = tc.A.back();
  Eigen::VectorXd g;
  std::vector<Eigen::Index> amax;
  max_pool(F, g, amax);
  const HeadCache hc = head_forward(net.head, g.transpose());
  const Eigen::Vector3d out = hc.A.back().row(0).transpose();

  const double loss = (out - target).squaredNorm();
  Eigen::MatrixXd dOut = 2.0 * (out - target).transpose();
  const Eigen::MatrixXd dgrow = head_backward(net.head, hc, std::move(dOut), grad.head);

  Eigen::MatrixXd dF = Eigen::MatrixXd::Zero(F.rows(), F.cols());
  for (Eigen::Index j = 0; j < F.cols(); ++j) dF(amax[j], j) += dgrow(0, j);
  trunk_backward(net.trunk, tc, std::move(dF), grad.trunk);
  return loss;
}

std::vector<double> flatten_params(const SelectionNet& net) { return flatten_impl(net); }
std::vector<double> flatten_params(const RegressionNet& net) { return flatten_impl(net); }
void unflatten_params(SelectionNet& net, const std::vector<double>& theta) {
  unflatten_impl(net, theta);
}
void unflatten_params(RegressionNet& net, const std::vector<double>& theta) {
  unflatten_impl(net, theta);
}
SelectionNet zeros_like(const SelectionNet& net) { return zeros_impl(net); }
RegressionNet zeros_like(const RegressionNet& net) { return zeros_impl(net); }

void save_checkpoint(const SelectionNet& net, const std::filesystem::path& path) {
  save_impl(net, path);
}
void save_checkpoint(const RegressionNet& net, const std::filesystem::path& path) {
  save_impl(net, path);
}
void load_checkpoint(SelectionNet& net, const std::filesystem::path& path) {
  load_impl(net, path);
}
void load_checkpoint(RegressionNet& net, const std::filesystem::path& path) {
  load_impl(net, path);
}

}  // namespace rilo
