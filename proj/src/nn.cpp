#include "fedgrid/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace fedgrid {

namespace {

void check_sizes(const std::vector<int>& layer_sizes) {
  if (layer_sizes.size() < 2) {
    throw std::runtime_error("Mlp needs at least input and output sizes");
  }
  for (int s : layer_sizes) {
    if (s < 1) throw std::runtime_error("Mlp layer size must be positive");
  }
}

}  // namespace

Mlp Mlp::make(const std::vector<int>& layer_sizes, Rng& rng) {
  check_sizes(layer_sizes);
  Mlp net;
  for (std::size_t l = 1; l < layer_sizes.size(); ++l) {
    const int in = layer_sizes[l - 1];
    const int out = layer_sizes[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Eigen::MatrixXd w(out, in);
    Eigen::VectorXd b(out);
    for (int i = 0; i < out; ++i) {
      for (int j = 0; j < in; ++j) w(i, j) = dist(rng);
    }
    for (int i = 0; i < out; ++i) b(i) = dist(rng);
    net.w.push_back(std::move(w));
    net.b.push_back(std::move(b));
  }
  return net;
}

Mlp Mlp::zeros(const std::vector<int>& layer_sizes) {
  check_sizes(layer_sizes);
  Mlp net;
  for (std::size_t l = 1; l < layer_sizes.size(); ++l) {
    net.w.push_back(Eigen::MatrixXd::Zero(layer_sizes[l], layer_sizes[l - 1]));
    net.b.push_back(Eigen::VectorXd::Zero(layer_sizes[l]));
  }
  return net;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& input) const {
  if (input.size() != w.front().cols()) {
    throw std::runtime_error("Mlp::forward: input dimension mismatch");
  }
  Eigen::VectorXd a = input;
  for (std::size_t l = 0; l < w.size(); ++l) {
    a = (w[l] * a + b[l]).eval();
    if (l + 1 < w.size()) a = a.cwiseMax(0.0);
  }
  return a;
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& x) const {
  if (x.cols() != w.front().cols()) {
    throw std::runtime_error("Mlp::forward_batch: input dimension mismatch");
  }
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < w.size(); ++l) {
    a = ((a * w[l].transpose()).rowwise() + b[l].transpose()).eval();
    if (l + 1 < w.size()) a = a.cwiseMax(0.0);
  }
  return a;
}

MlpGrads MlpGrads::zeros_like(const Mlp& net) {
  MlpGrads g;
  for (std::size_t l = 0; l < net.w.size(); ++l) {
    g.w.push_back(Eigen::MatrixXd::Zero(net.w[l].rows(), net.w[l].cols()));
    g.b.push_back(Eigen::VectorXd::Zero(net.b[l].size()));
  }
  return g;
}

double MlpGrads::squared_norm() const {
  double s = 0.0;
  for (const auto& m : w) s += m.squaredNorm();
  for (const auto& v : b) s += v.squaredNorm();
  return s;
}

MlpGrads backward_batch(const Mlp& net, const Eigen::MatrixXd& x,
                        const Eigen::MatrixXd& output_grad) {
  if (x.cols() != net.w.front().cols() ||
      output_grad.cols() != net.w.back().rows() ||
      x.rows() != output_grad.rows()) {
    throw std::runtime_error("backward_batch: dimension mismatch");
  }
  const std::size_t layers = net.w.size();

  // Forward pass caching pre-activations.
  std::vector<Eigen::MatrixXd> activations;  // a[0]=x, a[l]=post-activation
  std::vector<Eigen::MatrixXd> pre;          // z[l]
  activations.reserve(layers + 1);
  pre.reserve(layers);
  activations.push_back(x);
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z =
        (activations.back() * net.w[l].transpose()).rowwise() + net.b[l].transpose();
    pre.push_back(z);
    if (l + 1 < layers) {
      activations.push_back(z.cwiseMax(0.0));
    } else {
      activations.push_back(std::move(z));
    }
  }

  MlpGrads grads = MlpGrads::zeros_like(net);
  Eigen::MatrixXd dz = output_grad;  // gradient w.r.t. z of the last layer
  for (std::size_t l = layers; l-- > 0;) {
    grads.w[l] = dz.transpose() * activations[l];
    grads.b[l] = dz.colwise().sum().transpose();
    if (l > 0) {
      Eigen::MatrixXd da = dz * net.w[l];
      dz = da.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return grads;
}

SoftmaxResult softmax_logits(const Eigen::VectorXd& logits) {
  const double max = logits.maxCoeff();
  Eigen::VectorXd shifted = logits.array() - max;
  Eigen::VectorXd exps = shifted.array().exp();
  const double sum = exps.sum();
  SoftmaxResult r;
  r.probs = exps / sum;
  r.log_probs = shifted.array() - std::log(sum);
  return r;
}

SoftmaxBatch softmax_logits_batch(const Eigen::MatrixXd& logits) {
  SoftmaxBatch r;
  Eigen::VectorXd max = logits.rowwise().maxCoeff();
  Eigen::MatrixXd shifted = logits.colwise() - max;
  Eigen::MatrixXd exps = shifted.array().exp();
  Eigen::VectorXd sums = exps.rowwise().sum();
  r.probs = exps.array().colwise() / sums.array();
  r.log_probs = shifted.array().colwise() - sums.array().log();
  return r;
}

bool ModelWeights::same_shape(const ModelWeights& other) const {
  if (tensors.size() != other.tensors.size()) return false;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (tensors[i].shape != other.tensors[i].shape) return false;
  }
  return true;
}

nlohmann::json ModelWeights::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const Tensor& t : tensors) {
    j.push_back({{"shape", t.shape}, {"values", t.values}});
  }
  return j;
}

ModelWeights ModelWeights::from_json(const nlohmann::json& j) {
  ModelWeights w;
  for (const auto& jt : j) {
    Tensor t;
    t.shape = jt.at("shape").get<std::vector<std::int64_t>>();
    t.values = jt.at("values").get<std::vector<double>>();
    std::int64_t n = 1;
    for (std::int64_t s : t.shape) n *= s;
    if (n != static_cast<std::int64_t>(t.values.size())) {
      throw std::runtime_error("ModelWeights: shape/value count mismatch");
    }
    w.tensors.push_back(std::move(t));
  }
  return w;
}

ModelWeights extract_weights(const Mlp& net) {
  ModelWeights out;
  for (std::size_t l = 0; l < net.w.size(); ++l) {
    ModelWeights::Tensor wt;
    wt.shape = {net.w[l].rows(), net.w[l].cols()};
    wt.values.reserve(net.w[l].size());
    for (Eigen::Index i = 0; i < net.w[l].rows(); ++i) {
      for (Eigen::Index j = 0; j < net.w[l].cols(); ++j) {
        wt.values.push_back(net.w[l](i, j));
      }
    }
    out.tensors.push_back(std::move(wt));
    ModelWeights::Tensor bt;
    bt.shape = {net.b[l].size()};
    bt.values.assign(net.b[l].data(), net.b[l].data() + net.b[l].size());
    out.tensors.push_back(std::move(bt));
  }
  return out;
}

void load_weights(Mlp& net, const ModelWeights& weights) {
  if (weights.tensors.size() != 2 * net.w.size()) {
    throw std::runtime_error("load_weights: tensor count mismatch");
  }
  for (std::size_t l = 0; l < net.w.size(); ++l) {
    const auto& wt = weights.tensors[2 * l];
    const auto& bt = weights.tensors[2 * l + 1];
    if (wt.shape != std::vector<std::int64_t>{net.w[l].rows(), net.w[l].cols()} ||
        bt.shape != std::vector<std::int64_t>{net.b[l].size()}) {
      throw std::runtime_error("load_weights: shape mismatch at layer " +
                               std::to_string(l));
    }
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < net.w[l].rows(); ++i) {
      for (Eigen::Index j = 0; j < net.w[l].cols(); ++j) {
        net.w[l](i, j) = wt.values[k++];
      }
    }
    for (Eigen::Index i = 0; i < net.b[l].size(); ++i) net.b[l](i) = bt.values[i];
  }
}

bool WeightBundle::same_shape(const WeightBundle& other) const {
  if (parts.size() != other.parts.size()) return false;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (!parts[i].same_shape(other.parts[i])) return false;
  }
  return true;
}

nlohmann::json WeightBundle::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const ModelWeights& p : parts) j.push_back(p.to_json());
  return j;
}

WeightBundle WeightBundle::from_json(const nlohmann::json& j) {
  WeightBundle b;
  for (const auto& jp : j) b.parts.push_back(ModelWeights::from_json(jp));
  return b;
}

AdamState AdamState::for_net(const Mlp& net, double learning_rate) {
  AdamState s;
  s.learning_rate = learning_rate;
  for (std::size_t l = 0; l < net.w.size(); ++l) {
    s.mw.push_back(Eigen::MatrixXd::Zero(net.w[l].rows(), net.w[l].cols()));
    s.vw.push_back(Eigen::MatrixXd::Zero(net.w[l].rows(), net.w[l].cols()));
    s.mb.push_back(Eigen::VectorXd::Zero(net.b[l].size()));
    s.vb.push_back(Eigen::VectorXd::Zero(net.b[l].size()));
  }
  return s;
}

void AdamState::step(Mlp& net, const MlpGrads& grads) {
  if (grads.w.size() != net.w.size()) {
    throw std::runtime_error("AdamState::step: gradient shape mismatch");
  }
  ++step_count;
  const double bc1 = 1.0 - std::pow(beta1, step_count);
  const double bc2 = 1.0 - std::pow(beta2, step_count);
  for (std::size_t l = 0; l < net.w.size(); ++l) {
    if (grads.w[l].rows() != net.w[l].rows() ||
        grads.w[l].cols() != net.w[l].cols() ||
        grads.b[l].size() != net.b[l].size()) {
      throw std::runtime_error("AdamState::step: gradient shape mismatch");
    }
    mw[l] = beta1 * mw[l] + (1.0 - beta1) * grads.w[l];
    vw[l] = beta2 * vw[l].array() + (1.0 - beta2) * grads.w[l].array().square();
    net.w[l].array() -= learning_rate * (mw[l].array() / bc1) /
                        ((vw[l].array() / bc2).sqrt() + eps);
    mb[l] = beta1 * mb[l] + (1.0 - beta1) * grads.b[l];
    vb[l] = beta2 * vb[l].array() + (1.0 - beta2) * grads.b[l].array().square();
    net.b[l].array() -= learning_rate * (mb[l].array() / bc1) /
                        ((vb[l].array() / bc2).sqrt() + eps);
  }
}

void ScalarAdam::step(double& param, double grad) {
  ++step_count;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad * grad;
  const double mhat = m / (1.0 - std::pow(beta1, step_count));
  const double vhat = v / (1.0 - std::pow(beta2, step_count));
  param -= learning_rate * mhat / (std::sqrt(vhat) + eps);
}

}  // namespace fedgrid
