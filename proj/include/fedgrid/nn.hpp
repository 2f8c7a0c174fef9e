#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <vector>

#include "fedgrid/rng.hpp"

namespace fedgrid {

/// Dense feed-forward net: ReLU hidden layers, linear output, f64 throughout.
struct Mlp {
  // w[l] is (out x in); layer l maps a[l-1] -> relu/linear(w[l]*a[l-1] + b[l]).
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;

  static Mlp make(const std::vector<int>& layer_sizes, Rng& rng);
  static Mlp zeros(const std::vector<int>& layer_sizes);

  int input_size() const { return static_cast<int>(w.front().cols()); }
  int output_size() const { return static_cast<int>(w.back().rows()); }
  std::size_t layer_count() const { return w.size(); }

  Eigen::VectorXd forward(const Eigen::VectorXd& input) const;
  // Rows are samples: x is (batch x in), result (batch x out).
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& x) const;
};

struct MlpGrads {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;

  static MlpGrads zeros_like(const Mlp& net);
  double squared_norm() const;
};

/// Gradients of sum_i <output_grad_i, net(x_i)> w.r.t. every parameter.
MlpGrads backward_batch(const Mlp& net, const Eigen::MatrixXd& x,
                        const Eigen::MatrixXd& output_grad);

struct SoftmaxResult {
  Eigen::VectorXd probs;
  Eigen::VectorXd log_probs;
};
SoftmaxResult softmax_logits(const Eigen::VectorXd& logits);

struct SoftmaxBatch {
  Eigen::MatrixXd probs;
  Eigen::MatrixXd log_probs;
};
SoftmaxBatch softmax_logits_batch(const Eigen::MatrixXd& logits);

/// Flat, ordered snapshot of one net's parameters; the unit exchanged with
/// the federation layer and written to checkpoints.
struct ModelWeights {
  struct Tensor {
    std::vector<std::int64_t> shape;
    std::vector<double> values;  // row-major
    bool operator==(const Tensor&) const = default;
  };
  std::vector<Tensor> tensors;

  bool operator==(const ModelWeights&) const = default;
  bool same_shape(const ModelWeights& other) const;
  nlohmann::json to_json() const;
  static ModelWeights from_json(const nlohmann::json& j);
};

ModelWeights extract_weights(const Mlp& net);
void load_weights(Mlp& net, const ModelWeights& weights);

/// Ordered collection of per-network snapshots (e.g. actor, critics, targets)
/// moved as one unit between an agent and the federation layer.
struct WeightBundle {
  std::vector<ModelWeights> parts;

  bool operator==(const WeightBundle&) const = default;
  bool same_shape(const WeightBundle& other) const;
  nlohmann::json to_json() const;
  static WeightBundle from_json(const nlohmann::json& j);
};

struct AdamState {
  double learning_rate;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step_count = 0;
  std::vector<Eigen::MatrixXd> mw, vw;
  std::vector<Eigen::VectorXd> mb, vb;

  static AdamState for_net(const Mlp& net, double learning_rate);
  void step(Mlp& net, const MlpGrads& grads);
};

struct ScalarAdam {
  double learning_rate;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step_count = 0;
  double m = 0.0, v = 0.0;

  void step(double& param, double grad);
};

}  // namespace fedgrid
