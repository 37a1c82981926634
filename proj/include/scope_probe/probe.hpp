#pragma once

// Binary MLP probes: input -> ReLU hidden layers -> 2-way softmax,
// trained with mini-batch cross-entropy.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace scope_probe {

enum class Optimizer { Sgd, Adam };

std::string_view to_string(Optimizer o);
Optimizer optimizer_from_string(std::string_view name);

struct ProbeConfig {
  std::size_t hidden_layers = 2;
  std::size_t hidden_width = 450;
  double learning_rate = 0.001;
  std::size_t epochs = 10;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::Sgd;

  // layers x width x learning rate tuning grid around `base`.
  static std::vector<ProbeConfig> grid(const ProbeConfig& base);
  static std::vector<ProbeConfig> grid() { return grid(ProbeConfig{}); }

  nlohmann::json to_json() const;
  static ProbeConfig from_json(const nlohmann::json& j);
  bool operator==(const ProbeConfig&) const = default;
};

// Column-per-example design matrix plus 0/1 labels.
struct ProbeData {
  Eigen::MatrixXf inputs;  // dim x n
  std::vector<int> labels;

  std::size_t dim() const { return static_cast<std::size_t>(inputs.rows()); }
  std::size_t size() const { return labels.size(); }
};

template <typename Scalar>
class Mlp {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct Gradients {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
  };

  Mlp() = default;
  // Glorot-uniform weights, zero biases.
  Mlp(std::size_t input_dim, std::size_t hidden_layers, std::size_t width,
      std::uint64_t seed);

  std::size_t input_dim() const;
  std::size_t layer_count() const { return weights_.size(); }

  // 2 x n logits for a dim x n batch.
  Matrix logits(const Matrix& inputs) const;

  // Mean cross-entropy over the batch and its gradient.
  Scalar loss(const Matrix& inputs, std::span<const int> labels) const;
  Scalar loss_and_gradient(const Matrix& inputs, std::span<const int> labels,
                           Gradients& grad) const;

  std::vector<int> predict(const Matrix& inputs) const;

  std::vector<Matrix>& weights() { return weights_; }
  const std::vector<Matrix>& weights() const { return weights_; }
  std::vector<Vector>& biases() { return biases_; }
  const std::vector<Vector>& biases() const { return biases_; }

  bool all_finite() const;

 private:
  std::vector<Matrix> weights_;  // out x in
  std::vector<Vector> biases_;
};

extern template class Mlp<float>;
extern template class Mlp<double>;

struct ProbeModel {
  ProbeConfig config;
  Mlp<float> network;
  std::vector<double> epoch_losses;
};

// Throws DataError for single-class data and Error on a non-finite loss.
ProbeModel train(const ProbeConfig& config, const ProbeData& data);

struct EvalResult {
  std::vector<std::uint8_t> correct;
  std::vector<int> predicted;
  double accuracy = 0.0;
};

EvalResult evaluate(const ProbeModel& model, const ProbeData& data);

struct RunResult {
  std::uint64_t seed;
  ProbeModel model;
  EvalResult eval;
};

// `runs` independent seeds (config.seed + r), trained concurrently.
std::vector<RunResult> run_suite(const ProbeConfig& config, const ProbeData& train_data,
                                 const ProbeData& test_data, std::size_t runs = 3);

// "SPMD" | u32 version | u32 input_dim | u32 hidden_layers | u32 width |
// u32 epochs | u32 batch | u32 optimizer | f64 lr | u64 seed | per layer:
// u32 rows | u32 cols | rows*cols f32 row-major weights | rows f32 bias.
void write_checkpoint(const std::string& path, const ProbeModel& model);
ProbeModel read_checkpoint(const std::string& path);

}  // namespace scope_probe
