#include "scope_probe/probe.hpp"

#include <cmath>
#include <fstream>
#include <future>
#include <iterator>
#include <algorithm>
#include <numeric>

#include "bytes.hpp"
#include "scope_probe/errors.hpp"
#include "scope_probe/random.hpp"

namespace scope_probe {

using nlohmann::json;

std::string_view to_string(Optimizer o) {
  return o == Optimizer::Sgd ? "sgd" : "adam";
}

Optimizer optimizer_from_string(std::string_view name) {
  if (name == "sgd") return Optimizer::Sgd;
  if (name == "adam") return Optimizer::Adam;
  throw FormatError("unknown optimizer '" + std::string(name) + "'");
}

std::vector<ProbeConfig> ProbeConfig::grid(const ProbeConfig& base) {
  std::vector<ProbeConfig> out;
  for (std::size_t layers : {1, 2})
    for (std::size_t width : {20, 50, 100, 450, 1000})
      for (double lr : {1.0, 0.1, 0.01, 0.001}) {
        auto c = base;
        c.hidden_layers = layers;
        c.hidden_width = width;
        c.learning_rate = lr;
        out.push_back(c);
      }
  return out;
}

json ProbeConfig::to_json() const {
  return {{"hidden_layers", hidden_layers}, {"hidden_width", hidden_width},
          {"learning_rate", learning_rate}, {"epochs", epochs},
          {"batch_size", batch_size},       {"seed", seed},
          {"optimizer", to_string(optimizer)}};
}

ProbeConfig ProbeConfig::from_json(const json& j) {
  ProbeConfig c;
  c.hidden_layers = j.value("hidden_layers", c.hidden_layers);
  c.hidden_width = j.value("hidden_width", c.hidden_width);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  c.optimizer = optimizer_from_string(j.value("optimizer", std::string(to_string(c.optimizer))));
  if (c.hidden_layers < 1 || c.hidden_width < 1 || c.batch_size < 1 ||
      !(c.learning_rate > 0))
    throw FormatError("invalid probe config " + j.dump());
  return c;
}

// ---------------------------------------------------------------------------
// Mlp

template <typename Scalar>
Mlp<Scalar>::Mlp(std::size_t input_dim, std::size_t hidden_layers, std::size_t width,
                 std::uint64_t seed) {
  Rng rng(seed);
  std::size_t in = input_dim;
  for (std::size_t l = 0; l <= hidden_layers; ++l) {
    const std::size_t out = l == hidden_layers ? 2 : width;
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    Matrix w(out, in);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c)
        w(r, c) = static_cast<Scalar>((2.0 * rng.uniform() - 1.0) * bound);
    weights_.push_back(std::move(w));
    biases_.push_back(Vector::Zero(static_cast<Eigen::Index>(out)));
    in = out;
  }
}

template <typename Scalar>
std::size_t Mlp<Scalar>::input_dim() const {
  return weights_.empty() ? 0 : static_cast<std::size_t>(weights_.front().cols());
}

template <typename Scalar>
typename Mlp<Scalar>::Matrix Mlp<Scalar>::logits(const Matrix& inputs) const {
  Matrix h = inputs;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Matrix z = (weights_[l] * h).colwise() + biases_[l];
    h = l + 1 < weights_.size() ? Matrix(z.cwiseMax(Scalar(0))) : std::move(z);
  }
  return h;
}

namespace {

// Numerically stable log-softmax cross-entropy for two classes; writes the
// softmax probabilities into `probs`.
template <typename Matrix>
typename Matrix::Scalar softmax_xent(const Matrix& logits, std::span<const int> labels,
                                     Matrix& probs) {
  using Scalar = typename Matrix::Scalar;
  probs.resize(logits.rows(), logits.cols());
  Scalar total = 0;
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const Scalar m = logits.col(j).maxCoeff();
    const Scalar lse =
        m + std::log(std::exp(logits(0, j) - m) + std::exp(logits(1, j) - m));
    probs(0, j) = std::exp(logits(0, j) - lse);
    probs(1, j) = std::exp(logits(1, j) - lse);
    total += lse - logits(labels[static_cast<std::size_t>(j)], j);
  }
  return total / static_cast<Scalar>(logits.cols());
}

}  // namespace

template <typename Scalar>
Scalar Mlp<Scalar>::loss(const Matrix& inputs, std::span<const int> labels) const {
  Matrix probs;
  return softmax_xent(logits(inputs), labels, probs);
}

template <typename Scalar>
Scalar Mlp<Scalar>::loss_and_gradient(const Matrix& inputs, std::span<const int> labels,
                                      Gradients& grad) const {
  const auto layers = weights_.size();
  std::vector<Matrix> activations{inputs};  // input to layer l
  std::vector<Matrix> pre;                  // pre-activation of layer l
  for (std::size_t l = 0; l < layers; ++l) {
    pre.push_back((weights_[l] * activations.back()).colwise() + biases_[l]);
    if (l + 1 < layers) activations.push_back(pre.back().cwiseMax(Scalar(0)));
  }
  Matrix probs;
  const Scalar value = softmax_xent(pre.back(), labels, probs);

  const auto n = static_cast<Scalar>(inputs.cols());
  Matrix delta = probs;
  for (Eigen::Index j = 0; j < delta.cols(); ++j)
    delta(labels[static_cast<std::size_t>(j)], j) -= Scalar(1);
  delta /= n;

  grad.weights.resize(layers);
  grad.biases.resize(layers);
  for (std::size_t l = layers; l-- > 0;) {
    grad.weights[l].noalias() = delta * activations[l].transpose();
    grad.biases[l] = delta.rowwise().sum();
    if (l == 0) break;
    Matrix back = weights_[l].transpose() * delta;
    delta = (back.array() *
             (pre[l - 1].array() > Scalar(0)).template cast<Scalar>())
                .matrix();
  }
  return value;
}

template <typename Scalar>
std::vector<int> Mlp<Scalar>::predict(const Matrix& inputs) const {
  Matrix z = logits(inputs);
  std::vector<int> out(static_cast<std::size_t>(z.cols()));
  for (Eigen::Index j = 0; j < z.cols(); ++j) out[static_cast<std::size_t>(j)] = z(1, j) > z(0, j);
  return out;
}

template <typename Scalar>
bool Mlp<Scalar>::all_finite() const {
  for (const auto& w : weights_)
    if (!w.allFinite()) return false;
  for (const auto& b : biases_)
    if (!b.allFinite()) return false;
  return true;
}

template class Mlp<float>;
template class Mlp<double>;

// ---------------------------------------------------------------------------
// training

namespace {

class OptimizerState {
 public:
  OptimizerState(const ProbeConfig& config, const Mlp<float>& net)
      : config_(config) {
    if (config.optimizer == Optimizer::Adam) {
      for (const auto& w : net.weights()) {
        m_w_.push_back(Eigen::MatrixXf::Zero(w.rows(), w.cols()));
        v_w_.push_back(Eigen::MatrixXf::Zero(w.rows(), w.cols()));
      }
      for (const auto& b : net.biases()) {
        m_b_.push_back(Eigen::VectorXf::Zero(b.size()));
        v_b_.push_back(Eigen::VectorXf::Zero(b.size()));
      }
    }
  }

  void step(Mlp<float>& net, const Mlp<float>::Gradients& g) {
    const auto lr = static_cast<float>(config_.learning_rate);
    if (config_.optimizer == Optimizer::Sgd) {
      for (std::size_t l = 0; l < net.layer_count(); ++l) {
        net.weights()[l] -= lr * g.weights[l];
        net.biases()[l] -= lr * g.biases[l];
      }
      return;
    }
    constexpr float b1 = 0.9f, b2 = 0.999f, eps = 1e-8f;
    ++t_;
    const float c1 = 1.0f - std::pow(b1, static_cast<float>(t_));
    const float c2 = 1.0f - std::pow(b2, static_cast<float>(t_));
    auto update = [&](auto& param, auto& m, auto& v, const auto& grad) {
      m = b1 * m + (1.0f - b1) * grad;
      v = b2 * v + (1.0f - b2) * grad.cwiseProduct(grad);
      param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    };
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
      update(net.weights()[l], m_w_[l], v_w_[l], g.weights[l]);
      update(net.biases()[l], m_b_[l], v_b_[l], g.biases[l]);
    }
  }

 private:
  ProbeConfig config_;
  std::size_t t_ = 0;
  std::vector<Eigen::MatrixXf> m_w_, v_w_;
  std::vector<Eigen::VectorXf> m_b_, v_b_;
};

}  // namespace

ProbeModel train(const ProbeConfig& config, const ProbeData& data) {
  if (data.size() == 0 || static_cast<std::size_t>(data.inputs.cols()) != data.size())
    throw DataError("training data is empty or inconsistent");
  const auto positives = std::count(data.labels.begin(), data.labels.end(), 1);
  if (positives == 0 || static_cast<std::size_t>(positives) == data.size())
    throw DataError("training data contains a single class");

  ProbeModel model{config,
                   Mlp<float>(data.dim(), config.hidden_layers, config.hidden_width,
                              derive_seed(config.seed, 0)),
                   {}};
  OptimizerState opt(config, model.network);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Mlp<float>::Gradients grad;
  Eigen::MatrixXf batch;
  std::vector<int> labels;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Rng rng(derive_seed(config.seed, epoch + 1));
    rng.shuffle(std::span(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const auto stop = std::min(order.size(), start + config.batch_size);
      batch.resize(data.inputs.rows(), static_cast<Eigen::Index>(stop - start));
      labels.resize(stop - start);
      for (std::size_t k = start; k < stop; ++k) {
        batch.col(static_cast<Eigen::Index>(k - start)) =
            data.inputs.col(static_cast<Eigen::Index>(order[k]));
        labels[k - start] = data.labels[order[k]];
      }
      const float loss = model.network.loss_and_gradient(batch, labels, grad);
      if (!std::isfinite(loss))
        throw Error("non-finite training loss at epoch " + std::to_string(epoch) +
                    ", batch starting at " + std::to_string(start) +
                    " (learning rate " + std::to_string(config.learning_rate) + ")");
      epoch_loss += static_cast<double>(loss) * static_cast<double>(stop - start);
      opt.step(model.network, grad);
    }
    model.epoch_losses.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  if (!model.network.all_finite()) throw Error("training produced non-finite parameters");
  return model;
}

EvalResult evaluate(const ProbeModel& model, const ProbeData& data) {
  if (data.size() > 0 && data.dim() != model.network.input_dim())
    throw ValidationError("evaluation dim " + std::to_string(data.dim()) +
                          " does not match model dim " +
                          std::to_string(model.network.input_dim()));
  EvalResult out;
  if (data.size() == 0) return out;
  out.predicted = model.network.predict(data.inputs);
  out.correct.resize(data.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    out.correct[i] = out.predicted[i] == data.labels[i];
    hits += out.correct[i];
  }
  out.accuracy = static_cast<double>(hits) / static_cast<double>(data.size());
  return out;
}

std::vector<RunResult> run_suite(const ProbeConfig& config, const ProbeData& train_data,
                                 const ProbeData& test_data, std::size_t runs) {
  std::vector<std::future<RunResult>> jobs;
  for (std::size_t r = 0; r < runs; ++r) {
    auto cfg = config;
    cfg.seed = config.seed + r;
    jobs.push_back(std::async(std::launch::async, [cfg, &train_data, &test_data] {
      auto model = train(cfg, train_data);
      auto eval = evaluate(model, test_data);
      return RunResult{cfg.seed, std::move(model), std::move(eval)};
    }));
  }
  std::vector<RunResult> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

// ---------------------------------------------------------------------------
// checkpoints

namespace {
constexpr char kCheckpointMagic[4] = {'S', 'P', 'M', 'D'};
}

void write_checkpoint(const std::string& path, const ProbeModel& model) {
  detail::ByteWriter w;
  const auto& c = model.config;
  w.bytes(std::string_view(kCheckpointMagic, 4));
  w.u32(1);
  w.u32(static_cast<std::uint32_t>(model.network.input_dim()));
  w.u32(static_cast<std::uint32_t>(c.hidden_layers));
  w.u32(static_cast<std::uint32_t>(c.hidden_width));
  w.u32(static_cast<std::uint32_t>(c.epochs));
  w.u32(static_cast<std::uint32_t>(c.batch_size));
  w.u32(c.optimizer == Optimizer::Sgd ? 0 : 1);
  w.f64(c.learning_rate);
  w.u64(c.seed);
  for (std::size_t l = 0; l < model.network.layer_count(); ++l) {
    const auto& wt = model.network.weights()[l];
    const auto& b = model.network.biases()[l];
    w.u32(static_cast<std::uint32_t>(wt.rows()));
    w.u32(static_cast<std::uint32_t>(wt.cols()));
    for (Eigen::Index r = 0; r < wt.rows(); ++r)
      for (Eigen::Index col = 0; col < wt.cols(); ++col) w.f32(wt(r, col));
    for (Eigen::Index r = 0; r < b.size(); ++r) w.f32(b(r));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out.write(w.data().data(), static_cast<std::streamsize>(w.size()));
}

ProbeModel read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  detail::ByteReader r(
      {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()});
  if (r.bytes(4, "magic") != std::string_view(kCheckpointMagic, 4))
    throw FormatError("bad checkpoint magic in " + path);
  if (r.u32("version") != 1) throw FormatError("unsupported checkpoint version");
  ProbeModel model;
  auto& c = model.config;
  const auto input_dim = r.u32("input dim");
  c.hidden_layers = r.u32("hidden layers");
  c.hidden_width = r.u32("hidden width");
  c.epochs = r.u32("epochs");
  c.batch_size = r.u32("batch size");
  c.optimizer = r.u32("optimizer") == 0 ? Optimizer::Sgd : Optimizer::Adam;
  c.learning_rate = r.f64("learning rate");
  c.seed = r.u64("seed");
  std::size_t expected_in = input_dim;
  for (std::size_t l = 0; l <= c.hidden_layers; ++l) {
    const auto rows = r.u32("layer rows");
    const auto cols = r.u32("layer cols");
    const std::size_t expected_out = l == c.hidden_layers ? 2 : c.hidden_width;
    if (cols != expected_in || rows != expected_out)
      throw FormatError("checkpoint layer " + std::to_string(l) + " has shape " +
                        std::to_string(rows) + "x" + std::to_string(cols));
    Eigen::MatrixXf wt(rows, cols);
    for (Eigen::Index i = 0; i < wt.rows(); ++i)
      for (Eigen::Index j = 0; j < wt.cols(); ++j) wt(i, j) = r.f32("weights");
    Eigen::VectorXf b(rows);
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = r.f32("bias");
    model.network.weights().push_back(std::move(wt));
    model.network.biases().push_back(std::move(b));
    expected_in = rows;
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes in checkpoint " + path);
  return model;
}

}  // namespace scope_probe
