#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ticketlab/mask.hpp"
#include "ticketlab/rng.hpp"
#include "ticketlab/tensor.hpp"

namespace ticketlab {

enum class LayerKind { Dense, Conv5x5, MaxPool2x2, Relu, Softmax };

const char* layer_kind_name(LayerKind k);
LayerKind layer_kind_by_name(const std::string& name);

// Shape of one layer. Parameterized layers (dense, conv5x5) carry a weight
// matrix of m x n entries; for conv5x5, m = out channels and n = in
// channels * 25. Pooling/activation layers have no weights.
struct LayerShape {
  LayerKind kind = LayerKind::Dense;
  std::size_t m = 0;
  std::size_t n = 0;

  bool parameterized() const {
    return kind == LayerKind::Dense || kind == LayerKind::Conv5x5;
  }
  std::size_t weight_count() const { return parameterized() ? m * n : 0; }
};

struct NetworkConfig {
  std::vector<LayerShape> layers;
  std::vector<std::size_t> input_shape;  // (channels, h, w) or (dims)
  std::size_t classes = 0;
  std::size_t epochs = 15;
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  // Relative gradient perturbation per step, drawn from the "noise" stream.
  // Models the non-fixed gradient randomness of the training environment.
  double grad_noise = 0.1;

  std::vector<std::size_t> parameterized_layers() const;
  std::size_t total_weights() const;
};

// Throws std::invalid_argument when adjacent layer shapes are incompatible
// or the final output does not match the class count.
void validate_config(const NetworkConfig& cfg);

// Builds a config from a compact architecture description. Dense entries give
// the unit count; conv entries the filter count; shapes are resolved against
// the input shape.
struct LayerSpec {
  LayerKind kind;
  std::size_t units = 0;  // dense units or conv filters
};
NetworkConfig make_network(const std::vector<LayerSpec>& arch,
                           std::vector<std::size_t> input_shape, std::size_t classes);

// Per parameterized layer: weight tensor of shape {m, n} plus a bias vector
// of length m. Biases are never pruned.
struct Weights {
  std::vector<Tensor> w;
  std::vector<std::vector<double>> b;

  bool operator==(const Weights& o) const = default;
};

Mask full_mask(const NetworkConfig& cfg);

// Deterministic init: uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases
// zero. Same (config, seed) always yields identical bytes.
Weights init_weights(const NetworkConfig& cfg, std::uint64_t seed);

// Class probabilities for a batch; pruned weights contribute exactly 0.
// batch shape: {count, ...input_shape}.
Tensor forward(const NetworkConfig& cfg, const Weights& weights, const Mask& mask,
               const Tensor& batch);

struct BackwardResult {
  double loss = 0.0;  // mean cross-entropy over the batch
  Weights grads;      // gradients; masked positions are exactly 0
};

BackwardResult backward(const NetworkConfig& cfg, const Weights& weights, const Mask& mask,
                        const Tensor& batch, const std::vector<std::uint8_t>& labels);

// w <- w - lr * g, elementwise over weights and biases.
void sgd_step(Weights& weights, const Weights& grads, double lr);

struct Dataset;  // dataset.hpp

struct TrainResult {
  Weights weights;
  double accuracy = 0.0;  // on the held-out set
};

// Runs epochs x batches of SGD. Batch order comes from shuffle_stream; the
// per-step gradient perturbation from noise_stream. Bit-deterministic given
// all arguments.
TrainResult train(const NetworkConfig& cfg, const Weights& start, const Mask& mask,
                  const Dataset& train_set, const Dataset& eval_set,
                  RandomStream shuffle_stream, RandomStream noise_stream);

double evaluate_accuracy(const NetworkConfig& cfg, const Weights& weights, const Mask& mask,
                         const Dataset& eval_set);

}  // namespace ticketlab
