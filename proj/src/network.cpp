#include "ticketlab/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ticketlab/dataset.hpp"
#include "ticketlab/kernels.hpp"

namespace ticketlab {

const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Dense: return "dense";
    case LayerKind::Conv5x5: return "conv5x5";
    case LayerKind::MaxPool2x2: return "maxpool2x2";
    case LayerKind::Relu: return "relu";
    case LayerKind::Softmax: return "softmax";
  }
  return "?";
}

LayerKind layer_kind_by_name(const std::string& name) {
  if (name == "dense") return LayerKind::Dense;
  if (name == "conv5x5") return LayerKind::Conv5x5;
  if (name == "maxpool2x2") return LayerKind::MaxPool2x2;
  if (name == "relu") return LayerKind::Relu;
  if (name == "softmax") return LayerKind::Softmax;
  throw std::invalid_argument("unknown layer kind: " + name);
}

std::vector<std::size_t> NetworkConfig::parameterized_layers() const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (layers[i].parameterized()) idx.push_back(i);
  return idx;
}

std::size_t NetworkConfig::total_weights() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight_count();
  return n;
}

namespace {

struct Dims {
  std::size_t c = 1, h = 1, w = 1;
  std::size_t flat() const { return c * h * w; }
};

Dims dims_of(const std::vector<std::size_t>& shape) {
  Dims d;
  if (shape.size() == 1) {
    d.c = shape[0];
  } else if (shape.size() == 3) {
    d.c = shape[0];
    d.h = shape[1];
    d.w = shape[2];
  } else {
    throw std::invalid_argument("input shape must have 1 or 3 dims");
  }
  return d;
}

// Walks the layer list, returning the shape after each layer.
std::vector<Dims> trace_shapes(const NetworkConfig& cfg) {
  Dims cur = dims_of(cfg.input_shape);
  std::vector<Dims> out;
  for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
    const LayerShape& l = cfg.layers[i];
    switch (l.kind) {
      case LayerKind::Dense: {
        if (l.m < 1 || l.n < 1)
          throw std::invalid_argument("dense layer needs m,n >= 1");
        if (l.n != cur.flat())
          throw std::invalid_argument("dense layer " + std::to_string(i) + " expects " +
                                      std::to_string(l.n) + " inputs, got " +
                                      std::to_string(cur.flat()));
        cur = Dims{l.m, 1, 1};
        break;
      }
      case LayerKind::Conv5x5: {
        if (l.m < 1 || l.n < 1 || l.n % 25 != 0)
          throw std::invalid_argument("conv5x5 layer needs m >= 1 and n = 25*in_channels");
        std::size_t in_ch = l.n / 25;
        if (in_ch != cur.c || cur.h < 5 || cur.w < 5)
          throw std::invalid_argument("conv5x5 layer " + std::to_string(i) +
                                      " incompatible with input " + std::to_string(cur.c) +
                                      "x" + std::to_string(cur.h) + "x" + std::to_string(cur.w));
        cur = Dims{l.m, cur.h - 4, cur.w - 4};
        break;
      }
      case LayerKind::MaxPool2x2: {
        if (cur.h < 2 || cur.w < 2)
          throw std::invalid_argument("maxpool2x2 needs spatial input");
        cur = Dims{cur.c, cur.h / 2, cur.w / 2};
        break;
      }
      case LayerKind::Relu:
        break;
      case LayerKind::Softmax: {
        if (i + 1 != cfg.layers.size())
          throw std::invalid_argument("softmax must be the final layer");
        break;
      }
    }
    out.push_back(cur);
  }
  return out;
}

}  // namespace

void validate_config(const NetworkConfig& cfg) {
  if (cfg.layers.empty()) throw std::invalid_argument("config has no layers");
  if (cfg.classes < 2) throw std::invalid_argument("need at least 2 classes");
  if (cfg.learning_rate <= 0) throw std::invalid_argument("learning rate must be positive");
  if (cfg.batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (cfg.layers.back().kind != LayerKind::Softmax)
    throw std::invalid_argument("final layer must be softmax");
  auto shapes = trace_shapes(cfg);
  if (shapes.back().flat() != cfg.classes)
    throw std::invalid_argument("network emits " + std::to_string(shapes.back().flat()) +
                                " values, expected " + std::to_string(cfg.classes) +
                                " classes");
}

NetworkConfig make_network(const std::vector<LayerSpec>& arch,
                           std::vector<std::size_t> input_shape, std::size_t classes) {
  NetworkConfig cfg;
  cfg.input_shape = std::move(input_shape);
  cfg.classes = classes;
  Dims cur = dims_of(cfg.input_shape);
  for (const LayerSpec& spec : arch) {
    LayerShape l;
    l.kind = spec.kind;
    switch (spec.kind) {
      case LayerKind::Dense:
        l.m = spec.units;
        l.n = cur.flat();
        cur = Dims{l.m, 1, 1};
        break;
      case LayerKind::Conv5x5:
        l.m = spec.units;
        l.n = cur.c * 25;
        if (cur.h < 5 || cur.w < 5)
          throw std::invalid_argument("conv5x5 needs at least 5x5 spatial input");
        cur = Dims{l.m, cur.h - 4, cur.w - 4};
        break;
      case LayerKind::MaxPool2x2:
        cur = Dims{cur.c, cur.h / 2, cur.w / 2};
        break;
      case LayerKind::Relu:
      case LayerKind::Softmax:
        break;
    }
    cfg.layers.push_back(l);
  }
  validate_config(cfg);
  return cfg;
}

Mask full_mask(const NetworkConfig& cfg) {
  Mask m;
  for (std::size_t i : cfg.parameterized_layers())
    m.layers.emplace_back(cfg.layers[i].weight_count(), true);
  return m;
}

Weights init_weights(const NetworkConfig& cfg, std::uint64_t seed) {
  validate_config(cfg);
  Weights ws;
  RandomStream root = RandomStream::from_seed(seed, "init");
  std::size_t p = 0;
  for (std::size_t i : cfg.parameterized_layers()) {
    const LayerShape& l = cfg.layers[i];
    Tensor t({l.m, l.n});
    RandomStream s = root.fork(p++);
    double bound = 1.0 / std::sqrt(static_cast<double>(l.n));  // fan-in scaled
    for (std::size_t k = 0; k < t.numel(); ++k)
      t[k] = (2.0 * s.next_double() - 1.0) * bound;
    ws.w.push_back(std::move(t));
    ws.b.emplace_back(l.m, 0.0);
  }
  return ws;
}

namespace {

void check_weights_match(const NetworkConfig& cfg, const Weights& ws, const Mask& mask) {
  auto pl = cfg.parameterized_layers();
  if (ws.w.size() != pl.size() || ws.b.size() != pl.size())
    throw std::invalid_argument("weights layer count does not match config");
  if (mask.layers.size() != pl.size())
    throw std::invalid_argument("mask layer count does not match config");
  for (std::size_t k = 0; k < pl.size(); ++k) {
    const LayerShape& l = cfg.layers[pl[k]];
    if (ws.w[k].numel() != l.m * l.n || ws.b[k].size() != l.m)
      throw std::invalid_argument("weights shape mismatch at layer " + std::to_string(pl[k]));
    if (mask.layers[k].bits != l.m * l.n)
      throw std::invalid_argument("mask shape mismatch at layer " + std::to_string(pl[k]));
  }
}

std::vector<Tensor> masked_weights(const Weights& ws, const Mask& mask) {
  std::vector<Tensor> out;
  out.reserve(ws.w.size());
  for (std::size_t k = 0; k < ws.w.size(); ++k) {
    Tensor t = ws.w[k];
    const MaskLayer& ml = mask.layers[k];
    for (std::size_t i = 0; i < t.numel(); ++i)
      if (!ml.get(i)) t[i] = 0.0;
    out.push_back(std::move(t));
  }
  return out;
}

void zero_masked(Tensor& g, const MaskLayer& ml) {
  for (std::size_t i = 0; i < g.numel(); ++i)
    if (!ml.get(i)) g[i] = 0.0;
}

void softmax_rows(Tensor& t, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = t.data.data() + r * cols;
    double mx = row[0];
    for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, row[c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      row[c] = std::exp(row[c] - mx);
      sum += row[c];
    }
    for (std::size_t c = 0; c < cols; ++c) row[c] /= sum;
  }
}

struct ForwardTrace {
  // activation after each layer, plus the input at front
  std::vector<Tensor> acts;
  std::vector<std::vector<std::uint32_t>> pool_argmax;  // per maxpool layer
};

// One pass through the net. The trace is only recorded when requested (training).
Tensor run_forward(const NetworkConfig& cfg, const std::vector<Tensor>& mw,
                   const Weights& ws, const Tensor& batch, ForwardTrace* trace) {
  const std::size_t B = batch.dim(0);
  auto shapes = trace_shapes(cfg);
  Dims cur = dims_of(cfg.input_shape);

  Tensor act = batch;
  if (trace) trace->acts.push_back(act);
  std::size_t p = 0;
  for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
    const LayerShape& l = cfg.layers[i];
    Dims next = shapes[i];
    switch (l.kind) {
      case LayerKind::Dense: {
        Tensor out({B, next.flat()});
        kernels::dense_fwd(act.data.data(), mw[p].data.data(), ws.b[p].data(),
                           out.data.data(), {B, l.n, l.m});
        act = std::move(out);
        ++p;
        break;
      }
      case LayerKind::Conv5x5: {
        kernels::ConvDims cd{B, cur.c, cur.h, cur.w, l.m};
        Tensor out({B, next.c, next.h, next.w});
        kernels::conv5x5_fwd(act.data.data(), mw[p].data.data(), ws.b[p].data(),
                             out.data.data(), cd);
        act = std::move(out);
        ++p;
        break;
      }
      case LayerKind::MaxPool2x2: {
        Tensor out({B, next.c, next.h, next.w});
        std::vector<std::uint32_t> argmax(out.numel());
        kernels::maxpool2x2_fwd(act.data.data(), out.data.data(), argmax.data(),
                                B * cur.c, cur.h, cur.w);
        if (trace) trace->pool_argmax.push_back(std::move(argmax));
        act = std::move(out);
        break;
      }
      case LayerKind::Relu: {
        Tensor out = act;
        for (double& v : out.data) v = v > 0.0 ? v : 0.0;
        act = std::move(out);
        break;
      }
      case LayerKind::Softmax: {
        Tensor out = act;
        out.shape = {B, cfg.classes};
        softmax_rows(out, B, cfg.classes);
        act = std::move(out);
        break;
      }
    }
    cur = next;
    if (trace) trace->acts.push_back(act);
  }
  return act;
}

}  // namespace

Tensor forward(const NetworkConfig& cfg, const Weights& weights, const Mask& mask,
               const Tensor& batch) {
  check_weights_match(cfg, weights, mask);
  if (batch.shape.empty() || Tensor::numel_of(batch.shape) / std::max<std::size_t>(batch.dim(0), 1) !=
                                 Tensor::numel_of(cfg.input_shape))
    throw std::invalid_argument("batch shape " + batch.shape_str() +
                                " does not match network input");
  auto mw = masked_weights(weights, mask);
  return run_forward(cfg, mw, weights, batch, nullptr);
}

BackwardResult backward(const NetworkConfig& cfg, const Weights& weights, const Mask& mask,
                        const Tensor& batch, const std::vector<std::uint8_t>& labels) {
  check_weights_match(cfg, weights, mask);
  const std::size_t B = batch.dim(0);
  if (labels.size() != B) throw std::invalid_argument("label count != batch rows");
  for (std::uint8_t y : labels)
    if (y >= cfg.classes) throw std::invalid_argument("label out of range");

  auto mw = masked_weights(weights, mask);
  ForwardTrace trace;
  Tensor probs = run_forward(cfg, mw, weights, batch, &trace);

  // mean cross-entropy; dL/dlogits = (p - onehot)/B handled jointly with softmax
  double loss = 0.0;
  Tensor delta({B, cfg.classes});
  for (std::size_t r = 0; r < B; ++r) {
    const double* row = probs.data.data() + r * cfg.classes;
    loss -= std::log(std::max(row[labels[r]], 1e-300));
    for (std::size_t c = 0; c < cfg.classes; ++c)
      delta[r * cfg.classes + c] =
          (row[c] - (c == labels[r] ? 1.0 : 0.0)) / static_cast<double>(B);
  }
  loss /= static_cast<double>(B);

  BackwardResult res;
  res.loss = loss;
  auto pl = cfg.parameterized_layers();
  res.grads.w.resize(pl.size());
  res.grads.b.resize(pl.size());

  auto shapes = trace_shapes(cfg);
  std::size_t p = pl.size();
  std::size_t pool_i = trace.pool_argmax.size();
  for (std::size_t ii = cfg.layers.size(); ii-- > 0;) {
    const LayerShape& l = cfg.layers[ii];
    const Tensor& input = trace.acts[ii];  // activation entering layer ii
    Dims in_dims = ii == 0 ? dims_of(cfg.input_shape) : shapes[ii - 1];
    switch (l.kind) {
      case LayerKind::Softmax:
        break;  // folded into delta above
      case LayerKind::Relu: {
        const Tensor& out = trace.acts[ii + 1];
        for (std::size_t k = 0; k < delta.numel(); ++k)
          if (out[k] <= 0.0) delta[k] = 0.0;
        break;
      }
      case LayerKind::MaxPool2x2: {
        --pool_i;
        Tensor dx({B, in_dims.c, in_dims.h, in_dims.w});
        kernels::maxpool2x2_bwd(delta.data.data(), trace.pool_argmax[pool_i].data(),
                                dx.data.data(), B * in_dims.c, in_dims.h, in_dims.w);
        delta = std::move(dx);
        break;
      }
      case LayerKind::Dense: {
        --p;
        kernels::DenseDims dd{B, l.n, l.m};
        Tensor dw({l.m, l.n});
        res.grads.b[p].assign(l.m, 0.0);
        kernels::dense_grad_w(input.data.data(), delta.data.data(), dw.data.data(),
                              res.grads.b[p].data(), dd);
        zero_masked(dw, mask.layers[p]);
        res.grads.w[p] = std::move(dw);
        if (ii > 0) {
          Tensor dx({B, l.n});
          kernels::dense_grad_x(delta.data.data(), mw[p].data.data(), dx.data.data(), dd);
          delta = std::move(dx);
        }
        break;
      }
      case LayerKind::Conv5x5: {
        --p;
        kernels::ConvDims cd{B, in_dims.c, in_dims.h, in_dims.w, l.m};
        Tensor dw({l.m, l.n});
        res.grads.b[p].assign(l.m, 0.0);
        kernels::conv5x5_grad_w(input.data.data(), delta.data.data(), dw.data.data(),
                                res.grads.b[p].data(), cd);
        zero_masked(dw, mask.layers[p]);
        res.grads.w[p] = std::move(dw);
        if (ii > 0) {
          Tensor dx({B, in_dims.c, in_dims.h, in_dims.w});
          kernels::conv5x5_grad_x(delta.data.data(), mw[p].data.data(), dx.data.data(), cd);
          delta = std::move(dx);
        }
        break;
      }
    }
  }
  return res;
}

void sgd_step(Weights& weights, const Weights& grads, double lr) {
  if (weights.w.size() != grads.w.size())
    throw std::invalid_argument("sgd_step: layer count mismatch");
  for (std::size_t k = 0; k < weights.w.size(); ++k) {
    if (weights.w[k].numel() != grads.w[k].numel())
      throw std::invalid_argument("sgd_step: shape mismatch");
    for (std::size_t i = 0; i < weights.w[k].numel(); ++i)
      weights.w[k][i] -= lr * grads.w[k][i];
    for (std::size_t i = 0; i < weights.b[k].size(); ++i)
      weights.b[k][i] -= lr * grads.b[k][i];
  }
}

namespace {

Tensor gather_batch(const Dataset& ds, const std::vector<std::size_t>& order,
                    std::size_t begin, std::size_t end,
                    const std::vector<std::size_t>& example_shape,
                    std::vector<std::uint8_t>* labels) {
  std::vector<std::size_t> shape;
  shape.push_back(end - begin);
  shape.insert(shape.end(), example_shape.begin(), example_shape.end());
  Tensor batch(shape);
  const std::size_t stride = ds.example_stride();
  labels->clear();
  for (std::size_t k = begin; k < end; ++k) {
    std::size_t idx = order[k];
    std::copy_n(ds.example(idx), stride, batch.data.data() + (k - begin) * stride);
    labels->push_back(ds.labels[idx]);
  }
  return batch;
}

// Relative per-layer gradient perturbation; keeps masked entries at zero.
void perturb_grads(Weights& grads, const Mask& mask, double scale,
                   const RandomStream& noise_stream, std::uint64_t step) {
  if (scale <= 0.0) return;
  RandomStream step_stream = noise_stream.fork(step);
  for (std::size_t k = 0; k < grads.w.size(); ++k) {
    Tensor& g = grads.w[k];
    const MaskLayer& ml = mask.layers[k];
    std::size_t tau = ml.popcount();
    if (tau == 0) continue;
    double sq = 0.0;
    for (std::size_t i = 0; i < g.numel(); ++i) sq += g[i] * g[i];
    double rms = std::sqrt(sq / static_cast<double>(tau));
    if (rms == 0.0) continue;
    RandomStream layer_stream = step_stream.fork(k);
    const double amp = scale * rms;
    for (std::size_t i = 0; i < g.numel(); ++i)
      if (ml.get(i)) g[i] += amp * layer_stream.gauss_at(i);
  }
}

}  // namespace

double evaluate_accuracy(const NetworkConfig& cfg, const Weights& weights, const Mask& mask,
                         const Dataset& eval_set) {
  if (eval_set.size() == 0) throw std::invalid_argument("empty evaluation set");
  auto example_shape = eval_set.example_shape();
  std::vector<std::size_t> order(eval_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t correct = 0;
  const std::size_t chunk = 256;
  std::vector<std::uint8_t> labels;
  for (std::size_t begin = 0; begin < eval_set.size(); begin += chunk) {
    std::size_t end = std::min(eval_set.size(), begin + chunk);
    Tensor batch = gather_batch(eval_set, order, begin, end, example_shape, &labels);
    Tensor probs = forward(cfg, weights, mask, batch);
    for (std::size_t r = 0; r < end - begin; ++r) {
      const double* row = probs.data.data() + r * cfg.classes;
      std::size_t arg = 0;
      for (std::size_t c = 1; c < cfg.classes; ++c)
        if (row[c] > row[arg]) arg = c;
      if (arg == labels[r]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(eval_set.size());
}

TrainResult train(const NetworkConfig& cfg, const Weights& start, const Mask& mask,
                  const Dataset& train_set, const Dataset& eval_set,
                  RandomStream shuffle_stream, RandomStream noise_stream) {
  check_weights_match(cfg, start, mask);
  if (train_set.size() == 0) throw std::invalid_argument("empty training set");
  auto example_shape = train_set.example_shape();

  Weights w = start;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::uint8_t> labels;
  std::uint64_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    RandomStream es = shuffle_stream.fork(epoch);
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[es.next_below(i)]);
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      Tensor batch = gather_batch(train_set, order, begin, end, example_shape, &labels);
      BackwardResult bw = backward(cfg, w, mask, batch, labels);
      perturb_grads(bw.grads, mask, cfg.grad_noise, noise_stream, step);
      sgd_step(w, bw.grads, cfg.learning_rate);
      for (const Tensor& t : w.w)
        if (!all_finite(t))
          throw std::runtime_error("non-finite weights after SGD step " +
                                   std::to_string(step));
      ++step;
    }
  }
  TrainResult res;
  res.accuracy = evaluate_accuracy(cfg, w, mask, eval_set);
  res.weights = std::move(w);
  return res;
}

}  // namespace ticketlab
