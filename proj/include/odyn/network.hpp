#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "odyn/rng.hpp"
#include "odyn/tensor.hpp"

// Feed-forward networks with tanh hidden activations and a linear output
// layer, plus an optional skip connection that adds the input back onto the
// output. Parameters live in one flat vector: all weight matrices first,
// then all bias vectors, layer by layer. Weight matrices are stored
// fan_in x fan_out so a batch of row vectors maps through h * W.

namespace odyn {

struct NetworkSpec {
  int input_dim = 1;
  int output_dim = 1;
  int hidden_layers = 0;
  int hidden_width = 0;
  bool skip_connection = false;
};

inline void validate(const NetworkSpec& spec) {
  if (spec.input_dim < 1 || spec.output_dim < 1)
    throw TapeError("NetworkSpec: dimensions must be positive");
  if (spec.hidden_layers < 0) throw TapeError("NetworkSpec: hidden_layers must be >= 0");
  if (spec.hidden_layers > 0 && spec.hidden_width < 1)
    throw TapeError("NetworkSpec: hidden_width must be positive");
  if (spec.skip_connection && spec.input_dim != spec.output_dim && spec.input_dim != 1)
    throw TapeError("NetworkSpec: skip connection requires input_dim == output_dim or input_dim == 1");
}

struct LayerView {
  int fan_in = 0;
  int fan_out = 0;
  int weight_offset = 0;
  int bias_offset = 0;
};

inline std::vector<LayerView> network_layout(const NetworkSpec& spec) {
  validate(spec);
  std::vector<LayerView> layers;
  int in = spec.input_dim;
  for (int l = 0; l < spec.hidden_layers; ++l) {
    layers.push_back({in, spec.hidden_width, 0, 0});
    in = spec.hidden_width;
  }
  layers.push_back({in, spec.output_dim, 0, 0});
  int offset = 0;
  for (auto& layer : layers) {
    layer.weight_offset = offset;
    offset += layer.fan_in * layer.fan_out;
  }
  for (auto& layer : layers) {
    layer.bias_offset = offset;
    offset += layer.fan_out;
  }
  return layers;
}

inline int param_count(const NetworkSpec& spec) {
  int count = 0;
  for (const auto& layer : network_layout(spec))
    count += layer.fan_in * layer.fan_out + layer.fan_out;
  return count;
}

// Glorot-uniform weights, zero biases, deterministic per seed.
inline std::vector<double> init_network(const NetworkSpec& spec, std::uint64_t seed) {
  const auto layers = network_layout(spec);
  std::vector<double> params(param_count(spec), 0.0);
  RandomStream stream(seed);
  for (const auto& layer : layers) {
    const double bound = std::sqrt(6.0 / (layer.fan_in + layer.fan_out));
    for (int i = 0; i < layer.fan_in * layer.fan_out; ++i)
      params[layer.weight_offset + i] = stream.uniform(-bound, bound);
  }
  return params;
}

// Plain-double forward pass; the fast path for reference rollouts and
// Newton inner loops.
inline std::vector<double> forward_eager(const NetworkSpec& spec,
                                         const std::vector<double>& params,
                                         const std::vector<double>& input, int batch) {
  const auto layers = network_layout(spec);
  if (static_cast<int>(input.size()) != batch * spec.input_dim)
    throw TapeError("forward: input shape mismatch");
  std::vector<double> h = input;
  int width = spec.input_dim;
  std::vector<double> next;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    next.assign(static_cast<std::size_t>(batch) * layer.fan_out, 0.0);
    const double* w = params.data() + layer.weight_offset;
    const double* b = params.data() + layer.bias_offset;
    for (int r = 0; r < batch; ++r) {
      double* out_row = next.data() + static_cast<std::size_t>(r) * layer.fan_out;
      for (int j = 0; j < layer.fan_out; ++j) out_row[j] = b[j];
      const double* in_row = h.data() + static_cast<std::size_t>(r) * width;
      for (int i = 0; i < layer.fan_in; ++i) {
        const double hi = in_row[i];
        if (hi == 0.0) continue;
        const double* wrow = w + static_cast<std::size_t>(i) * layer.fan_out;
        for (int j = 0; j < layer.fan_out; ++j) out_row[j] += hi * wrow[j];
      }
    }
    const bool is_output = (l + 1 == layers.size());
    if (!is_output)
      for (double& v : next) v = std::tanh(v);
    h.swap(next);
    width = layer.fan_out;
  }
  if (spec.skip_connection) {
    for (int r = 0; r < batch; ++r)
      for (int j = 0; j < spec.output_dim; ++j)
        h[static_cast<std::size_t>(r) * spec.output_dim + j] +=
            spec.input_dim == 1 ? input[r] : input[static_cast<std::size_t>(r) * spec.input_dim + j];
  }
  return h;
}

// Tangent pass: value and d(value)/dt for a time-input network, computed by
// propagating dh/dt alongside h. Only first-order tape ops are ever needed
// when this runs recorded.
inline void time_derivative_eager(const NetworkSpec& spec, const std::vector<double>& params,
                                  const std::vector<double>& t, int batch,
                                  std::vector<double>* value_out, std::vector<double>* deriv_out) {
  if (spec.input_dim != 1)
    throw TapeError("time_derivative: network input must be one-dimensional");
  const auto layers = network_layout(spec);
  std::vector<double> h = t;
  std::vector<double> s(batch, 1.0);
  int width = 1;
  std::vector<double> next_h, next_s;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    next_h.assign(static_cast<std::size_t>(batch) * layer.fan_out, 0.0);
    next_s.assign(static_cast<std::size_t>(batch) * layer.fan_out, 0.0);
    const double* w = params.data() + layer.weight_offset;
    const double* b = params.data() + layer.bias_offset;
    for (int r = 0; r < batch; ++r) {
      double* hrow = next_h.data() + static_cast<std::size_t>(r) * layer.fan_out;
      double* srow = next_s.data() + static_cast<std::size_t>(r) * layer.fan_out;
      for (int j = 0; j < layer.fan_out; ++j) hrow[j] = b[j];
      for (int i = 0; i < layer.fan_in; ++i) {
        const double hi = h[static_cast<std::size_t>(r) * width + i];
        const double si = s[static_cast<std::size_t>(r) * width + i];
        const double* wrow = w + static_cast<std::size_t>(i) * layer.fan_out;
        for (int j = 0; j < layer.fan_out; ++j) {
          hrow[j] += hi * wrow[j];
          srow[j] += si * wrow[j];
        }
      }
    }
    const bool is_output = (l + 1 == layers.size());
    if (!is_output) {
      for (std::size_t i = 0; i < next_h.size(); ++i) {
        const double y = std::tanh(next_h[i]);
        next_h[i] = y;
        next_s[i] *= (1.0 - y * y);
      }
    }
    h.swap(next_h);
    s.swap(next_s);
    width = layer.fan_out;
  }
  if (spec.skip_connection) {
    for (int r = 0; r < batch; ++r)
      for (int j = 0; j < spec.output_dim; ++j) {
        h[static_cast<std::size_t>(r) * spec.output_dim + j] += t[r];
        s[static_cast<std::size_t>(r) * spec.output_dim + j] += 1.0;
      }
  }
  if (value_out) *value_out = std::move(h);
  if (deriv_out) *deriv_out = std::move(s);
}

inline std::vector<double> time_derivative(const NetworkSpec& spec,
                                           const std::vector<double>& params,
                                           const std::vector<double>& t, int batch) {
  std::vector<double> deriv;
  time_derivative_eager(spec, params, t, batch, nullptr, &deriv);
  return deriv;
}

// Tape-recorded view of a network over a flat (possibly augmented) parameter
// leaf. Layer slices are created once per tape; bias rows and skip columns
// are broadcast through matmuls with cached constant one-vectors so repeated
// forwards stay cheap.
class NetworkGraph {
 public:
  NetworkGraph(const NetworkSpec& spec, const Tensor& flat_params, int offset = 0)
      : spec_(spec), layout_(network_layout(spec)) {
    if (flat_params.node() < 0)
      throw TapeError("NetworkGraph: parameters must be a tape leaf");
    for (const auto& layer : layout_) {
      weights_.push_back(slice(flat_params, offset + layer.weight_offset, layer.fan_in, layer.fan_out));
      biases_.push_back(slice(flat_params, offset + layer.bias_offset, 1, layer.fan_out));
    }
  }

  const NetworkSpec& spec() const { return spec_; }

  Tensor forward(const Tensor& input) {
    if (input.cols() != spec_.input_dim)
      throw TapeError("forward: input shape mismatch, expected cols " +
                      std::to_string(spec_.input_dim));
    Tensor h = input;
    for (std::size_t l = 0; l < layout_.size(); ++l) {
      Tensor z = add(matmul(h, weights_[l]), bias_rows(l, input.rows()));
      h = (l + 1 == layout_.size()) ? z : odyn::tanh(z);
    }
    if (spec_.skip_connection) h = add(h, skip_term(input));
    return h;
  }

  // Value and time derivative in one recorded graph (input_dim must be 1).
  std::pair<Tensor, Tensor> forward_with_tangent(const Tensor& t) {
    if (spec_.input_dim != 1)
      throw TapeError("time_derivative: network input must be one-dimensional");
    const int batch = t.rows();
    Tensor h = t;
    Tensor s = ones(batch, 1);
    for (std::size_t l = 0; l < layout_.size(); ++l) {
      Tensor z = add(matmul(h, weights_[l]), bias_rows(l, batch));
      Tensor sz = matmul(s, weights_[l]);
      if (l + 1 == layout_.size()) {
        h = z;
        s = sz;
      } else {
        h = odyn::tanh(z);
        s = mul(sub(Tensor::scalar(1.0), square(h)), sz);
      }
    }
    if (spec_.skip_connection) {
      h = add(h, skip_term(t));
      s = add(s, ones(batch, spec_.output_dim));
    }
    return {h, s};
  }

 private:
  Tensor bias_rows(std::size_t layer, int batch) {
    if (batch == 1) return biases_[layer];
    auto& cached = bias_cache_[{static_cast<int>(layer), batch}];
    if (cached.node() < 0) cached = matmul(ones(batch, 1), biases_[layer]);
    return cached;
  }

  Tensor skip_term(const Tensor& input) {
    if (spec_.input_dim == spec_.output_dim) return input;
    return matmul(input, ones(1, spec_.output_dim));
  }

  Tensor ones(int rows, int cols) {
    auto& cached = ones_cache_[{rows, cols}];
    if (cached.node() < 0)
      cached = Tape::active()->leaf(
          Tensor::from(rows, cols, std::vector<double>(static_cast<std::size_t>(rows) * cols, 1.0)),
          false);
    return cached;
  }

  struct KeyHash {
    std::size_t operator()(const std::pair<int, int>& key) const {
      return std::hash<long long>()((static_cast<long long>(key.first) << 32) ^ key.second);
    }
  };

  NetworkSpec spec_;
  std::vector<LayerView> layout_;
  std::vector<Tensor> weights_;
  std::vector<Tensor> biases_;
  std::unordered_map<std::pair<int, int>, Tensor, KeyHash> bias_cache_;
  std::unordered_map<std::pair<int, int>, Tensor, KeyHash> ones_cache_;
};

// Checkpoint: fixed little-endian binary header + float64 data, with a
// human-readable sidecar describing the architecture.
enum class TrainPhase : std::uint8_t { None = 0, Pretrained = 1, Finetuned = 2 };

struct Checkpoint {
  NetworkSpec spec;
  std::vector<double> params;
  std::vector<double> lambda;
  TrainPhase phase = TrainPhase::None;
};

namespace detail {

template <typename T>
void write_le(std::ofstream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::ifstream& in) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw TapeError("save_checkpoint: cannot open " + path);
  out.write("ODYN", 4);
  detail::write_le<std::uint32_t>(out, 1);  // format version
  detail::write_le<std::int32_t>(out, ckpt.spec.input_dim);
  detail::write_le<std::int32_t>(out, ckpt.spec.output_dim);
  detail::write_le<std::int32_t>(out, ckpt.spec.hidden_layers);
  detail::write_le<std::int32_t>(out, ckpt.spec.hidden_width);
  detail::write_le<std::uint8_t>(out, ckpt.spec.skip_connection ? 1 : 0);
  detail::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(ckpt.phase));
  detail::write_le<std::uint64_t>(out, ckpt.params.size());
  detail::write_le<std::uint64_t>(out, ckpt.lambda.size());
  for (double v : ckpt.params) detail::write_le<double>(out, v);
  for (double v : ckpt.lambda) detail::write_le<double>(out, v);

  std::ofstream sidecar(path + ".spec.txt");
  sidecar << "input_dim " << ckpt.spec.input_dim << "\n"
          << "output_dim " << ckpt.spec.output_dim << "\n"
          << "hidden_layers " << ckpt.spec.hidden_layers << "\n"
          << "hidden_width " << ckpt.spec.hidden_width << "\n"
          << "skip_connection " << (ckpt.spec.skip_connection ? 1 : 0) << "\n"
          << "params " << ckpt.params.size() << "\n"
          << "lambda " << ckpt.lambda.size() << "\n"
          << "phase " << static_cast<int>(ckpt.phase) << "\n";
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TapeError("load_checkpoint: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (std::memcmp(magic, "ODYN", 4) != 0) throw TapeError("load_checkpoint: bad magic");
  const auto version = detail::read_le<std::uint32_t>(in);
  if (version != 1) throw TapeError("load_checkpoint: unsupported version");
  Checkpoint ckpt;
  ckpt.spec.input_dim = detail::read_le<std::int32_t>(in);
  ckpt.spec.output_dim = detail::read_le<std::int32_t>(in);
  ckpt.spec.hidden_layers = detail::read_le<std::int32_t>(in);
  ckpt.spec.hidden_width = detail::read_le<std::int32_t>(in);
  ckpt.spec.skip_connection = detail::read_le<std::uint8_t>(in) != 0;
  ckpt.phase = static_cast<TrainPhase>(detail::read_le<std::uint8_t>(in));
  const auto n_params = detail::read_le<std::uint64_t>(in);
  const auto n_lambda = detail::read_le<std::uint64_t>(in);
  ckpt.params.resize(n_params);
  for (auto& v : ckpt.params) v = detail::read_le<double>(in);
  ckpt.lambda.resize(n_lambda);
  for (auto& v : ckpt.lambda) v = detail::read_le<double>(in);
  if (!in) throw TapeError("load_checkpoint: truncated file");
  return ckpt;
}

}  // namespace odyn
