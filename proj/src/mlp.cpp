#include "gem/mlp.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "gem/rng.hpp"

namespace gem {

namespace {

// Large negative stand-in for -inf; exp(kMasked - max) underflows to zero
// without producing NaN in the max-subtracted softmax.
constexpr double kMaskedLogit = -1e30;

}  // namespace

std::string to_string(HeadMode mode) {
  switch (mode) {
    case HeadMode::kShared: return "shared";
    case HeadMode::kPerTaskOutput: return "per-task-output";
    case HeadMode::kPerTaskInput: return "per-task-input";
  }
  return "?";
}

HeadMode head_mode_from_string(const std::string& s) {
  if (s == "shared") return HeadMode::kShared;
  if (s == "per-task-output") return HeadMode::kPerTaskOutput;
  if (s == "per-task-input") return HeadMode::kPerTaskInput;
  throw std::invalid_argument("unknown head mode: " + s);
}

void MlpConfig::validate() const {
  if (input_dim < 1) throw std::invalid_argument("MlpConfig: input_dim < 1");
  if (num_classes < 1) throw std::invalid_argument("MlpConfig: num_classes < 1");
  if (num_tasks < 1) throw std::invalid_argument("MlpConfig: num_tasks < 1");
  if (hidden_dims.empty()) throw std::invalid_argument("MlpConfig: hidden_dims empty");
  for (int h : hidden_dims) {
    if (h < 1) throw std::invalid_argument("MlpConfig: hidden dim < 1");
  }
  if (head_mode == HeadMode::kPerTaskOutput && num_classes % num_tasks != 0) {
    throw std::invalid_argument("MlpConfig: per-task-output needs num_tasks | num_classes");
  }
}

int MlpConfig::classes_per_task() const { return num_classes / num_tasks; }

long MlpConfig::param_count() const {
  long p = 0;
  const long first = static_cast<long>(input_dim) * hidden_dims[0] + hidden_dims[0];
  p += head_mode == HeadMode::kPerTaskInput ? first * num_tasks : first;
  for (std::size_t i = 1; i < hidden_dims.size(); ++i) {
    p += static_cast<long>(hidden_dims[i - 1]) * hidden_dims[i] + hidden_dims[i];
  }
  p += static_cast<long>(hidden_dims.back()) * num_classes + num_classes;
  return p;
}

Mlp::Mlp(MlpConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  const int h0 = config_.hidden_dims[0];
  long off = 0;
  auto push = [&off](std::vector<Layer>& dst, int in, int out) {
    dst.push_back(Layer{off, off + static_cast<long>(in) * out, in, out});
    off += static_cast<long>(in) * out + out;
  };
  const int n_input = config_.head_mode == HeadMode::kPerTaskInput ? config_.num_tasks : 1;
  for (int t = 0; t < n_input; ++t) push(input_layers_, config_.input_dim, h0);
  for (std::size_t i = 1; i < config_.hidden_dims.size(); ++i) {
    push(trunk_, config_.hidden_dims[i - 1], config_.hidden_dims[i]);
  }
  push(trunk_, config_.hidden_dims.back(), config_.num_classes);
  params_.assign(off, 0.0);

  // uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) per layer, weights and biases
  Rng rng(derive_seed(seed, 0x6d6c70 /* "mlp" */));
  auto init = [&](const Layer& l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
    for (long i = 0; i < static_cast<long>(l.in) * l.out + l.out; ++i) {
      params_[l.w_off + i] = rng.uniform(-bound, bound);
    }
  };
  for (const Layer& l : input_layers_) init(l);
  for (const Layer& l : trunk_) init(l);
}

std::vector<Mlp::Layer> Mlp::layers_for(int task) const {
  std::vector<Layer> seq;
  seq.reserve(1 + trunk_.size());
  seq.push_back(config_.head_mode == HeadMode::kPerTaskInput ? input_layers_[task]
                                                             : input_layers_[0]);
  seq.insert(seq.end(), trunk_.begin(), trunk_.end());
  return seq;
}

void Mlp::check_input(const Matrix& x, int task) const {
  if (x.cols() != config_.input_dim) {
    throw std::invalid_argument("Mlp: input has " + std::to_string(x.cols()) +
                                " columns, expected " + std::to_string(config_.input_dim));
  }
  if (task < 0 || task >= config_.num_tasks) {
    throw std::domain_error("Mlp: unknown task id " + std::to_string(task));
  }
}

namespace {

// x * W + b for a row-major weight block inside the flat parameter vector.
Matrix affine(const Matrix& x, const double* params, long w_off, long b_off, int in,
              int out) {
  Matrix w(in, out, std::vector<double>(params + w_off, params + w_off + static_cast<long>(in) * out));
  Matrix z = matmul(x, w);
  const double* b = params + b_off;
  for (int r = 0; r < z.rows(); ++r) {
    double* zr = z.row(r);
    for (int c = 0; c < out; ++c) zr[c] += b[c];
  }
  return z;
}

}  // namespace

Matrix Mlp::forward(const Matrix& x, int task) const {
  check_input(x, task);
  Matrix a = x;
  const auto seq = layers_for(task);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    Matrix z = affine(a, params_.data(), seq[i].w_off, seq[i].b_off, seq[i].in, seq[i].out);
    a = i + 1 < seq.size() ? relu(z) : std::move(z);
  }
  if (config_.head_mode == HeadMode::kPerTaskOutput) {
    const int cpt = config_.classes_per_task();
    const int lo = task * cpt, hi = lo + cpt;
    for (int r = 0; r < a.rows(); ++r) {
      double* ar = a.row(r);
      for (int c = 0; c < a.cols(); ++c) {
        if (c < lo || c >= hi) ar[c] = kMaskedLogit;
      }
    }
  }
  return a;
}

Mlp::LossGrad Mlp::loss_and_grad(const Matrix& x, int task,
                                 std::span<const int> labels) const {
  check_input(x, task);
  if (x.rows() == 0) throw std::domain_error("loss_and_grad: empty batch");
  if (static_cast<int>(labels.size()) != x.rows()) {
    throw std::invalid_argument("loss_and_grad: labels/batch size mismatch");
  }

  const auto seq = layers_for(task);
  const std::size_t n_layers = seq.size();

  // Forward pass, keeping pre-activations and layer inputs.
  std::vector<Matrix> inputs(n_layers);  // input to layer i
  std::vector<Matrix> preact(n_layers);  // x*W+b of layer i
  Matrix a = x;
  for (std::size_t i = 0; i < n_layers; ++i) {
    inputs[i] = a;
    preact[i] = affine(a, params_.data(), seq[i].w_off, seq[i].b_off, seq[i].in, seq[i].out);
    a = i + 1 < n_layers ? relu(preact[i]) : preact[i];
  }
  if (config_.head_mode == HeadMode::kPerTaskOutput) {
    const int cpt = config_.classes_per_task();
    const int lo = task * cpt, hi = lo + cpt;
    for (int r = 0; r < a.rows(); ++r) {
      double* ar = a.row(r);
      for (int c = 0; c < a.cols(); ++c) {
        if (c < lo || c >= hi) ar[c] = kMaskedLogit;
      }
    }
  }

  auto xent = softmax_xent(a, labels);

  LossGrad out{xent.loss, FlatVector(params_.size(), 0.0)};
  // Masked logits receive softmax probability 0 and are never the label, so
  // their dlogits entries are exactly 0 and backprop needs no special case.
  Matrix d = std::move(xent.dlogits);
  for (std::size_t ii = n_layers; ii-- > 0;) {
    const Layer& l = seq[ii];
    Matrix dw = matmul_tn(inputs[ii], d);
    double* gw = out.grad.data() + l.w_off;
    std::memcpy(gw, dw.data(), sizeof(double) * dw.size());
    double* gb = out.grad.data() + l.b_off;
    for (int r = 0; r < d.rows(); ++r) {
      const double* dr = d.row(r);
      for (int c = 0; c < l.out; ++c) gb[c] += dr[c];
    }
    if (ii > 0) {
      Matrix w(l.in, l.out,
               std::vector<double>(params_.begin() + l.w_off,
                                   params_.begin() + l.w_off + static_cast<long>(l.in) * l.out));
      d = relu_backward(preact[ii - 1], matmul_nt(d, w));
    }
  }
  return out;
}

void Mlp::set_params(const FlatVector& v) {
  if (v.size() != params_.size()) {
    throw std::invalid_argument("set_params: length " + std::to_string(v.size()) +
                                " != " + std::to_string(params_.size()));
  }
  params_ = v;
}

void save_checkpoint(const Mlp& model, const std::string& path) {
  const MlpConfig& c = model.config();
  nlohmann::ordered_json header{
      {"schema", 1},
      {"input_dim", c.input_dim},
      {"hidden_dims", c.hidden_dims},
      {"num_classes", c.num_classes},
      {"num_tasks", c.num_tasks},
      {"head_mode", to_string(c.head_mode)},
      {"param_count", model.param_count()},
  };
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path);
  f << header.dump() << '\n';
  for (double value : model.params()) {
    std::uint64_t bits;
    std::memcpy(&bits, &value, 8);
    unsigned char le[8];
    for (int i = 0; i < 8; ++i) le[i] = static_cast<unsigned char>(bits >> (8 * i));
    f.write(reinterpret_cast<const char*>(le), 8);
  }
  if (!f) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

Mlp load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("load_checkpoint: missing header");
  const auto header = nlohmann::json::parse(line);
  MlpConfig c;
  c.input_dim = header.at("input_dim").get<int>();
  c.hidden_dims = header.at("hidden_dims").get<std::vector<int>>();
  c.num_classes = header.at("num_classes").get<int>();
  c.num_tasks = header.at("num_tasks").get<int>();
  c.head_mode = head_mode_from_string(header.at("head_mode").get<std::string>());
  const long p = header.at("param_count").get<long>();
  Mlp model(c, 0);
  if (model.param_count() != p) {
    throw std::runtime_error("load_checkpoint: param_count mismatch");
  }
  FlatVector v(static_cast<std::size_t>(p));
  for (long i = 0; i < p; ++i) {
    unsigned char le[8];
    if (!f.read(reinterpret_cast<char*>(le), 8)) {
      throw std::runtime_error("load_checkpoint: truncated payload");
    }
    std::uint64_t bits = 0;
    for (int j = 0; j < 8; ++j) bits |= static_cast<std::uint64_t>(le[j]) << (8 * j);
    std::memcpy(&v[i], &bits, 8);
  }
  model.set_params(v);
  return model;
}

}  // namespace gem
