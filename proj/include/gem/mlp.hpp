#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gem/matrix.hpp"

namespace gem {

enum class HeadMode {
  kShared,         // one output layer, task id ignored
  kPerTaskOutput,  // logits outside the task's class subset masked off
  kPerTaskInput,   // a dedicated input layer per task ("multimodal")
};

std::string to_string(HeadMode mode);
HeadMode head_mode_from_string(const std::string& s);

struct MlpConfig {
  int input_dim = 784;
  std::vector<int> hidden_dims{100, 100};
  int num_classes = 10;
  int num_tasks = 1;
  HeadMode head_mode = HeadMode::kShared;

  long param_count() const;
  int classes_per_task() const;  // subset width in kPerTaskOutput mode
  void validate() const;         // throws std::invalid_argument
};

/// Fully-connected ReLU classifier over flat parameter storage, with
/// hand-written reverse-mode gradients.
class Mlp {
 public:
  Mlp(MlpConfig config, std::uint64_t seed);

  // Logits for a batch; in kPerTaskOutput mode, columns outside task t's
  // class subset are set to a large negative constant.
  Matrix forward(const Matrix& x, int task) const;

  struct LossGrad {
    double loss;
    FlatVector grad;
  };
  LossGrad loss_and_grad(const Matrix& x, int task, std::span<const int> labels) const;

  const FlatVector& params() const { return params_; }
  void set_params(const FlatVector& v);
  std::span<double> params_span() { return params_; }
  long param_count() const { return static_cast<long>(params_.size()); }
  const MlpConfig& config() const { return config_; }

 private:
  struct Layer {
    long w_off;  // weights, in x out, row-major
    long b_off;  // bias, out
    int in;
    int out;
  };

  // The layer sequence used for task t: input layer (shared or per-task)
  // followed by the shared trunk.
  std::vector<Layer> layers_for(int task) const;
  void check_input(const Matrix& x, int task) const;

  MlpConfig config_;
  std::vector<Layer> input_layers_;  // one per task in kPerTaskInput, else one
  std::vector<Layer> trunk_;         // all layers after the first
  FlatVector params_;
};

// Flat parameter vector with a JSON config header and a little-endian f64
// payload.
void save_checkpoint(const Mlp& model, const std::string& path);
Mlp load_checkpoint(const std::string& path);

}  // namespace gem
