#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gem/matrix.hpp"

namespace gem {

// One task's examples: x rows are feature vectors, y the class labels.
struct TaskData {
  Matrix x;
  std::vector<int> y;
  int count() const { return x.rows(); }
};

// A minibatch drawn from the stream. task == kMixedTasks marks a batch that
// spans tasks (iid-shuffle mode only).
struct Batch {
  Matrix x;
  std::vector<int> y;
  int task = 0;
};
inline constexpr int kMixedTasks = -1;

enum class DatasetKind { kPermutations, kRotations, kSplitClasses, kSynthetic };

std::string to_string(DatasetKind kind);
DatasetKind dataset_kind_from_string(const std::string& s);

struct ContinuumSpec {
  DatasetKind dataset = DatasetKind::kSynthetic;
  int tasks = 5;
  int examples_per_task = 500;
  int epochs_per_task = 1;
  int minibatch = 10;
  std::uint64_t seed = 0;
  bool iid_shuffle = false;  // one globally shuffled pass instead of task order
  int test_examples = 0;     // cap per-task test set size; 0 = keep all

  // synthetic generator knobs
  int synth_input_dim = 32;
  int synth_classes = 10;
  double synth_noise = 0.25;

  void validate() const;
};

// Ordered, locally-iid training stream plus per-task held-out test sets.
struct TaskStream {
  std::vector<TaskData> train;  // emission order for the first epoch
  std::vector<TaskData> test;
  int num_tasks = 0;
  int input_dim = 0;
  int num_classes = 0;
  int minibatch = 10;
  int epochs_per_task = 1;
  bool iid_shuffle = false;
  std::uint64_t seed = 0;

  // Extra structure, filled by the matching builder.
  std::vector<std::vector<int>> pixel_permutations;  // permutations dataset
  std::vector<double> rotation_angles_deg;           // rotations dataset
  std::vector<std::vector<int>> class_subsets;       // split-classes dataset

  long total_train_examples() const;
};

// Walks the stream in minibatches; tells the caller where task rows of the
// accuracy matrix must be recorded.
class StreamCursor {
 public:
  explicit StreamCursor(const TaskStream& stream);

  // False once the stream is exhausted.
  bool next(Batch& out);
  // True when the batch just returned was the last one before a row boundary
  // (end of a task; in iid-shuffle mode, end of a stream segment).
  bool at_boundary() const { return at_boundary_; }
  // Index of the boundary just crossed, in [0, num_tasks).
  int boundary_index() const { return boundary_index_; }
  long batches_emitted() const { return batches_emitted_; }

 private:
  struct Slot {
    int task;
    int index;
  };
  void build_schedule();

  const TaskStream& stream_;
  std::vector<Slot> schedule_;
  std::vector<long> boundaries_;  // schedule positions after which a row is due
  long pos_ = 0;
  long batches_emitted_ = 0;
  bool at_boundary_ = false;
  int boundary_index_ = -1;
};

// Labeled image set as loaded from an IDX pair.
struct LabeledImages {
  Matrix x;  // pixels scaled to [0,1], one image per row
  std::vector<int> y;
  int image_rows = 0;
  int image_cols = 0;
};

// Reads an IDX image/label file pair (big-endian headers, magic 0x803/0x801).
LabeledImages load_idx(const std::string& images_path, const std::string& labels_path);

// Bilinear rotation about the image center; out-of-bounds samples are 0.
std::vector<double> rotate_image(std::span<const double> src, int rows, int cols,
                                 double degrees);

TaskStream build_permutations(const LabeledImages& train, const LabeledImages& test,
                              const ContinuumSpec& spec);
TaskStream build_rotations(const LabeledImages& train, const LabeledImages& test,
                           const ContinuumSpec& spec);
TaskStream build_split_classes(const LabeledImages& train, const LabeledImages& test,
                               const ContinuumSpec& spec);
TaskStream build_synthetic(const ContinuumSpec& spec);

}  // namespace gem
