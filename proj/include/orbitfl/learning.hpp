#pragma once

// Federated averaging arithmetic and the bundled multinomial logistic-regression
// learner. Parameters are laid out class-major: row c holds the num_features
// weights of class c followed by its bias.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace orbitfl::learning {

class ModelParams {
 public:
  ModelParams() = default;
  explicit ModelParams(std::size_t dimension, double fill = 0.0) : values_(dimension, fill) {}
  explicit ModelParams(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t dimension() const { return values_.size(); }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  const std::vector<double>& vector() const { return values_; }

  bool all_finite() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  std::vector<double> values_;
};

inline std::size_t model_dimension(int num_features, int num_classes) {
  return static_cast<std::size_t>(num_features + 1) * static_cast<std::size_t>(num_classes);
}

/// Row-major feature matrix with integer labels.
struct Dataset {
  int num_features = 0;
  int num_classes = 0;
  std::vector<double> features;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * static_cast<std::size_t>(num_features),
            static_cast<std::size_t>(num_features)};
  }
  /// S(D_k): one byte per feature; labels are not counted.
  std::int64_t size_bits() const {
    return static_cast<std::int64_t>(size()) * num_features * 8;
  }
  void push_back(std::span<const double> x, int label);
};

struct LearnerConfig {
  double learning_rate = 0.05;
  int local_iterations = 1;
  double cycles_per_sample = 1e3;
  double cpu_hz = 1e9;
  /// Scales the per-phase compute time (1 = charged once per computation phase).
  double compute_multiplier = 1.0;

  friend bool operator==(const LearnerConfig&, const LearnerConfig&) = default;
};

double local_loss(const ModelParams& params, const Dataset& data);
ModelParams local_gradient(const ModelParams& params, const Dataset& data);
/// local_iterations full-batch gradient steps. Throws NumericDivergence on non-finite values.
ModelParams local_gd(ModelParams params, const Dataset& data, const LearnerConfig& config);
double compute_time(const Dataset& data, const LearnerConfig& config);

/// D_k * own + sum(incoming); incoming is summed in the order given.
ModelParams partial_aggregate(const ModelParams& own, std::int64_t own_samples,
                              std::span<const ModelParams> incoming);
/// sum(partials) / total_samples.
ModelParams global_aggregate(std::span<const ModelParams> partials, std::int64_t total_samples);

struct Evaluation {
  double accuracy = 0;
  double loss = 0;
};

/// Argmax accuracy (ties go to the lowest class index) and mean cross-entropy.
Evaluation evaluate(const ModelParams& params, const Dataset& test);

struct LabelGroup {
  std::vector<int> labels;
  int first_worker = 0;
  int num_workers = 0;
};

struct PartitionScheme {
  enum class Kind { iid, label_split };
  Kind kind = Kind::iid;
  std::vector<LabelGroup> groups;  // label_split only
  std::uint64_t seed = 0;          // iid shuffle
};

/// Classes split in halves over worker halves, e.g. labels 0-4 to workers 0-19
/// and 5-9 to workers 20-39.
PartitionScheme half_label_split(int num_workers, int num_classes);

/// Throws PartitionError if any worker would be left empty.
std::vector<Dataset> partition_dataset(const Dataset& pool, int num_workers,
                                       const PartitionScheme& scheme);

/// IDX (MNIST) reader: big-endian magic 0x00000803 / 0x00000801, features scaled to [0, 1].
/// Throws ParseError on bad magic, truncation or count mismatch.
Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 int num_classes = 10, std::size_t max_samples = 0);

struct SyntheticSpec {
  double separation = 2.0;  // norm of each class mean
  double noise = 0.5;       // per-feature standard deviation
  int nuisance_dims = 8;    // shared random unit directions
  double nuisance = 5.0;    // standard deviation along each nuisance direction
};

/// Gaussian class clusters plus a few high-variance directions shared by all
/// classes, which makes the problem ill-conditioned so gradient descent
/// improves over many steps. Class means and nuisance directions depend only on `seed`; `stream`
/// selects an independent draw of samples around the same means. Labels are
/// exactly balanced (class c appears floor or ceil of num_samples/num_classes
/// times) and the pool order is shuffled.
Dataset synthetic_pool(std::size_t num_samples, int num_features, int num_classes,
                       std::uint64_t seed, std::uint64_t stream = 0, const SyntheticSpec& spec = {});

}  // namespace orbitfl::learning
