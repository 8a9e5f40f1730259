#include "orbitfl/learning.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>

#include "orbitfl/errors.hpp"
#include "orbitfl/rng.hpp"

namespace orbitfl::learning {

namespace {

void check_dimensions(const ModelParams& params, const Dataset& data) {
  if (data.num_features < 1 || data.num_classes < 1)
    throw DomainError("dataset has no features or classes");
  if (params.dimension() != model_dimension(data.num_features, data.num_classes))
    throw DomainError("parameter dimension " + std::to_string(params.dimension()) +
                      " does not match dataset (" + std::to_string(data.num_features) +
                      " features, " + std::to_string(data.num_classes) + " classes)");
  if (data.features.size() != data.size() * static_cast<std::size_t>(data.num_features))
    throw DomainError("feature matrix size does not match label count");
}

// Per-class affine scores for one sample.
void scores(const ModelParams& w, std::span<const double> x, int classes, std::vector<double>& out) {
  const std::size_t stride = x.size() + 1;
  out.resize(classes);
  for (int c = 0; c < classes; ++c) {
    const double* row = w.values().data() + c * stride;
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t j = 0;
    for (; j + 4 <= x.size(); j += 4)
      for (int k = 0; k < 4; ++k) acc[k] += row[j + k] * x[j + k];
    double s = row[x.size()] + ((acc[0] + acc[1]) + (acc[2] + acc[3]));
    for (; j < x.size(); ++j) s += row[j] * x[j];
    out[c] = s;
  }
}

// In-place softmax; returns log-sum-exp of the input.
double softmax(std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return m + std::log(sum);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t off) {
  return (std::uint32_t{buf[off]} << 24) | (std::uint32_t{buf[off + 1]} << 16) |
         (std::uint32_t{buf[off + 2]} << 8) | std::uint32_t{buf[off + 3]};
}

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

bool ModelParams::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void Dataset::push_back(std::span<const double> x, int label) {
  features.insert(features.end(), x.begin(), x.end());
  labels.push_back(label);
}

double local_loss(const ModelParams& params, const Dataset& data) {
  check_dimensions(params, data);
  if (data.size() == 0) throw DomainError("empty dataset");
  std::vector<double> z;
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    scores(params, data.row(i), data.num_classes, z);
    const double correct = z[data.labels[i]];
    total += softmax(z) - correct;
  }
  return total / static_cast<double>(data.size());
}

ModelParams local_gradient(const ModelParams& params, const Dataset& data) {
  check_dimensions(params, data);
  if (data.size() == 0) throw DomainError("empty dataset");
  const std::size_t f = data.num_features;
  const std::size_t stride = f + 1;
  ModelParams grad(params.dimension());
  std::vector<double> p;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto x = data.row(i);
    scores(params, x, data.num_classes, p);
    softmax(p);
    p[data.labels[i]] -= 1.0;
    for (int c = 0; c < data.num_classes; ++c) {
      double* g = grad.values().data() + c * stride;
      const double e = p[c];
      for (std::size_t j = 0; j < f; ++j) g[j] += e * x[j];
      g[f] += e;
    }
  }
  const double inv = 1.0 / static_cast<double>(data.size());
  for (double& v : grad.values()) v *= inv;
  return grad;
}

ModelParams local_gd(ModelParams params, const Dataset& data, const LearnerConfig& config) {
  if (config.local_iterations < 1) throw DomainError("local_iterations must be >= 1");
  for (int it = 0; it < config.local_iterations; ++it) {
    const ModelParams grad = local_gradient(params, data);
    for (std::size_t i = 0; i < params.dimension(); ++i)
      params[i] -= config.learning_rate * grad[i];
    if (!params.all_finite())
      throw NumericDivergence("gradient descent diverged at local iteration " + std::to_string(it + 1));
  }
  return params;
}

double compute_time(const Dataset& data, const LearnerConfig& config) {
  return config.compute_multiplier * config.cycles_per_sample *
         static_cast<double>(data.size_bits()) / config.cpu_hz;
}

ModelParams partial_aggregate(const ModelParams& own, std::int64_t own_samples,
                              std::span<const ModelParams> incoming) {
  ModelParams out(own.dimension());
  const double w = static_cast<double>(own_samples);
  for (std::size_t i = 0; i < own.dimension(); ++i) out[i] = w * own[i];
  for (const auto& in : incoming) {
    if (in.dimension() != own.dimension()) throw DomainError("partial aggregate dimension mismatch");
    for (std::size_t i = 0; i < out.dimension(); ++i) out[i] += in[i];
  }
  return out;
}

ModelParams global_aggregate(std::span<const ModelParams> partials, std::int64_t total_samples) {
  if (total_samples <= 0) throw DomainError("global aggregate needs a positive sample count");
  if (partials.empty()) throw DomainError("global aggregate needs at least one partial");
  ModelParams sum(partials.front().dimension());
  for (const auto& p : partials) {
    if (p.dimension() != sum.dimension()) throw DomainError("global aggregate dimension mismatch");
    for (std::size_t i = 0; i < sum.dimension(); ++i) sum[i] += p[i];
  }
  const double d = static_cast<double>(total_samples);
  for (double& v : sum.values()) v /= d;
  return sum;
}

Evaluation evaluate(const ModelParams& params, const Dataset& test) {
  if (test.size() == 0) throw DomainError("empty test set");
  check_dimensions(params, test);
  std::vector<double> z;
  std::size_t correct = 0;
  double loss = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    scores(params, test.row(i), test.num_classes, z);
    const auto best = std::max_element(z.begin(), z.end()) - z.begin();  // first max wins
    if (best == test.labels[i]) ++correct;
    const double truth = z[test.labels[i]];
    loss += softmax(z) - truth;
  }
  const double n = static_cast<double>(test.size());
  return {static_cast<double>(correct) / n, loss / n};
}

PartitionScheme half_label_split(int num_workers, int num_classes) {
  PartitionScheme s;
  s.kind = PartitionScheme::Kind::label_split;
  const int half_workers = num_workers / 2;
  const int half_classes = num_classes / 2;
  LabelGroup low, high;
  for (int c = 0; c < num_classes; ++c) (c < half_classes ? low : high).labels.push_back(c);
  low.first_worker = 0;
  low.num_workers = half_workers;
  high.first_worker = half_workers;
  high.num_workers = num_workers - half_workers;
  s.groups = {low, high};
  return s;
}

std::vector<Dataset> partition_dataset(const Dataset& pool, int num_workers,
                                       const PartitionScheme& scheme) {
  if (pool.size() == 0) throw PartitionError("cannot partition an empty pool");
  if (num_workers < 1) throw PartitionError("need at least one worker");
  std::vector<Dataset> out(num_workers);
  for (auto& d : out) {
    d.num_features = pool.num_features;
    d.num_classes = pool.num_classes;
  }

  if (scheme.kind == PartitionScheme::Kind::iid) {
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(scheme.seed);
    rng.shuffle(order);
    for (std::size_t i = 0; i < order.size(); ++i)
      out[i % num_workers].push_back(pool.row(order[i]), pool.labels[order[i]]);
  } else {
    for (const auto& g : scheme.groups) {
      if (g.num_workers < 1 || g.first_worker < 0 || g.first_worker + g.num_workers > num_workers)
        throw PartitionError("label group addresses workers outside [0, " +
                             std::to_string(num_workers) + ")");
      std::size_t dealt = 0;
      for (std::size_t i = 0; i < pool.size(); ++i) {
        if (std::find(g.labels.begin(), g.labels.end(), pool.labels[i]) == g.labels.end()) continue;
        out[g.first_worker + dealt % g.num_workers].push_back(pool.row(i), pool.labels[i]);
        ++dealt;
      }
    }
  }

  for (int w = 0; w < num_workers; ++w)
    if (out[w].size() == 0)
      throw PartitionError("worker " + std::to_string(w) + " would receive no samples");
  return out;
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path, int num_classes,
                 std::size_t max_samples) {
  const auto img = read_file(images_path);
  const auto lab = read_file(labels_path);
  if (img.size() < 16) throw ParseError(images_path + ": truncated IDX header");
  if (lab.size() < 8) throw ParseError(labels_path + ": truncated IDX header");
  if (read_be32(img, 0) != 0x00000803u) throw ParseError(images_path + ": bad magic, expected 0x00000803");
  if (read_be32(lab, 0) != 0x00000801u) throw ParseError(labels_path + ": bad magic, expected 0x00000801");

  const std::size_t n_img = read_be32(img, 4);
  const std::size_t rows = read_be32(img, 8);
  const std::size_t cols = read_be32(img, 12);
  const std::size_t n_lab = read_be32(lab, 4);
  if (n_img != n_lab)
    throw ParseError("image count " + std::to_string(n_img) + " != label count " + std::to_string(n_lab));
  const std::size_t pixels = rows * cols;
  if (img.size() < 16 + n_img * pixels) throw ParseError(images_path + ": truncated image data");
  if (lab.size() < 8 + n_lab) throw ParseError(labels_path + ": truncated label data");

  const std::size_t n = max_samples > 0 ? std::min(max_samples, n_img) : n_img;
  Dataset d;
  d.num_features = static_cast<int>(pixels);
  d.num_classes = num_classes;
  d.features.resize(n * pixels);
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = lab[8 + i];
    if (label >= num_classes)
      throw ParseError(labels_path + ": label " + std::to_string(label) + " out of range");
    d.labels[i] = label;
    for (std::size_t j = 0; j < pixels; ++j)
      d.features[i * pixels + j] = static_cast<double>(img[16 + i * pixels + j]) / 255.0;
  }
  return d;
}

Dataset synthetic_pool(std::size_t num_samples, int num_features, int num_classes,
                       std::uint64_t seed, std::uint64_t stream, const SyntheticSpec& spec) {
  if (num_samples < 1 || num_features < 1 || num_classes < 1)
    throw DomainError("synthetic pool needs positive sample, feature and class counts");
  Rng mean_rng(mix(seed, 0));
  std::vector<double> means(static_cast<std::size_t>(num_classes) * num_features);
  const double scale = spec.separation / std::sqrt(static_cast<double>(num_features));
  for (double& m : means) m = scale * mean_rng.normal();
  const auto dims = static_cast<std::size_t>(std::max(spec.nuisance_dims, 0));
  std::vector<double> dirs(dims * num_features);
  for (std::size_t k = 0; k < dims; ++k) {
    double* e = dirs.data() + k * num_features;
    double norm = 0;
    for (int j = 0; j < num_features; ++j) {
      e[j] = mean_rng.normal();
      norm += e[j] * e[j];
    }
    norm = std::sqrt(norm);
    for (int j = 0; j < num_features; ++j) e[j] /= norm;
  }

  Rng rng(mix(seed, stream + 1));
  std::vector<int> labels(num_samples);
  for (std::size_t i = 0; i < num_samples; ++i) labels[i] = static_cast<int>(i % num_classes);
  rng.shuffle(labels);

  Dataset d;
  d.num_features = num_features;
  d.num_classes = num_classes;
  d.labels = labels;
  d.features.resize(num_samples * num_features);
  for (std::size_t i = 0; i < num_samples; ++i) {
    const double* mu = means.data() + static_cast<std::size_t>(labels[i]) * num_features;
    double* x = d.features.data() + i * num_features;
    for (int j = 0; j < num_features; ++j) x[j] = mu[j] + spec.noise * rng.normal();
    for (std::size_t k = 0; k < dims; ++k) {
      const double z = spec.nuisance * rng.normal();
      const double* e = dirs.data() + k * num_features;
      for (int j = 0; j < num_features; ++j) x[j] += z * e[j];
    }
  }
  return d;
}

}  // namespace orbitfl::learning
