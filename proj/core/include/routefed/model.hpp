#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "routefed/features.hpp"
#include "routefed/tensor.hpp"

namespace routefed {

// How one input group enters the network. Convolved groups are compressed
// to a single channel by a feature-wise convolution and then max-pooled
// with stride R; pass-through groups (calendar) are max-pooled channel by
// channel; the static group is broadcast over the pooled time axis.
struct GroupSpec {
  GroupName name = GroupName::kTraffic;
  std::size_t n_features = 0;
  std::size_t time_len = 0;  // buckets at the group's own step (1 for static)
  int ratio = 1;             // R = output step / group step
  bool convolve = true;

  bool operator==(const GroupSpec&) const = default;
};

struct ModelConfig {
  std::size_t segments = 0;     // K
  std::size_t train_days = 0;   // L, recorded for provenance
  std::vector<GroupSpec> groups;
  std::size_t pooled_len = 0;   // T', common length after pooling
  int conv_kernel_time = 3;     // odd
  int conv_out_channels = 1;    // fixed
  std::size_t lstm_hidden = 64;
  std::size_t output_size = 24;

  // LSTM input width: one channel per convolved group plus every feature
  // of pass-through and static groups.
  std::size_t lstm_input() const;
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// Derives the per-group layout from a dataset and a window shape.
ModelConfig make_model_config(const Dataset& dataset, const WindowSpec& window,
                              const FeatureSelection& selection, std::size_t lstm_hidden = 64,
                              int conv_kernel_time = 3);

struct TrainConfig {
  std::uint64_t seed = 1100;
  int epochs = 50;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// ---------------------------------------------------------------- layers

// Feature-wise convolution with a `weights.size() / F`-wide odd time kernel,
// zero padded in time. weights are laid out [feature][tap]. Output is
// segments x T x 1.
Tensor3 conv_forward(const Tensor3& x, std::span<const double> weights, double bias);

// Stride-R max over time per segment and channel; the trailing T mod R
// buckets are dropped. Throws kRTooLarge if T < R.
Tensor3 maxpool_time(const Tensor3& x, int ratio);

struct LstmWeights {
  std::size_t input = 0;
  std::size_t hidden = 0;
  std::span<const double> w;  // 4H x input, gate order i, f, g, o
  std::span<const double> u;  // 4H x hidden
  std::span<const double> b;  // 4H
};

struct LstmOutput {
  std::vector<double> hidden_seq;  // T x H
  std::vector<double> final_hidden;
};

// Single sequence (T x input), zero initial state.
LstmOutput lstm_forward(std::span<const double> sequence, std::size_t steps,
                        const LstmWeights& weights);

// ---------------------------------------------------------------- model

// Offsets of each parameter block inside the flat parameter vector.
struct ParamLayout {
  struct Conv {
    std::size_t weights = 0;  // n_features * kernel
    std::size_t bias = 0;
  };
  std::vector<Conv> conv;     // one per group spec; unused for non-convolved
  std::size_t lstm_w = 0, lstm_u = 0, lstm_b = 0;
  std::size_t head_w = 0, head_b = 0;
  std::size_t total = 0;

  explicit ParamLayout(const ModelConfig& config);
  ParamLayout() = default;
};

class ForecastModel {
 public:
  ForecastModel() = default;
  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization from `seed`.
  ForecastModel(ModelConfig config, std::uint64_t seed);
  ForecastModel(ModelConfig config, std::vector<double> params);

  const ModelConfig& config() const { return config_; }
  const ParamLayout& layout() const { return layout_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  // Normalized prediction, segments x output_size row-major.
  std::vector<double> forward(const Sample& sample) const;

  // Mean over the batch of each sample's mean squared error; `grad` is
  // resized and overwritten with d loss / d params.
  double loss_and_gradient(std::span<const Sample* const> batch,
                           std::vector<double>& grad) const;
  double loss(std::span<const Sample* const> batch) const;

  void check_sample(const Sample& sample) const;

 private:
  struct Cache;
  std::vector<double> forward_cached(const Sample& sample, Cache* cache) const;
  void backward(const Sample& sample, const Cache& cache, std::span<const double> dy,
                std::vector<double>& grad) const;

  ModelConfig config_;
  ParamLayout layout_;
  std::vector<double> params_;
};

// Adaptive moment estimation over a flat parameter vector.
class Adam {
 public:
  Adam(std::size_t n, const TrainConfig& config);
  void step(std::vector<double>& params, const std::vector<double>& grad);

 private:
  double lr_, beta1_, beta2_, eps_;
  std::vector<double> m_, v_;
  std::int64_t t_ = 0;
};

// ---------------------------------------------------------------- training

struct EvalResult {
  double mae = 0.0;                  // km/h
  std::vector<double> segment_mae;   // km/h per segment
  std::size_t samples = 0;
};

// Arithmetic mean of |y_hat - y|. kEmptyInput on empty, kShapeMismatch on
// different lengths.
double mae(std::span<const double> y, std::span<const double> y_hat);

// De-normalizes predictions and targets before measuring.
EvalResult evaluate(const ForecastModel& model, const std::vector<Sample>& samples,
                    const NormalizerState& normalizer);

struct TrainResult {
  ForecastModel model;               // parameters of the best epoch
  std::vector<double> epoch_loss;    // mean pre-step batch loss per epoch
  std::vector<double> val_mae;       // per epoch, empty without validation
  int best_epoch = 0;                // 0-based
  double initial_loss = 0.0;         // training-set loss before any update
  double final_loss = 0.0;           // training-set loss of the last epoch's params
};

// Single-threaded; identical inputs and seed give bit-identical results.
// With validation samples the epoch with the lowest validation MAE is kept,
// otherwise the last. Throws kNonFiniteLoss if the loss diverges.
TrainResult train(const ModelConfig& config, const std::vector<Sample>& train_samples,
                  const std::vector<Sample>& val_samples, const NormalizerState& normalizer,
                  const TrainConfig& train_config);

// ---------------------------------------------------------------- checkpoints

struct Checkpoint {
  ForecastModel model;
  TrainConfig train_config;
  NormalizerState normalizer;
  WindowSpec window;
  FeatureSelection selection;
};

std::string checkpoint_to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const std::string& text);
void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace routefed
