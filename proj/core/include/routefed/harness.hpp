#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "routefed/features.hpp"
#include "routefed/model.hpp"

namespace routefed {

// Day ranges counted from the dataset start; a sample belongs to the range
// holding its target day. Ranges are consecutive: train, validation, test.
struct SplitSpec {
  int train_days = 0;
  int val_days = 0;
  int test_days = 0;

  void validate() const;
  bool operator==(const SplitSpec&) const = default;
};

struct ExperimentConfig {
  std::uint64_t seed = 1100;
  std::vector<FeatureSelection> feature_sets{FeatureSelection::all()};
  WindowSpec window;                     // ablation window
  std::vector<int> input_sizes{24 * 12, 168 * 12};
  std::vector<int> n_day_intervals{0, 6};
  SplitSpec split;
  TrainConfig train;
  std::size_t lstm_hidden = 64;
  int conv_kernel_time = 3;
  int jobs = 1;                          // cells trained concurrently

  void validate() const;
};

// Everything, then one row per optional group left out.
std::vector<FeatureSelection> standard_ablation_preset();

ExperimentConfig experiment_from_json(const std::string& text);
std::string experiment_to_json(const ExperimentConfig& config);

struct SplitSamples {
  std::vector<Sample> train, val, test;
  WindowSet stats;  // anchor and drop counts; samples moved out
};

// Windows of an already normalized dataset, split by target day. Throws
// kSpanTooShort if the training or test part ends up empty.
SplitSamples split_samples(const Dataset& normalized, const WindowSpec& window,
                           const FeatureSelection& selection, const SplitSpec& split);

// Normalizer fitted on the training days only.
NormalizerState fit_split_normalizer(const Dataset& dataset, const SplitSpec& split);

// FNV-1a over every value and shape of the dataset.
std::uint64_t dataset_hash(const Dataset& dataset);

struct ResultRow {
  std::string fingerprint;
  FeatureSelection selection;
  WindowSpec window;
  bool ok = false;
  std::string error;
  double mae = 0.0;
  std::vector<double> segment_mae;
  double runtime_seconds = 0.0;
  int best_epoch = 0;
  std::size_t n_train = 0, n_val = 0, n_test = 0;
};

struct ResultTable {
  std::vector<std::string> segment_ids;
  std::vector<ResultRow> rows;  // ascending MAE, failed rows last
};

// One model per feature set, all sharing the split, seed, normalizer and
// epoch budget. Failures are recorded per row.
ResultTable run_ablation(const Dataset& dataset, const ExperimentConfig& config);

// One model per (input size, day interval) cell with the first feature set.
ResultTable run_grid(const Dataset& dataset, const ExperimentConfig& config);

// results.csv (no timings, so reruns compare byte for byte), timings.csv,
// segment_mae.csv and results.txt.
void write_result_table(const ResultTable& table, const std::string& dir);
void write_results_csv(std::ostream& out, const ResultTable& table);
void write_results_text(std::ostream& out, const ResultTable& table);

}  // namespace routefed
