#include "routefed/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "routefed/csv.hpp"
#include "routefed/error.hpp"

namespace routefed {
namespace {

struct Fnv {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= c[i];
      h *= 0x100000001b3ULL;
    }
  }
  void str(const std::string& s) {
    bytes(s.data(), s.size());
    bytes("\0", 1);
  }
  void u64(std::uint64_t v) { bytes(&v, sizeof v); }
  void f64(double v) {
    if (std::isnan(v)) v = std::numeric_limits<double>::quiet_NaN();
    bytes(&v, sizeof v);
  }
};

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

std::string fingerprint(const ExperimentConfig& c, const FeatureSelection& sel,
                        const WindowSpec& w, std::uint64_t data_hash) {
  std::ostringstream s;
  s << "features=" << sel.to_string() << ";in=" << w.input_size << ";interval=" << w.n_day_interval
    << ";out=" << w.output_size << ";seed=" << c.seed << ";epochs=" << c.train.epochs
    << ";batch=" << c.train.batch_size << ";lr=" << csv::format_double(c.train.learning_rate)
    << ";hidden=" << c.lstm_hidden << ";kernel=" << c.conv_kernel_time
    << ";split=" << c.split.train_days << '/' << c.split.val_days << '/' << c.split.test_days
    << ";data=" << hex16(data_hash);
  Fnv f;
  f.str(s.str());
  return hex16(f.h);
}

struct Cell {
  FeatureSelection selection;
  WindowSpec window;
};

ResultRow run_cell(const Dataset& normalized, const NormalizerState& normalizer,
                   const ExperimentConfig& config, const Cell& cell, std::uint64_t data_hash) {
  ResultRow row;
  row.selection = cell.selection;
  row.window = cell.window;
  row.fingerprint = fingerprint(config, cell.selection, cell.window, data_hash);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    auto parts = split_samples(normalized, cell.window, cell.selection, config.split);
    row.n_train = parts.train.size();
    row.n_val = parts.val.size();
    row.n_test = parts.test.size();
    TrainConfig tc = config.train;
    tc.seed = config.seed;
    const auto model_config = make_model_config(normalized, cell.window, cell.selection,
                                                config.lstm_hidden, config.conv_kernel_time);
    const auto result = train(model_config, parts.train, parts.val, normalizer, tc);
    const auto eval = evaluate(result.model, parts.test, normalizer);
    row.mae = eval.mae;
    row.segment_mae = eval.segment_mae;
    row.best_epoch = result.best_epoch;
    row.ok = true;
  } catch (const Error& e) {
    row.error = std::string(to_string(e.code())) + ": " + e.what();
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  row.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

ResultTable run_cells(const Dataset& dataset, const ExperimentConfig& config,
                      const std::vector<Cell>& cells) {
  config.validate();
  if (config.split.train_days + config.split.val_days + config.split.test_days > dataset.n_days) {
    throw Error(ErrorCode::kSpanTooShort, "split covers more days than the dataset holds");
  }
  const auto normalizer = fit_split_normalizer(dataset, config.split);
  const Dataset normalized = apply_normalizer(dataset, normalizer);
  const std::uint64_t data_hash = dataset_hash(dataset);

  std::vector<ResultRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      rows[i] = run_cell(normalized, normalizer, config, cells[i], data_hash);
    }
  };
  const std::size_t n_threads =
      std::min<std::size_t>(cells.size(), static_cast<std::size_t>(std::max(1, config.jobs)));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    if (a.ok != b.ok) return a.ok;
    if (a.ok && a.mae != b.mae) return a.mae < b.mae;
    return a.fingerprint < b.fingerprint;
  });
  ResultTable table;
  table.segment_ids = dataset.segment_ids;
  table.rows = std::move(rows);
  return table;
}

nlohmann::ordered_json window_json(const WindowSpec& w) {
  return {{"input_size", w.input_size},
          {"n_day_interval", w.n_day_interval},
          {"output_size", w.output_size}};
}

}  // namespace

void SplitSpec::validate() const {
  if (train_days <= 0 || test_days <= 0 || val_days < 0) {
    throw Error(ErrorCode::kInvalidConfig, "split needs train_days > 0, test_days > 0, val_days >= 0");
  }
}

void ExperimentConfig::validate() const {
  split.validate();
  window.validate();
  if (feature_sets.empty()) throw Error(ErrorCode::kInvalidConfig, "no feature sets");
  if (train.epochs <= 0 || train.batch_size == 0 || !(train.learning_rate > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "bad training budget");
  }
  if (lstm_hidden == 0) throw Error(ErrorCode::kInvalidConfig, "lstm_hidden must be > 0");
  if (conv_kernel_time <= 0 || conv_kernel_time % 2 == 0) {
    throw Error(ErrorCode::kInvalidConfig, "conv_kernel_time must be odd and positive");
  }
}

std::vector<FeatureSelection> standard_ablation_preset() {
  return {FeatureSelection::parse("traffic,time,search,search_unspec"),
          FeatureSelection::parse("traffic,time,search"),
          FeatureSelection::parse("traffic,time,search_unspec"),
          FeatureSelection::parse("traffic,search,search_unspec")};
}

ExperimentConfig experiment_from_json(const std::string& text) {
  ExperimentConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    c.seed = j.value("seed", c.seed);
    if (j.contains("features")) {
      c.feature_sets.clear();
      const auto& f = j.at("features");
      if (f.is_string() && f.get<std::string>() == "preset") {
        c.feature_sets = standard_ablation_preset();
      } else {
        for (const auto& s : f) c.feature_sets.push_back(FeatureSelection::parse(s.get<std::string>()));
      }
    }
    if (j.contains("window")) {
      const auto& w = j.at("window");
      c.window.input_size = w.value("input_size", c.window.input_size);
      c.window.n_day_interval = w.value("n_day_interval", c.window.n_day_interval);
      c.window.output_size = w.value("output_size", c.window.output_size);
    }
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      if (g.contains("input_sizes")) c.input_sizes = g.at("input_sizes").get<std::vector<int>>();
      if (g.contains("n_day_intervals")) {
        c.n_day_intervals = g.at("n_day_intervals").get<std::vector<int>>();
      }
    }
    if (j.contains("split")) {
      const auto& s = j.at("split");
      c.split.train_days = s.value("train_days", 0);
      c.split.val_days = s.value("val_days", 0);
      c.split.test_days = s.value("test_days", 0);
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      c.train.epochs = t.value("epochs", c.train.epochs);
      c.train.batch_size = t.value("batch_size", c.train.batch_size);
      c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
    }
    if (j.contains("model")) {
      const auto& m = j.at("model");
      c.lstm_hidden = m.value("lstm_hidden", c.lstm_hidden);
      c.conv_kernel_time = m.value("conv_kernel_time", c.conv_kernel_time);
    }
    c.jobs = j.value("jobs", c.jobs);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("experiment config: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("experiment config: ") + e.what());
  }
  c.train.seed = c.seed;
  c.validate();
  return c;
}

std::string experiment_to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  auto features = nlohmann::ordered_json::array();
  for (const auto& f : c.feature_sets) features.push_back(f.to_string());
  j["features"] = features;
  j["window"] = window_json(c.window);
  j["grid"] = {{"input_sizes", c.input_sizes}, {"n_day_intervals", c.n_day_intervals}};
  j["split"] = {{"train_days", c.split.train_days},
                {"val_days", c.split.val_days},
                {"test_days", c.split.test_days}};
  j["train"] = {{"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"learning_rate", c.train.learning_rate}};
  j["model"] = {{"lstm_hidden", c.lstm_hidden}, {"conv_kernel_time", c.conv_kernel_time}};
  j["jobs"] = c.jobs;
  return j.dump(2) + "\n";
}

SplitSamples split_samples(const Dataset& normalized, const WindowSpec& window,
                           const FeatureSelection& selection, const SplitSpec& split) {
  split.validate();
  SplitSamples out;
  out.stats = build_windows(normalized, window, selection);
  const int val_begin = split.train_days;
  const int test_begin = val_begin + split.val_days;
  const int test_end = test_begin + split.test_days;
  for (auto& s : out.stats.samples) {
    if (s.target_day < val_begin) {
      out.train.push_back(std::move(s));
    } else if (s.target_day < test_begin) {
      out.val.push_back(std::move(s));
    } else if (s.target_day < test_end) {
      out.test.push_back(std::move(s));
    }
  }
  out.stats.samples.clear();
  if (out.train.empty()) throw Error(ErrorCode::kSpanTooShort, "no training samples for this window");
  if (out.test.empty()) throw Error(ErrorCode::kSpanTooShort, "no test samples for this window");
  return out;
}

NormalizerState fit_split_normalizer(const Dataset& dataset, const SplitSpec& split) {
  split.validate();
  return fit_normalizer(dataset, dataset.start + static_cast<EpochMinutes>(split.train_days) *
                                                      kMinutesPerDay);
}

std::uint64_t dataset_hash(const Dataset& ds) {
  Fnv f;
  for (const auto& id : ds.segment_ids) f.str(id);
  f.u64(static_cast<std::uint64_t>(ds.start));
  f.u64(static_cast<std::uint64_t>(ds.n_days));
  f.u64(static_cast<std::uint64_t>(ds.input_step));
  f.u64(static_cast<std::uint64_t>(ds.output_step));
  for (const auto& g : ds.groups) {
    f.str(std::string(to_string(g.name)));
    f.u64(static_cast<std::uint64_t>(g.start));
    f.u64(static_cast<std::uint64_t>(g.step_minutes));
    for (const auto& n : g.feature_names) f.str(n);
    f.u64(g.data.segments);
    f.u64(g.data.time);
    f.u64(g.data.features);
    for (const double v : g.data.data) f.f64(v);
  }
  f.u64(static_cast<std::uint64_t>(ds.target_grid.start));
  f.u64(static_cast<std::uint64_t>(ds.target_grid.step_minutes));
  f.u64(ds.target_grid.len);
  for (const double v : ds.target) f.f64(v);
  return f.h;
}

ResultTable run_ablation(const Dataset& dataset, const ExperimentConfig& config) {
  std::vector<Cell> cells;
  for (const auto& sel : config.feature_sets) cells.push_back({sel, config.window});
  return run_cells(dataset, config, cells);
}

ResultTable run_grid(const Dataset& dataset, const ExperimentConfig& config) {
  if (config.input_sizes.empty() || config.n_day_intervals.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "grid needs input sizes and day intervals");
  }
  std::vector<Cell> cells;
  for (const int in : config.input_sizes) {
    for (const int gap : config.n_day_intervals) {
      cells.push_back({config.feature_sets.front(), {in, gap, config.window.output_size}});
    }
  }
  return run_cells(dataset, config, cells);
}

void write_results_csv(std::ostream& out, const ResultTable& table) {
  out << "rank,fingerprint,features,input_size,n_day_interval,output_size,status,mae,best_epoch,"
         "n_train,n_val,n_test,error\n";
  std::size_t rank = 0;
  for (const auto& r : table.rows) {
    ++rank;
    out << rank << ',' << r.fingerprint << ',' << csv::escape(r.selection.to_string()) << ','
        << r.window.input_size << ',' << r.window.n_day_interval << ',' << r.window.output_size
        << ',' << (r.ok ? "ok" : "failed") << ',' << (r.ok ? csv::format_double(r.mae) : "NA")
        << ',' << r.best_epoch << ',' << r.n_train << ',' << r.n_val << ',' << r.n_test << ','
        << csv::escape(r.error) << '\n';
  }
}

void write_results_text(std::ostream& out, const ResultTable& table) {
  out << std::left << std::setw(5) << "rank" << std::setw(18) << "fingerprint" << std::setw(38)
      << "features" << std::setw(9) << "in_size" << std::setw(10) << "interval" << std::setw(9)
      << "out_size" << "MAE(km/h)\n";
  std::size_t rank = 0;
  for (const auto& r : table.rows) {
    ++rank;
    std::ostringstream mae;
    if (r.ok) {
      mae << std::fixed << std::setprecision(4) << r.mae;
    } else {
      mae << "failed (" << r.error << ")";
    }
    out << std::left << std::setw(5) << rank << std::setw(18) << r.fingerprint << std::setw(38)
        << r.selection.to_string() << std::setw(9) << r.window.input_size << std::setw(10)
        << r.window.n_day_interval << std::setw(9) << r.window.output_size << mae.str() << '\n';
  }
}

void write_result_table(const ResultTable& table, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto open = [&dir](const char* name) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + (fs::path(dir) / name).string());
    return out;
  };
  {
    auto out = open("results.csv");
    write_results_csv(out, table);
  }
  {
    auto out = open("results.txt");
    write_results_text(out, table);
  }
  {
    auto out = open("segment_mae.csv");
    out << "fingerprint,segment_id,mae\n";
    for (const auto& r : table.rows) {
      for (std::size_t k = 0; k < r.segment_mae.size() && k < table.segment_ids.size(); ++k) {
        out << r.fingerprint << ',' << table.segment_ids[k] << ','
            << csv::format_double(r.segment_mae[k]) << '\n';
      }
    }
  }
  {
    auto out = open("timings.csv");
    out << "fingerprint,runtime_seconds\n";
    for (const auto& r : table.rows) {
      out << r.fingerprint << ',' << csv::format_double(r.runtime_seconds) << '\n';
    }
  }
}

}  // namespace routefed
