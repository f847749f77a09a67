// routefed command-line tool. Every subcommand works inside one data
// directory (--data-dir, or $FRTP_DATA_DIR):
//
//   raw/        synth output or user-supplied logs, network and holidays
//   ingest/     validated logs plus reject reports
//   federated/  search count series
//   features/   assembled dataset with its normalizer
//   model/      checkpoint and training log
//   results/    predictions, evaluation, ablation and grid tables
//   analysis/   correlation matrix and day-type summaries

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "routefed/analysis.hpp"
#include "routefed/csv.hpp"
#include "routefed/error.hpp"
#include "routefed/features.hpp"
#include "routefed/federate.hpp"
#include "routefed/harness.hpp"
#include "routefed/ingestion.hpp"
#include "routefed/model.hpp"
#include "routefed/network.hpp"
#include "routefed/synthlab.hpp"

namespace fs = std::filesystem;
using namespace routefed;
using json = nlohmann::ordered_json;

namespace {

struct Paths {
  fs::path root;
  fs::path raw() const { return root / "raw"; }
  fs::path ingest() const { return root / "ingest"; }
  fs::path federated() const { return root / "federated"; }
  fs::path features() const { return root / "features"; }
  fs::path model() const { return root / "model"; }
  fs::path results() const { return root / "results"; }
  fs::path analysis() const { return root / "analysis"; }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::ofstream open_out(const fs::path& p) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + p.string());
  return out;
}

void write_json(const fs::path& p, const json& j) { open_out(p) << j.dump(2) << '\n'; }

RoadGraph load_network(const Paths& paths) {
  return load_graph((paths.raw() / "ics.csv").string(), (paths.raw() / "network.csv").string());
}

HolidayCalendar load_holidays(const Paths& paths) {
  const auto p = paths.raw() / "holidays.csv";
  return fs::exists(p) ? load_holiday_calendar(p.string()) : HolidayCalendar{};
}

struct Span {
  EpochMinutes start = 0;
  int n_days = 0;
};

// Whole days covered by the traffic log.
Span traffic_span(const std::vector<TrafficRecord>& traffic) {
  if (traffic.empty()) throw Error(ErrorCode::kEmptyInput, "traffic log has no records");
  EpochMinutes lo = traffic.front().timestamp, hi = lo;
  for (const auto& r : traffic) {
    lo = std::min(lo, r.timestamp);
    hi = std::max(hi, r.timestamp);
  }
  const std::int64_t first = day_index(lo);
  return {first * kMinutesPerDay, static_cast<int>(day_index(hi) - first + 1)};
}

Span resolve_span(const std::vector<TrafficRecord>& traffic, const std::string& start, int days) {
  Span s = traffic_span(traffic);
  if (!start.empty()) {
    const auto t = parse_date(start);
    if (!t) throw Error(ErrorCode::kInvalidArgument, "--start: expected YYYY-MM-DD");
    s.start = *t;
  }
  if (days > 0) s.n_days = days;
  return s;
}

json split_json(const SplitSpec& s) {
  return {{"train_days", s.train_days}, {"val_days", s.val_days}, {"test_days", s.test_days}};
}

SplitSpec split_from_json(const nlohmann::json& j) {
  return {j.at("train_days").get<int>(), j.at("val_days").get<int>(), j.at("test_days").get<int>()};
}

// 70 / 15 / 15 by days unless given.
SplitSpec resolve_split(int n_days, int train, int val, int test) {
  SplitSpec s;
  s.test_days = test > 0 ? test : std::max(1, n_days * 15 / 100);
  s.val_days = val >= 0 ? val : std::max(1, n_days * 15 / 100);
  s.train_days = train > 0 ? train : n_days - s.val_days - s.test_days;
  s.validate();
  if (s.train_days + s.val_days + s.test_days > n_days) {
    throw Error(ErrorCode::kSpanTooShort, "split needs more days than the dataset holds");
  }
  return s;
}

SplitSpec load_split(const Paths& paths) {
  return split_from_json(nlohmann::json::parse(slurp(paths.features() / "split.json")));
}

// ---------------------------------------------------------------- commands

struct SynthArgs {
  std::uint64_t seed = 7;
  int days = 30;
  int ics = 16;
  std::string config;
};

void cmd_synth(const Paths& paths, const SynthArgs& a, bool seed_set, bool days_set, bool ics_set) {
  synth::Scenario sc;
  if (!a.config.empty()) sc = synth::scenario_from_json(slurp(a.config));
  if (seed_set || a.config.empty()) sc.seed = a.seed;
  if (days_set || a.config.empty()) sc.n_days = a.days;
  if (ics_set || a.config.empty()) sc.n_ics = a.ics;
  const auto data = synth::generate(sc);
  synth::write_to_directory(data, sc, paths.raw().string());
  std::cout << json{{"dir", paths.raw().string()},
                    {"traffic_records", data.manifest.traffic_records},
                    {"search_records", data.manifest.search_records},
                    {"segments", data.manifest.segments}}
                   .dump()
            << '\n';
}

void cmd_ingest(const Paths& paths) {
  const auto search = load_search_log((paths.raw() / "search.csv").string());
  const auto traffic = load_traffic_log((paths.raw() / "traffic.csv").string());
  {
    auto out = open_out(paths.ingest() / "search.csv");
    write_search_log(out, search.records);
  }
  {
    auto out = open_out(paths.ingest() / "traffic.csv");
    write_traffic_log(out, traffic.records);
  }
  {
    auto out = open_out(paths.ingest() / "search_rejects.jsonl");
    write_rejects_jsonl(out, search.rejects);
  }
  {
    auto out = open_out(paths.ingest() / "traffic_rejects.jsonl");
    write_rejects_jsonl(out, traffic.rejects);
  }
  const json report = {
      {"search", {{"lines", search.data_lines}, {"records", search.records.size()}, {"rejects", search.rejects.size()}}},
      {"traffic", {{"lines", traffic.data_lines}, {"records", traffic.records.size()}, {"rejects", traffic.rejects.size()}}}};
  write_json(paths.ingest() / "report.json", report);
  std::cout << report.dump() << '\n';
}

json report_json(const FederationReport& r) {
  return {{"records", r.records},         {"contributed", r.contributed},
          {"unknown_node", r.unknown_node}, {"no_route", r.no_route},
          {"empty_route", r.empty_route},   {"outside_grid", r.outside_grid},
          {"increments", r.increments}};
}

struct FederateArgs {
  std::string start;
  int days = 0;
  int step = 5;
  int unspec_step = 60;
  double speed = kDefaultSpeedKmh;
  std::vector<int> windows = kDefaultUnspecifiedWindows;
};

void save_series(const Paths& paths, const CountSeries& s) {
  const auto base = series_basename(s);
  fs::create_directories(paths.federated());
  write_count_series(s, (paths.federated() / (base + ".csv")).string(),
                     (paths.federated() / (base + ".json")).string());
}

void cmd_federate(const Paths& paths, const FederateArgs& a) {
  const auto graph = load_network(paths);
  const auto search = load_search_log((paths.ingest() / "search.csv").string());
  const auto traffic = load_traffic_log((paths.ingest() / "traffic.csv").string());
  const Span span = resolve_span(traffic.records, a.start, a.days);

  std::vector<SearchRecord> spec, unspec;
  for (const auto& r : search.records) {
    (classify(r) == SearchClass::kTimeSpecified ? spec : unspec).push_back(r);
  }
  const std::size_t minutes = static_cast<std::size_t>(span.n_days) * kMinutesPerDay;
  TimeGrid grid{span.start, a.step, minutes / static_cast<std::size_t>(a.step)};
  grid.validate();
  TimeGrid ugrid{span.start, a.unspec_step, minutes / static_cast<std::size_t>(a.unspec_step)};
  ugrid.validate();

  const auto ts = accumulate_time_specified(spec, graph, grid, a.speed);
  save_series(paths, ts.series);
  if (60 % a.step == 0 && a.step < 60) {
    save_series(paths, resample_sum(ts.series, static_cast<std::size_t>(60 / a.step)));
  }
  const auto us = accumulate_unspecified(unspec, graph, ugrid, a.windows);
  for (const auto& s : us.series) save_series(paths, s);

  json windows = json::array();
  for (const auto& s : us.series) windows.push_back(series_basename(s));
  const json report = {{"start", format_timestamp(span.start)},
                       {"n_days", span.n_days},
                       {"time_specified", report_json(ts.report)},
                       {"unspecified", report_json(us.report)},
                       {"search_spec", series_basename(ts.series)},
                       {"search_unspec", windows}};
  write_json(paths.federated() / "report.json", report);
  std::cout << report.dump() << '\n';
}

CountSeries load_series(const Paths& paths, const std::string& base) {
  return read_count_series((paths.federated() / (base + ".csv")).string(),
                           (paths.federated() / (base + ".json")).string());
}

struct FeaturesArgs {
  int in_step = 5;
  int out_step = 60;
  int max_gap = 3;
  int train_days = 0, val_days = -1, test_days = 0;
};

void cmd_features(const Paths& paths, const FeaturesArgs& a) {
  const auto graph = load_network(paths);
  const auto traffic = load_traffic_log((paths.ingest() / "traffic.csv").string());
  const auto fed = nlohmann::json::parse(slurp(paths.federated() / "report.json"));
  const auto spec = load_series(paths, fed.at("search_spec").get<std::string>());
  std::vector<CountSeries> unspec;
  for (const auto& b : fed.at("search_unspec")) unspec.push_back(load_series(paths, b.get<std::string>()));
  const auto holidays = load_holidays(paths);
  const EpochMinutes start = *parse_timestamp(fed.at("start").get<std::string>());
  const int n_days = fed.at("n_days").get<int>();

  AssemblyReport rep;
  const auto ds = assemble_dataset(graph, traffic.records, spec, unspec, holidays, start, n_days,
                                   {a.in_step, a.out_step, a.max_gap}, &rep);
  const auto split = resolve_split(n_days, a.train_days, a.val_days, a.test_days);
  const auto normalizer = fit_split_normalizer(ds, split);
  write_dataset(ds, paths.features().string(), &normalizer);
  write_json(paths.features() / "split.json", split_json(split));
  const json report = {{"segments", ds.segments()},
                       {"n_days", n_days},
                       {"input_step", a.in_step},
                       {"output_step", a.out_step},
                       {"traffic_records_used", rep.traffic_records_used},
                       {"traffic_unknown_segment", rep.traffic_unknown_segment},
                       {"traffic_outside_span", rep.traffic_outside_span},
                       {"filled_buckets", rep.filled_buckets},
                       {"missing_buckets", rep.missing_buckets},
                       {"split", split_json(split)}};
  write_json(paths.features() / "report.json", report);
  std::cout << report.dump() << '\n';
}

struct ModelArgs {
  std::uint64_t seed = 1100;
  std::string features = "traffic,time,search,search_unspec";
  int in_size = 288;
  int n_day_interval = 0;
  int out_size = 24;
  int epochs = 50;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  std::size_t hidden = 64;
  int kernel = 3;
};

struct LoadedData {
  Dataset raw;
  NormalizerState normalizer;
  Dataset normalized;
  SplitSpec split;
};

LoadedData load_features(const Paths& paths) {
  LoadedData d;
  std::optional<NormalizerState> norm;
  d.raw = read_dataset(paths.features().string(), &norm);
  d.split = load_split(paths);
  d.normalizer = norm ? *norm : fit_split_normalizer(d.raw, d.split);
  d.normalized = apply_normalizer(d.raw, d.normalizer);
  return d;
}

void cmd_train(const Paths& paths, const ModelArgs& a) {
  const auto data = load_features(paths);
  const auto selection = FeatureSelection::parse(a.features);
  const WindowSpec window{a.in_size, a.n_day_interval, a.out_size};
  const auto parts = split_samples(data.normalized, window, selection, data.split);
  TrainConfig tc;
  tc.seed = a.seed;
  tc.epochs = a.epochs;
  tc.batch_size = a.batch_size;
  tc.learning_rate = a.lr;
  auto config = make_model_config(data.normalized, window, selection, a.hidden, a.kernel);
  config.train_days = static_cast<std::size_t>(data.split.train_days);
  const auto result = train(config, parts.train, parts.val, data.normalizer, tc);

  Checkpoint cp{result.model, tc, data.normalizer, window, selection};
  fs::create_directories(paths.model());
  save_checkpoint(cp, (paths.model() / "checkpoint.json").string());
  {
    auto out = open_out(paths.model() / "train_log.csv");
    out << "epoch,loss,val_mae\n";
    for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
      out << e << ',' << csv::format_double(result.epoch_loss[e]) << ','
          << (e < result.val_mae.size() ? csv::format_double(result.val_mae[e]) : "NA") << '\n';
    }
  }
  const json summary = {{"best_epoch", result.best_epoch},
                        {"initial_loss", result.initial_loss},
                        {"final_loss", result.final_loss},
                        {"train_samples", parts.train.size()},
                        {"val_samples", parts.val.size()},
                        {"test_samples", parts.test.size()}};
  write_json(paths.model() / "summary.json", summary);
  std::cout << summary.dump() << '\n';
}

struct Loaded {
  Checkpoint cp;
  LoadedData data;
  SplitSamples parts;
};

Loaded load_for_inference(const Paths& paths, const std::string& checkpoint) {
  Loaded l;
  l.cp = load_checkpoint(checkpoint.empty() ? (paths.model() / "checkpoint.json").string() : checkpoint);
  l.data = load_features(paths);
  // Inputs are scaled with the checkpoint's own normalizer.
  l.data.normalizer = l.cp.normalizer;
  l.data.normalized = apply_normalizer(l.data.raw, l.cp.normalizer);
  l.parts = split_samples(l.data.normalized, l.cp.window, l.cp.selection, l.data.split);
  return l;
}

void cmd_predict(const Paths& paths, const std::string& checkpoint) {
  const auto l = load_for_inference(paths, checkpoint);
  const std::size_t out_size = l.cp.window.output_size;
  auto out = open_out(paths.results() / "predictions.csv");
  out << "target_time,segment_id,predicted_speed,actual_speed\n";
  for (const auto& s : l.parts.test) {
    const auto y = l.cp.model.forward(s);
    for (std::size_t k = 0; k < l.data.raw.segments(); ++k) {
      for (std::size_t j = 0; j < out_size; ++j) {
        const EpochMinutes t = s.target_start + static_cast<EpochMinutes>(j) * l.data.raw.output_step;
        out << format_timestamp(t) << ',' << l.data.raw.segment_ids[k] << ','
            << csv::format_double(invert_target(l.cp.normalizer, y[k * out_size + j])) << ','
            << csv::format_double(invert_target(l.cp.normalizer, s.target[k * out_size + j]))
            << '\n';
      }
    }
  }
  std::cout << json{{"predictions", (paths.results() / "predictions.csv").string()},
                    {"samples", l.parts.test.size()}}
                   .dump()
            << '\n';
}

void cmd_evaluate(const Paths& paths, const std::string& checkpoint) {
  const auto l = load_for_inference(paths, checkpoint);
  const auto eval = evaluate(l.cp.model, l.parts.test, l.cp.normalizer);
  json seg = json::object();
  for (std::size_t k = 0; k < eval.segment_mae.size(); ++k) {
    seg[l.data.raw.segment_ids[k]] = eval.segment_mae[k];
  }
  const json out = {{"mae", eval.mae}, {"samples", eval.samples}, {"segment_mae", seg}};
  write_json(paths.results() / "evaluate.json", out);
  std::cout << json{{"mae", eval.mae}, {"samples", eval.samples}}.dump() << '\n';
}

ExperimentConfig experiment_config(const Paths& paths, const std::string& config_path,
                                   const ModelArgs& a, const CLI::App& sub) {
  ExperimentConfig c;
  if (!config_path.empty()) c = experiment_from_json(slurp(config_path));
  auto set = [&sub](const char* flag) { return sub.count(flag) > 0; };
  if (set("--seed")) c.seed = a.seed;
  if (set("--features")) {
    c.feature_sets.clear();
    std::stringstream in(a.features);
    std::string item;
    // Several sets are separated by ';'.
    while (std::getline(in, item, ';')) {
      if (item == "preset") {
        c.feature_sets = standard_ablation_preset();
        break;
      }
      c.feature_sets.push_back(FeatureSelection::parse(item));
    }
  }
  if (set("--in-size")) c.window.input_size = a.in_size;
  if (set("--n-day-interval")) c.window.n_day_interval = a.n_day_interval;
  if (set("--out-size")) c.window.output_size = a.out_size;
  if (set("--epochs")) c.train.epochs = a.epochs;
  if (set("--batch-size")) c.train.batch_size = a.batch_size;
  if (set("--lr")) c.train.learning_rate = a.lr;
  if (set("--hidden")) c.lstm_hidden = a.hidden;
  if (set("--kernel")) c.conv_kernel_time = a.kernel;
  if (c.split.train_days == 0) c.split = load_split(paths);
  c.train.seed = c.seed;
  c.validate();
  return c;
}

void report_table(const ResultTable& t, const fs::path& dir) {
  write_result_table(t, dir.string());
  write_results_text(std::cout, t);
}

void cmd_analyze(const Paths& paths) {
  std::optional<NormalizerState> norm;
  const auto ds = read_dataset(paths.features().string(), &norm);
  const auto table = analysis_table(ds);
  const auto corr = correlation_matrix(table.names, table.columns);
  {
    auto out = open_out(paths.analysis() / "correlation.csv");
    write_correlation_csv(out, corr);
  }
  const auto search = load_search_log((paths.ingest() / "search.csv").string());
  const auto stats = day_type_distribution(search.records, load_holidays(paths), ds.start, ds.n_days);
  {
    auto out = open_out(paths.analysis() / "day_types.csv");
    write_day_type_csv(out, stats);
  }
  const double residual = search_residual_correlation(ds);
  const json summary = {{"rows", table.rows()},
                        {"degenerate", corr.degenerate},
                        {"search_residual_r", std::isnan(residual) ? json(nullptr) : json(residual)}};
  write_json(paths.analysis() / "summary.json", summary);
  std::cout << summary.dump() << '\n';
}

void fail(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated route-search traffic forecasting toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string data_dir;
  if (const char* env = std::getenv("FRTP_DATA_DIR")) data_dir = env;
  app.add_option("--data-dir", data_dir, "Dataset root (default: $FRTP_DATA_DIR)");

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scenario into raw/");
  synth->add_option("--seed", synth_args.seed, "Scenario seed");
  synth->add_option("--days", synth_args.days, "Number of days")->check(CLI::PositiveNumber);
  synth->add_option("--ics", synth_args.ics, "Number of interchanges")->check(CLI::Range(2, 1000));
  synth->add_option("--config", synth_args.config, "Scenario JSON")->check(CLI::ExistingFile);

  app.add_subcommand("ingest", "Validate raw logs into ingest/");

  FederateArgs fed_args;
  auto* federate = app.add_subcommand("federate", "Accumulate search counts into federated/");
  federate->add_option("--start", fed_args.start, "First day YYYY-MM-DD (default: traffic span)");
  federate->add_option("--days", fed_args.days, "Number of days (default: traffic span)");
  federate->add_option("--step", fed_args.step, "Time-specified bucket minutes");
  federate->add_option("--unspec-step", fed_args.unspec_step, "Unspecified bucket minutes");
  federate->add_option("--speed", fed_args.speed, "Projection speed km/h")->check(CLI::PositiveNumber);
  federate->add_option("--windows", fed_args.windows, "Unspecified lookback windows in days")->delimiter(',');

  FeaturesArgs feat_args;
  auto* features = app.add_subcommand("features", "Assemble and normalize the dataset into features/");
  features->add_option("--in-step", feat_args.in_step, "Input step minutes");
  features->add_option("--out-step", feat_args.out_step, "Output step minutes");
  features->add_option("--max-gap", feat_args.max_gap, "Longest traffic gap filled, in 5-min buckets");
  features->add_option("--train-days", feat_args.train_days, "Training days");
  features->add_option("--val-days", feat_args.val_days, "Validation days");
  features->add_option("--test-days", feat_args.test_days, "Test days");

  ModelArgs model_args;
  std::string config_path, checkpoint;
  auto add_model_flags = [&](CLI::App* sub) {
    sub->add_option("--seed", model_args.seed, "Training seed");
    sub->add_option("--features", model_args.features, "Feature groups, e.g. traffic,time,search,search_unspec");
    sub->add_option("--in-size", model_args.in_size, "Input buckets");
    sub->add_option("--n-day-interval", model_args.n_day_interval, "Days between input end and target");
    sub->add_option("--out-size", model_args.out_size, "Output buckets");
    sub->add_option("--epochs", model_args.epochs, "Epochs");
    sub->add_option("--batch-size", model_args.batch_size, "Mini-batch size");
    sub->add_option("--lr", model_args.lr, "Adam learning rate");
    sub->add_option("--hidden", model_args.hidden, "LSTM hidden units");
    sub->add_option("--kernel", model_args.kernel, "Convolution kernel length in time");
  };
  auto* train_cmd = app.add_subcommand("train", "Train one model into model/");
  add_model_flags(train_cmd);
  auto* predict = app.add_subcommand("predict", "Write test-span predictions to results/");
  predict->add_option("--checkpoint", checkpoint, "Checkpoint path (default: model/checkpoint.json)");
  auto* evaluate_cmd = app.add_subcommand("evaluate", "MAE of a checkpoint on the test span");
  evaluate_cmd->add_option("--checkpoint", checkpoint, "Checkpoint path (default: model/checkpoint.json)");
  auto* ablation = app.add_subcommand("ablation", "One model per feature set into results/ablation/");
  add_model_flags(ablation);
  ablation->add_option("--config", config_path, "Experiment JSON")->check(CLI::ExistingFile);
  auto* grid = app.add_subcommand("grid", "One model per window cell into results/grid/");
  add_model_flags(grid);
  grid->add_option("--config", config_path, "Experiment JSON")->check(CLI::ExistingFile);
  app.add_subcommand("analyze", "Correlation matrix and day-type summaries into analysis/");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail("UsageError", e.what());
    return 2;
  }

  if (data_dir.empty()) {
    fail("UsageError", "--data-dir: not given and FRTP_DATA_DIR is unset");
    return 2;
  }
  const Paths paths{data_dir};
  try {
    const auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "synth") {
      cmd_synth(paths, synth_args, sub->count("--seed") > 0, sub->count("--days") > 0,
                sub->count("--ics") > 0);
    } else if (name == "ingest") {
      cmd_ingest(paths);
    } else if (name == "federate") {
      cmd_federate(paths, fed_args);
    } else if (name == "features") {
      cmd_features(paths, feat_args);
    } else if (name == "train") {
      cmd_train(paths, model_args);
    } else if (name == "predict") {
      cmd_predict(paths, checkpoint);
    } else if (name == "evaluate") {
      cmd_evaluate(paths, checkpoint);
    } else if (name == "ablation") {
      report_table(run_ablation(load_features(paths).raw, experiment_config(paths, config_path, model_args, *sub)),
                   paths.results() / "ablation");
    } else if (name == "grid") {
      auto config = experiment_config(paths, config_path, model_args, *sub);
      if (sub->count("--in-size") > 0) config.input_sizes = {model_args.in_size};
      if (sub->count("--n-day-interval") > 0) config.n_day_intervals = {model_args.n_day_interval};
      report_table(run_grid(load_features(paths).raw, config), paths.results() / "grid");
    } else if (name == "analyze") {
      cmd_analyze(paths);
    }
  } catch (const Error& e) {
    fail(std::string(to_string(e.code())), e.what());
    return 1;
  } catch (const nlohmann::json::exception& e) {
    fail("Parse", e.what());
    return 1;
  } catch (const std::exception& e) {
    fail("Unknown", e.what());
    return 1;
  }
  return 0;
}
