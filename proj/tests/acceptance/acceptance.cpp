// Acceptance gate. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "pipeline.hpp"
#include "routefed/analysis.hpp"
#include "routefed/error.hpp"
#include "routefed/features.hpp"
#include "routefed/federate.hpp"
#include "routefed/harness.hpp"
#include "routefed/model.hpp"
#include "routefed/network.hpp"
#include "routefed/rng.hpp"
#include "routefed/synthlab.hpp"

using namespace routefed;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& check) {
  Outcome o;
  const auto t0 = Clock::now();
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("%s %2d  %-34s %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, title.c_str(),
              o.detail.c_str(), seconds_since(t0));
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string node_name(std::size_t i) { return "N" + std::to_string(i); }

// Random directed graph with integer lengths and occasional parallel edges.
RoadGraph random_graph(Rng& rng, std::size_t n, double max_len, bool integer) {
  RoadGraph g;
  for (std::size_t i = 0; i < n; ++i) g.add_node({node_name(i), node_name(i), 0.0});
  const double p = rng.uniform(0.15, 0.6);
  int id = 0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b) continue;
      const int copies = rng.bernoulli(p) ? (rng.bernoulli(0.1) ? 2 : 1) : 0;
      for (int c = 0; c < copies; ++c) {
        const double len = integer ? static_cast<double>(1 + rng.below(static_cast<std::uint64_t>(max_len)))
                                   : std::round(rng.uniform(0.1, max_len) * 10.0) / 10.0;
        g.add_segment({"s" + std::to_string(id++), node_name(a), node_name(b), len, "R", 0});
      }
    }
  }
  return g;
}

// ---------------------------------------------------------------- 1

Outcome routing_oracle() {
  const auto t0 = Clock::now();
  Rng rng(101);
  std::size_t compared = 0, mismatches = 0, unreachable = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.below(9);
    const RoadGraph g = random_graph(rng, n, 9.0, true);
    const std::string dep = node_name(rng.below(n));
    std::string arr = node_name(rng.below(n));
    while (arr == dep) arr = node_name(rng.below(n));
    const auto best = oracle::best_path(g, dep, arr);
    try {
      const auto route = shortest_route(g, dep, arr);
      ++compared;
      if (!best || route_length_km(route) != oracle::path_length(g, *best)) ++mismatches;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoRoute || best) ++mismatches;
      ++unreachable;
    }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 30.0,
          std::to_string(compared) + " routed, " + std::to_string(unreachable) +
              " unreachable, " + std::to_string(mismatches) + " mismatches, " +
              fmt("%.2fs (< 30s)", secs)};
}

// ---------------------------------------------------------------- 2

Outcome passage_times_exact() {
  const bool ratios = pooling_ratio(5, 60) == 12 && pooling_ratio(15, 60) == 4;
  Rng rng(202);
  double worst_seconds = 0.0;
  std::size_t routes = 0;
  while (routes < 10000) {
    const RoadGraph g = random_graph(rng, 2 + rng.below(9), 40.0, false);
    for (int q = 0; q < 50 && routes < 10000; ++q) {
      const std::size_t n = g.node_count();
      const auto dep = node_name(rng.below(n));
      const auto arr = node_name(rng.below(n));
      if (dep == arr) continue;
      std::vector<Segment> route;
      try {
        route = shortest_route(g, dep, arr);
      } catch (const Error&) {
        continue;
      }
      ++routes;
      const double speed = rng.uniform(20.0, 120.0);
      const double anchor = std::floor(rng.uniform(2.5e7, 2.9e7));
      const auto fwd = passage_times(route, anchor, AnchorKind::kDeparture, speed);
      const auto back = passage_times(route, fwd.back().exit, AnchorKind::kArrival, speed);
      std::vector<double> lengths;
      for (const auto& s : route) lengths.push_back(s.length_km);
      const auto naive = oracle::naive_enter_times(lengths, anchor, false, speed);
      for (std::size_t i = 0; i < route.size(); ++i) {
        worst_seconds = std::max(worst_seconds, 60.0 * std::abs(back[i].enter - fwd[i].enter));
        worst_seconds = std::max(worst_seconds, 60.0 * std::abs(naive[i] - fwd[i].enter));
      }
    }
  }
  return {ratios && worst_seconds <= 1.0,
          std::string("R(5m->1h)=") + std::to_string(pooling_ratio(5, 60)) +
              ", R(15m->1h)=" + std::to_string(pooling_ratio(15, 60)) + ", " +
              std::to_string(routes) + " routes, worst round trip " +
              fmt("%.3g s (<= 1 s)", worst_seconds)};
}

// ---------------------------------------------------------------- 3

SearchRecord random_search(Rng& rng, const RoadGraph& g, EpochMinutes start, int span_minutes,
                           bool specified) {
  const std::size_t n = g.node_count();
  SearchRecord r;
  r.departure_ic = rng.bernoulli(0.03) ? "X9" : g.nodes()[rng.below(n)].id;
  r.arrival_ic = g.nodes()[rng.below(n)].id;
  r.search_time = start - 12 * kMinutesPerDay +
                  static_cast<EpochMinutes>(rng.below(static_cast<std::uint64_t>(span_minutes) +
                                                      12 * kMinutesPerDay));
  if (specified) {
    const EpochMinutes t = r.search_time + static_cast<EpochMinutes>(rng.below(4 * kMinutesPerDay));
    const auto which = rng.below(3);
    if (which != 1) r.departure_time = t;
    if (which != 0) r.arrival_time = t + static_cast<EpochMinutes>(rng.below(300));
  }
  return r;
}

Outcome federation_oracle() {
  Rng rng(303);
  int mismatches = 0, nest_violations = 0;
  std::int64_t total_counts = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const RoadGraph g = random_graph(rng, 3 + rng.below(8), 30.0, false);
    const int step = std::vector<int>{5, 10, 15, 30, 60}[rng.below(5)];
    const std::size_t len = 200 + rng.below(1801);
    const EpochMinutes start = *parse_date("2022-06-01") + 60 * static_cast<EpochMinutes>(rng.below(24));
    const TimeGrid grid{start, step, len};
    const int span = static_cast<int>(len) * step;
    std::vector<SearchRecord> spec, unspec;
    const std::size_t n_records = 1 + rng.below(500);
    for (std::size_t i = 0; i < n_records; ++i) {
      if (rng.bernoulli(0.5)) {
        spec.push_back(random_search(rng, g, start, span, true));
      } else {
        unspec.push_back(random_search(rng, g, start, span, false));
      }
    }
    const auto fast = accumulate_time_specified(spec, g, grid);
    if (!(fast.series == oracle::naive_accumulate_time_specified(spec, g, grid, kDefaultSpeedKmh))) {
      ++mismatches;
    }
    const auto un = accumulate_unspecified(unspec, g, grid);
    for (std::size_t w = 0; w < un.series.size(); ++w) {
      if (!(un.series[w] ==
            oracle::naive_accumulate_unspecified(unspec, g, grid, kDefaultUnspecifiedWindows[w]))) {
        ++mismatches;
      }
      if (w > 0) {
        for (std::size_t i = 0; i < un.series[w].counts.size(); ++i) {
          if (un.series[w - 1].counts[i] > un.series[w].counts[i]) ++nest_violations;
        }
      }
      total_counts += un.series[w].total();
    }
    total_counts += fast.series.total();
  }
  return {mismatches == 0 && nest_violations == 0 && total_counts > 0,
          "20 scenarios, " + std::to_string(mismatches) + " series mismatches, " +
              std::to_string(nest_violations) + " nesting violations, " +
              std::to_string(total_counts) + " counts"};
}

// ---------------------------------------------------------------- 4

Outcome gradient_check() {
  const auto t0 = Clock::now();
  const auto prep = fixture::prepare(fixture::tiny_scenario(2, 4), {5, 15, 3});
  const auto& ds = prep.dataset;
  const auto norm = fit_normalizer(ds, ds.start + 4 * kMinutesPerDay);
  const Dataset nds = apply_normalizer(ds, norm);
  const WindowSpec window{12, 0, 4};
  const auto cfg = make_model_config(nds, window, FeatureSelection::all(), 4, 3);
  const auto samples = build_windows(nds, window, FeatureSelection::all()).samples;
  const std::vector<const Sample*> batch{&samples[0], &samples[1]};
  const ForecastModel model(cfg, 1100);
  std::vector<double> grad;
  model.loss_and_gradient(batch, grad);
  const auto loss_at = [&](const std::vector<double>& w) {
    return ForecastModel(cfg, w).loss(batch);
  };
  Rng rng(404);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t c = rng.below(grad.size());
    const double fd = oracle::finite_difference_grad(loss_at, model.params(), c, 1e-5);
    const double denom = std::max({std::abs(fd), std::abs(grad[c]), 1e-8});
    worst = std::max(worst, std::abs(fd - grad[c]) / denom);
  }
  const double secs = seconds_since(t0);
  return {cfg.segments == 2 && worst < 1e-4 && secs < 60.0,
          "K=" + std::to_string(cfg.segments) + ", " + std::to_string(grad.size()) +
              " params, 100 coords, worst rel err " + fmt("%.2e (< 1e-4)", worst)};
}

// ---------------------------------------------------------------- 5

Outcome determinism() {
  const auto prep = fixture::prepare(fixture::tiny_scenario(3, 10));
  const SplitSpec split{6, 2, 2};
  const auto norm = fit_split_normalizer(prep.dataset, split);
  const Dataset nds = apply_normalizer(prep.dataset, norm);
  const WindowSpec window{288, 0, 24};
  const auto parts = split_samples(nds, window, FeatureSelection::all(), split);
  const auto cfg = make_model_config(nds, window, FeatureSelection::all(), 8, 3);
  TrainConfig tc;
  tc.seed = 1100;
  tc.epochs = 5;
  tc.batch_size = 2;
  const auto a = train(cfg, parts.train, parts.val, norm, tc);
  const auto b = train(cfg, parts.train, parts.val, norm, tc);
  const auto ja = checkpoint_to_json({a.model, tc, norm, window, FeatureSelection::all()});
  const auto jb = checkpoint_to_json({b.model, tc, norm, window, FeatureSelection::all()});
  const bool same_loss = a.epoch_loss == b.epoch_loss && a.val_mae == b.val_mae;
  return {same_loss && ja == jb,
          std::to_string(a.epoch_loss.size()) + " epochs, losses " +
              (same_loss ? "identical" : "differ") + ", checkpoints " +
              (ja == jb ? "byte-identical" : "differ") + " (" + std::to_string(ja.size()) +
              " bytes)"};
}

// ---------------------------------------------------------------- 6

Outcome granularity() {
  std::string detail;
  bool ok = true;
  for (const auto& [in_step, out_step] : {std::pair{5, 60}, {15, 60}, {60, 60}}) {
    const auto prep = fixture::prepare(fixture::tiny_scenario(3, 5), {in_step, out_step, 3});
    const SplitSpec split{3, 0, 2};
    const auto norm = fit_split_normalizer(prep.dataset, split);
    const Dataset nds = apply_normalizer(prep.dataset, norm);
    const WindowSpec window{24 * 60 / in_step, 0, 24};
    const auto parts = split_samples(nds, window, FeatureSelection::all(), split);
    const auto cfg = make_model_config(nds, window, FeatureSelection::all(), 8, 3);
    TrainConfig tc;
    tc.epochs = 2;
    tc.batch_size = 2;
    const auto r = train(cfg, parts.train, {}, norm, tc);
    const auto y = r.model.forward(parts.test.front());
    const bool shape = y.size() == nds.segments() * 24 && cfg.pooled_len == 24;
    ok = ok && shape && std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); });
    detail += std::to_string(in_step) + "m/" + std::to_string(out_step / 60) + "h R=" +
              std::to_string(out_step / in_step) + " out " + std::to_string(y.size() / 24) +
              "x24; ";
  }
  return {ok, detail};
}

// ---------------------------------------------------------------- 7 and 8

struct DirectionRuns {
  ResultTable ablation, grid;
  double seconds = 0.0;
};

const DirectionRuns& direction_runs() {
  static const DirectionRuns runs = [] {
    const auto t0 = Clock::now();
    synth::Scenario sc;
    sc.seed = 11;
    sc.n_days = 60;
    sc.n_ics = 16;
    const Dataset ds = fixture::prepare(sc).dataset;
    ExperimentConfig c;
    c.seed = 1100;
    c.feature_sets = {FeatureSelection::all(), FeatureSelection::parse("traffic")};
    c.window = {288, 0, 24};
    c.input_sizes = {288};
    c.n_day_intervals = {0, 6};
    c.split = {40, 10, 10};
    c.train.epochs = 100;
    c.train.batch_size = 4;
    c.train.learning_rate = 0.003;
    c.lstm_hidden = 32;
    c.conv_kernel_time = 3;
    c.train.seed = c.seed;
    DirectionRuns r;
    r.ablation = run_ablation(ds, c);
    r.grid = run_grid(ds, c);
    r.seconds = seconds_since(t0);
    return r;
  }();
  return runs;
}

const ResultRow* find_row(const ResultTable& t, const std::function<bool(const ResultRow&)>& f) {
  for (const auto& r : t.rows) {
    if (f(r)) return &r;
  }
  return nullptr;
}

Outcome ablation_direction() {
  const auto& runs = direction_runs();
  const auto* full = find_row(runs.ablation, [](const ResultRow& r) {
    return r.selection == FeatureSelection::all();
  });
  const auto* traffic = find_row(runs.ablation, [](const ResultRow& r) {
    return r.selection == FeatureSelection::parse("traffic");
  });
  if (!full || !traffic || !full->ok || !traffic->ok) return {false, "ablation row failed"};
  const double gain = 1.0 - full->mae / traffic->mae;
  return {gain >= 0.05 && runs.seconds < 900.0,
          fmt("full %.3f", full->mae) + fmt(" vs traffic-only %.3f km/h", traffic->mae) +
              fmt(", %.1f%% lower (>= 5%%)", 100.0 * gain) +
              fmt(", both experiments %.0fs (< 900s)", runs.seconds)};
}

Outcome grid_direction() {
  const auto& runs = direction_runs();
  const auto* d0 = find_row(runs.grid, [](const ResultRow& r) { return r.window.n_day_interval == 0; });
  const auto* d6 = find_row(runs.grid, [](const ResultRow& r) { return r.window.n_day_interval == 6; });
  if (!d0 || !d6 || !d0->ok || !d6->ok) return {false, "grid cell failed"};
  return {d0->mae <= d6->mae,
          fmt("in_size 288: interval 0 %.3f", d0->mae) + fmt(" <= interval 6 %.3f km/h", d6->mae)};
}

// ---------------------------------------------------------------- 9

Outcome analysis_correctness() {
  synth::Scenario sc;
  sc.seed = 909;
  sc.n_ics = 6;
  sc.n_days = 14;
  const auto prep = fixture::prepare(sc);
  const auto table = analysis_table(prep.dataset);
  const auto m = correlation_matrix(table.names, table.columns);
  double worst_oracle = 0.0;
  bool symmetric = true, unit_diag = true;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!std::isnan(m.at(i, i)) && m.at(i, i) != 1.0) unit_diag = false;
    for (std::size_t j = 0; j < m.size(); ++j) {
      const double a = m.at(i, j), b = m.at(j, i);
      if (std::isnan(a) != std::isnan(b) || (!std::isnan(a) && a != b)) symmetric = false;
      if (i == j || std::isnan(a)) continue;
      worst_oracle = std::max(
          worst_oracle, std::abs(a - oracle::naive_pearson(table.columns[i], table.columns[j])));
    }
  }
  const double search_cars = m.at("search_1h", "allCars");
  const double speed_occ = m.at("speed", "OCC");
  return {symmetric && unit_diag && worst_oracle <= 1e-12 && search_cars > 0.0 && speed_occ < 0.0,
          std::to_string(m.size()) + "x" + std::to_string(m.size()) + " over " +
              std::to_string(table.rows()) + " rows, oracle diff " + fmt("%.1e", worst_oracle) +
              fmt(", r(search,allCars)=%+.3f", search_cars) +
              fmt(", r(speed,OCC)=%+.3f", speed_occ)};
}

// ---------------------------------------------------------------- 10

Outcome mae_and_normalization() {
  const std::vector<double> a{1, 2}, b{2, 4}, v{3.5, -1, 80};
  const bool examples = mae(a, b) == 1.5 && mae(v, v) == 0.0;

  const auto prep = fixture::prepare(fixture::tiny_scenario(3, 6));
  const Dataset& raw = prep.dataset;
  const auto norm = fit_normalizer(raw, raw.start + 4 * kMinutesPerDay);
  const Dataset nds = apply_normalizer(raw, norm);
  double worst = 0.0;
  for (std::size_t i = 0; i < raw.target.size(); ++i) {
    if (std::isnan(raw.target[i])) continue;
    worst = std::max(worst, std::abs(invert_target(norm, nds.target[i]) - raw.target[i]));
  }
  for (std::size_t gi = 0; gi < raw.groups.size(); ++gi) {
    const auto& g = raw.groups[gi];
    const auto& ch = norm.inputs.at(g.name);
    for (std::size_t i = 0; i < g.data.data.size(); ++i) {
      const double x = g.data.data[i];
      if (std::isnan(x)) continue;
      const auto& c = ch[i % g.data.features];
      worst = std::max(worst, std::abs(nds.groups[gi].data.data[i] * c.stddev + c.mean - x));
    }
  }

  // Reported MAE is on km/h: compare against a hand de-normalized sum.
  const WindowSpec window{288, 0, 24};
  const auto samples = build_windows(nds, window, FeatureSelection::all()).samples;
  const ForecastModel model(make_model_config(nds, window, FeatureSelection::all(), 8, 3), 3);
  double sum = 0.0, sum_norm = 0.0;
  std::size_t n = 0;
  for (const auto& s : samples) {
    const auto y = model.forward(s);
    for (std::size_t i = 0; i < y.size(); ++i, ++n) {
      sum += std::abs(invert_target(norm, y[i]) - invert_target(norm, s.target[i]));
      sum_norm += std::abs(y[i] - s.target[i]);
    }
  }
  const double reported = evaluate(model, samples, norm).mae;
  const double kmh = sum / static_cast<double>(n);
  const double scale = norm.target_max - norm.target_min;
  const bool denorm = std::abs(reported - kmh) <= 1e-9 * std::max(1.0, kmh) &&
                      std::abs(reported - scale * sum_norm / static_cast<double>(n)) <= 1e-9 * std::max(1.0, kmh);
  return {examples && worst <= 1e-9 && denorm,
          std::string("examples ") + (examples ? "ok" : "wrong") + fmt(", round trip %.1e", worst) +
              fmt(", reported MAE %.4f km/h", reported) + fmt(" = de-normalized %.4f", kmh)};
}

}  // namespace

int main() {
  report(1, "routing oracle", routing_oracle);
  report(2, "passage-time exactness", passage_times_exact);
  report(3, "federation oracle", federation_oracle);
  report(4, "gradient check", gradient_check);
  report(5, "determinism", determinism);
  report(6, "granularity contract", granularity);
  report(7, "synthetic ablation direction", ablation_direction);
  report(8, "synthetic grid direction", grid_direction);
  report(9, "analysis correctness", analysis_correctness);
  report(10, "MAE and normalization", mae_and_normalization);
  std::printf("%s: %d of 10 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures == 0 ? 0 : 1;
}
