#include "routefed/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <queue>

#include "routefed/csv.hpp"
#include "routefed/error.hpp"

namespace routefed {

void RoadGraph::add_node(ICNode node) {
  if (node.id.empty()) {
    throw Error(ErrorCode::kInvalidGraph, "IC id must not be empty");
  }
  if (!(node.kp >= 0.0)) {
    throw Error(ErrorCode::kInvalidGraph, "IC " + node.id + ": kp must be >= 0");
  }
  if (node_by_id_.contains(node.id)) {
    throw Error(ErrorCode::kInvalidGraph, "duplicate IC id " + node.id);
  }
  node_by_id_.emplace(node.id, nodes_.size());
  nodes_.push_back(std::move(node));
  out_.emplace_back();
  in_.emplace_back();
}

void RoadGraph::add_segment(Segment segment) {
  if (segment.id.empty()) {
    throw Error(ErrorCode::kInvalidGraph, "segment id must not be empty");
  }
  if (segment_by_id_.contains(segment.id)) {
    throw Error(ErrorCode::kInvalidGraph, "duplicate segment id " + segment.id);
  }
  if (!(segment.length_km > 0.0) || !std::isfinite(segment.length_km)) {
    throw Error(ErrorCode::kInvalidGraph,
                "segment " + segment.id + ": length_km must be > 0");
  }
  if (segment.kp_index < 0) {
    throw Error(ErrorCode::kInvalidGraph,
                "segment " + segment.id + ": kp_index must be >= 0");
  }
  const auto from = node_index(segment.from_ic);
  const auto to = node_index(segment.to_ic);
  if (!from || !to) {
    throw Error(ErrorCode::kInvalidGraph,
                "segment " + segment.id + " has a dangling endpoint");
  }
  const std::size_t idx = segments_.size();
  segment_by_id_.emplace(segment.id, idx);
  segments_.push_back(std::move(segment));
  out_[*from].push_back(idx);
  in_[*to].push_back(idx);
}

bool RoadGraph::has_node(std::string_view id) const {
  return node_index(id).has_value();
}

std::optional<std::size_t> RoadGraph::node_index(std::string_view id) const {
  const auto it = node_by_id_.find(std::string(id));
  if (it == node_by_id_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> RoadGraph::segment_index(std::string_view id) const {
  const auto it = segment_by_id_.find(std::string(id));
  if (it == segment_by_id_.end()) return std::nullopt;
  return it->second;
}

std::size_t RoadGraph::require_node(std::string_view id) const {
  const auto idx = node_index(id);
  if (!idx) {
    throw Error(ErrorCode::kUnknownNode, "unknown IC " + std::string(id));
  }
  return *idx;
}

const ICNode& RoadGraph::node(std::string_view id) const {
  return nodes_[require_node(id)];
}

const Segment& RoadGraph::segment(std::string_view id) const {
  const auto idx = segment_index(id);
  if (!idx) {
    throw Error(ErrorCode::kInvalidArgument,
                "unknown segment " + std::string(id));
  }
  return segments_[*idx];
}

bool RoadGraph::is_connected() const {
  if (nodes_.empty()) return true;
  std::vector<char> seen(nodes_.size(), 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    auto visit = [&](std::size_t v) {
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        stack.push_back(v);
      }
    };
    for (const std::size_t e : out_[u]) visit(*node_index(segments_[e].to_ic));
    for (const std::size_t e : in_[u]) visit(*node_index(segments_[e].from_ic));
  }
  return reached == nodes_.size();
}

std::vector<Segment> shortest_route(const RoadGraph& graph, std::string_view dep,
                                    std::string_view arr) {
  const auto src = graph.node_index(dep);
  const auto dst = graph.node_index(arr);
  if (!src) throw Error(ErrorCode::kUnknownNode, "unknown IC " + std::string(dep));
  if (!dst) throw Error(ErrorCode::kUnknownNode, "unknown IC " + std::string(arr));
  if (*src == *dst) return {};

  const auto& segs = graph.segments();
  const std::size_t n = graph.node_count();
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // Distances to the destination, via Dijkstra on reversed edges. Knowing
  // dist-to-target for every node lets the forward walk pick the smallest
  // next IC id among all tight edges, which yields the lexicographically
  // smallest node sequence among shortest paths.
  std::vector<double> dist(n, kInf);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[*dst] = 0.0;
  heap.emplace(0.0, *dst);
  while (!heap.empty()) {
    const auto [d, v] = heap.top();
    heap.pop();
    if (d > dist[v]) continue;
    for (const std::size_t e : graph.incoming(v)) {
      const std::size_t u = *graph.node_index(segs[e].from_ic);
      const double nd = d + segs[e].length_km;
      if (nd < dist[u]) {
        dist[u] = nd;
        heap.emplace(nd, u);
      }
    }
  }
  if (dist[*src] == kInf) {
    throw Error(ErrorCode::kNoRoute, "no route from " + std::string(dep) +
                                         " to " + std::string(arr));
  }

  std::vector<Segment> route;
  std::size_t u = *src;
  while (u != *dst) {
    const double tol = 1e-9 * (1.0 + dist[u]);
    const Segment* best = nullptr;
    for (const std::size_t e : graph.outgoing(u)) {
      const Segment& s = segs[e];
      const double dv = dist[*graph.node_index(s.to_ic)];
      if (dv == kInf || std::abs(s.length_km + dv - dist[u]) > tol) continue;
      if (best == nullptr || s.to_ic < best->to_ic ||
          (s.to_ic == best->to_ic &&
           (s.length_km < best->length_km ||
            (s.length_km == best->length_km && s.id < best->id)))) {
        best = &s;
      }
    }
    if (best == nullptr || route.size() > n) {
      throw Error(ErrorCode::kNoRoute, "route reconstruction failed from " +
                                           std::string(dep));
    }
    route.push_back(*best);
    u = *graph.node_index(best->to_ic);
  }
  return route;
}

double route_length_km(const std::vector<Segment>& route) {
  double total = 0.0;
  for (const auto& s : route) total += s.length_km;
  return total;
}

std::vector<Passage> passage_times(const std::vector<Segment>& route,
                                   double anchor, AnchorKind kind,
                                   double speed_kmh) {
  if (route.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "passage_times: empty route");
  }
  if (!(speed_kmh > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "passage_times: speed must be > 0");
  }
  for (std::size_t i = 1; i < route.size(); ++i) {
    if (route[i - 1].to_ic != route[i].from_ic) {
      throw Error(ErrorCode::kDiscontiguousRoute,
                  "segments " + route[i - 1].id + " and " + route[i].id +
                      " do not share an IC");
    }
  }
  const double minutes_per_km = 60.0 / speed_kmh;
  const double total = route_length_km(route);

  std::vector<Passage> out;
  out.reserve(route.size());
  double cum = 0.0;
  for (const auto& s : route) {
    const double before = cum;
    cum += s.length_km;
    Passage p{s.id, 0.0, 0.0};
    if (kind == AnchorKind::kDeparture) {
      p.enter = anchor + before * minutes_per_km;
      p.exit = anchor + cum * minutes_per_km;
    } else {
      p.enter = anchor - (total - before) * minutes_per_km;
      p.exit = anchor - (total - cum) * minutes_per_km;
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::size_t degree_sum(const RoadGraph& graph, std::string_view node) {
  const auto idx = graph.node_index(node);
  if (!idx) throw Error(ErrorCode::kUnknownNode, "unknown IC " + std::string(node));
  return graph.outgoing(*idx).size() + graph.incoming(*idx).size();
}

namespace {

void expect_header(std::istream& in, std::string_view expected,
                   std::string_view what) {
  std::string line;
  if (!std::getline(in, line) || csv::chomp(line) != expected) {
    throw Error(ErrorCode::kParse, std::string(what) + ": expected header '" +
                                       std::string(expected) + "'");
  }
}

[[noreturn]] void bad_line(std::string_view what, std::size_t line_no,
                           const std::string& why) {
  throw Error(ErrorCode::kParse, std::string(what) + " line " +
                                     std::to_string(line_no) + ": " + why);
}

}  // namespace

RoadGraph read_graph(std::istream& ic_csv, std::istream& network_csv) {
  RoadGraph graph;
  expect_header(ic_csv, "ic_id,name,kp", "IC file");
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(ic_csv, line)) {
    ++line_no;
    const auto text = csv::chomp(line);
    if (text.empty()) continue;
    const auto f = csv::split_line(text);
    if (f.size() != 3) bad_line("IC file", line_no, "expected 3 fields");
    const auto kp = csv::parse_double(f[2]);
    if (!kp) bad_line("IC file", line_no, "bad kp");
    graph.add_node({f[0], f[1], *kp});
  }

  expect_header(network_csv, "segment_id,road_code,from_ic,to_ic,length_km,kp_index",
                "network file");
  line_no = 1;
  while (std::getline(network_csv, line)) {
    ++line_no;
    const auto text = csv::chomp(line);
    if (text.empty()) continue;
    const auto f = csv::split_line(text);
    if (f.size() != 6) bad_line("network file", line_no, "expected 6 fields");
    const auto len = csv::parse_double(f[4]);
    const auto kpi = csv::parse_int(f[5]);
    if (!len) bad_line("network file", line_no, "bad length_km");
    if (!kpi) bad_line("network file", line_no, "bad kp_index");
    graph.add_segment({f[0], f[2], f[3], *len, f[1], static_cast<int>(*kpi)});
  }
  return graph;
}

RoadGraph load_graph(const std::string& ic_path, const std::string& network_path) {
  std::ifstream ic(ic_path);
  if (!ic) throw Error(ErrorCode::kIo, "cannot open " + ic_path);
  std::ifstream net(network_path);
  if (!net) throw Error(ErrorCode::kIo, "cannot open " + network_path);
  return read_graph(ic, net);
}

void write_ic_csv(std::ostream& out, const RoadGraph& graph) {
  out << "ic_id,name,kp\n";
  for (const auto& n : graph.nodes()) {
    out << csv::escape(n.id) << ',' << csv::escape(n.name) << ','
        << csv::format_double(n.kp) << '\n';
  }
}

void write_network_csv(std::ostream& out, const RoadGraph& graph) {
  out << "segment_id,road_code,from_ic,to_ic,length_km,kp_index\n";
  for (const auto& s : graph.segments()) {
    out << csv::escape(s.id) << ',' << csv::escape(s.road_code) << ','
        << csv::escape(s.from_ic) << ',' << csv::escape(s.to_ic) << ','
        << csv::format_double(s.length_km) << ',' << s.kp_index << '\n';
  }
}

}  // namespace routefed
