#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "routefed/time.hpp"

namespace routefed {

inline constexpr double kDefaultSpeedKmh = 80.0;

struct ICNode {
  std::string id;
  std::string name;
  double kp = 0.0;  // km from road origin
};

struct Segment {
  std::string id;
  std::string from_ic;
  std::string to_ic;
  double length_km = 0.0;
  std::string road_code;
  int kp_index = 0;
};

// Directed interchange graph. Nodes and segments are validated on insertion;
// once built the graph is read-only and safe to query from many threads.
class RoadGraph {
 public:
  void add_node(ICNode node);
  void add_segment(Segment segment);

  const std::vector<ICNode>& nodes() const { return nodes_; }
  const std::vector<Segment>& segments() const { return segments_; }

  bool has_node(std::string_view id) const;
  std::optional<std::size_t> node_index(std::string_view id) const;
  std::optional<std::size_t> segment_index(std::string_view id) const;
  const ICNode& node(std::string_view id) const;
  const Segment& segment(std::string_view id) const;

  // Indices into segments() leaving / entering a node.
  const std::vector<std::size_t>& outgoing(std::size_t node) const {
    return out_[node];
  }
  const std::vector<std::size_t>& incoming(std::size_t node) const {
    return in_[node];
  }

  // Weakly connected: every node reachable ignoring edge direction.
  bool is_connected() const;

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t segment_count() const { return segments_.size(); }

 private:
  std::size_t require_node(std::string_view id) const;

  std::vector<ICNode> nodes_;
  std::vector<Segment> segments_;
  std::unordered_map<std::string, std::size_t> node_by_id_;
  std::unordered_map<std::string, std::size_t> segment_by_id_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::vector<std::size_t>> in_;
};

// Minimum total length_km path from dep to arr, as an ordered segment list.
// Among equal-length paths the lexicographically smallest node-id sequence
// wins; parallel segments are resolved by length, then segment id.
// Throws kUnknownNode / kNoRoute.
std::vector<Segment> shortest_route(const RoadGraph& graph, std::string_view dep,
                                    std::string_view arr);

enum class AnchorKind { kDeparture, kArrival };

struct Passage {
  std::string segment_id;
  double enter = 0.0;  // epoch minutes, fractional
  double exit = 0.0;
};

// Constant-speed projection of a route onto the clock. Departure anchors
// propagate forward, arrival anchors backward from the end of the route.
std::vector<Passage> passage_times(const std::vector<Segment>& route,
                                   double anchor, AnchorKind kind,
                                   double speed_kmh = kDefaultSpeedKmh);

// In-degree + out-degree.
std::size_t degree_sum(const RoadGraph& graph, std::string_view node);

double route_length_km(const std::vector<Segment>& route);

// CSV I/O. Network file: segment_id,road_code,from_ic,to_ic,length_km,kp_index
// IC file: ic_id,name,kp
RoadGraph read_graph(std::istream& ic_csv, std::istream& network_csv);
RoadGraph load_graph(const std::string& ic_path, const std::string& network_path);
void write_ic_csv(std::ostream& out, const RoadGraph& graph);
void write_network_csv(std::ostream& out, const RoadGraph& graph);

}  // namespace routefed
