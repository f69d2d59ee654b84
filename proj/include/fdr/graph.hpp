#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "fdr/netlist.hpp"

namespace fdr {

enum class NodeKind { FlipFlop, Combinational, PrimaryInput, PrimaryOutput, Constant };

struct GraphNode {
    NodeKind kind;
    std::string name; // cell instance, port name, or constant net
    int cell = -1;    // index into Netlist::cells, -1 for ports and constant nets
};

// Directed connectivity over cells, primary ports and constant drivers.
// One edge per driver-sink pin pair, so parallel edges are kept. The clock
// net carries no data and contributes no edges.
class CircuitGraph {
  public:
    const std::vector<GraphNode>& nodes() const { return nodes_; }
    const std::vector<int>& out(int node) const { return out_[node]; }
    const std::vector<int>& in(int node) const { return in_[node]; }
    std::size_t edge_count() const { return edge_count_; }

    int cell_node(const std::string& name) const;
    int input_node(const std::string& name) const;
    int output_node(const std::string& name) const;

    std::size_t count_kind(NodeKind k) const;

    // Combinational cell nodes ordered so every node appears after all of its
    // combinational drivers.
    const std::vector<int>& topo_combinational() const { return topo_comb_; }

    friend CircuitGraph build_graph(const Netlist& nl);

  private:
    std::vector<GraphNode> nodes_;
    std::vector<std::vector<int>> out_, in_;
    std::size_t edge_count_ = 0;
    std::map<std::string, int> cell_node_, input_node_, output_node_;
    std::vector<int> topo_comb_;
};

// Throws CombinationalLoopError (naming the cycle) if the combinational
// subgraph is not acyclic.
CircuitGraph build_graph(const Netlist& nl);

// Flip-flop neighbourhoods with every combinational detail folded away.
// "Direct" means reachable through combinational cells without crossing
// another flip-flop.
struct FfAdjacency {
    std::vector<std::string> ffs; // sorted; defines ff indices
    std::map<std::string, int> index;

    std::vector<std::vector<int>> pred_ffs, succ_ffs;  // sorted, deduplicated
    std::vector<std::vector<std::string>> pis, pos;    // direct ports, sorted
    std::vector<int> constant_inputs;  // distinct constant drivers in the input cone
    std::vector<int> comb_fan_in;      // combinational cells in the direct input cone
    std::vector<int> comb_fan_out;     // combinational cells in the direct output cone
    std::vector<int> comb_path_depth;  // longest combinational chain leaving Q
    std::vector<int> drive_strength;

    int at(const std::string& ff) const;
};

FfAdjacency build_ff_adjacency(const Netlist& nl, const CircuitGraph& g);

// Transitive flip-flop cones over the direct adjacency. The flip-flop itself
// is included only when it lies on a cycle reaching itself.
std::set<int> influencing_ffs(const FfAdjacency& adj, const std::string& ff);
std::set<int> influenced_ffs(const FfAdjacency& adj, const std::string& ff);

enum class Endpoint { PrimaryInputs, PrimaryOutputs };

// Path depth counts flip-flop stages crossed plus one, so a purely
// combinational connection has depth 1. Unconnected endpoints leave
// connected=false.
struct StageDepths {
    bool connected = false;
    int min = 0;
    double avg = 0.0;
    int max = 0;
};

StageDepths stage_depths(const FfAdjacency& adj, const std::string& ff, Endpoint which);

// Shortest cycle through ff in flip-flop hops; a combinational self-loop has
// depth 1. Returns {false, -1} when no cycle closes.
std::pair<bool, int> feedback_loop(const FfAdjacency& adj, const std::string& ff);

} // namespace fdr
