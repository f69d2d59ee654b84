#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "fdr/graph.hpp"
#include "fdr/sim.hpp"

namespace fdr {

// Scalar columns of the per-flip-flop descriptor. The two proximity
// features each expand to min/avg/max, giving 25 columns in a fixed order.
constexpr int kFeatureCount = 25;
extern const std::array<const char*, kFeatureCount> kFeatureNames;

struct FeatureVector {
    std::string ff_name;

    // Structural: who feeds and who listens, directly and transitively.
    int ff_fan_in = 0;
    int ff_fan_out = 0;
    int total_ffs_influencing = 0;
    int total_ffs_influenced = 0;
    int pi_connections = 0;
    int po_connections = 0;
    int pi_proximity_min = -1;
    double pi_proximity_avg = -1.0;
    int pi_proximity_max = -1;
    int po_proximity_min = -1;
    double po_proximity_avg = -1.0;
    int po_proximity_max = -1;
    int part_of_bus = 0;
    int bus_position = -1;
    int bus_length = 0;
    int constant_driver_connections = 0;
    int has_feedback_loop = 0;
    int feedback_loop_depth = -1;

    // Synthesis: physical shape of the cell and its combinational shell.
    int drive_strength = 1;
    int comb_fan_in = 0;
    int comb_fan_out = 0;
    int comb_path_depth = 0;

    // Dynamic: behaviour under the reference stimulus.
    double ratio_at_0 = 0.0;
    double ratio_at_1 = 0.0;
    int state_changes = 0;

    std::array<double, kFeatureCount> as_row() const;
};

struct BusInfo {
    bool member = false;
    int position = -1;
    int length = 0;
};

// Groups flip-flop instance names of the forms base[idx] and base_reg_idx_;
// a group needs at least two members to count as a bus.
std::map<std::string, BusInfo> bus_detect(const std::vector<std::string>& ff_names);

FeatureVector extract_structural(const FfAdjacency& adj,
                                 const std::map<std::string, BusInfo>& buses,
                                 const std::string& ff);
void extract_synthesis(const FfAdjacency& adj, const std::string& ff, FeatureVector& fv);
void extract_dynamic(const ActivityTrace& activity, const std::string& ff,
                     FeatureVector& fv);

// All flip-flops, ordered by name; the CSV written from this is
// bit-identical across runs.
std::vector<FeatureVector> extract_all(const Netlist& nl, const CircuitGraph& g,
                                       const ActivityTrace& activity);

void write_features_csv(const std::string& path, const std::vector<FeatureVector>& rows);

struct NamedRow {
    std::string name;
    std::array<double, kFeatureCount> values;
};

std::vector<NamedRow> read_features_csv(const std::string& path);

} // namespace fdr
