#include "fdr/features.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

#include "fdr/textio.hpp"

namespace fdr {

const std::array<const char*, kFeatureCount> kFeatureNames = {
    "ff_fan_in",
    "ff_fan_out",
    "total_ffs_influencing",
    "total_ffs_influenced",
    "pi_connections",
    "po_connections",
    "pi_proximity_min",
    "pi_proximity_avg",
    "pi_proximity_max",
    "po_proximity_min",
    "po_proximity_avg",
    "po_proximity_max",
    "part_of_bus",
    "bus_position",
    "bus_length",
    "constant_driver_connections",
    "has_feedback_loop",
    "feedback_loop_depth",
    "drive_strength",
    "comb_fan_in",
    "comb_fan_out",
    "comb_path_depth",
    "ratio_at_0",
    "ratio_at_1",
    "state_changes",
};

std::array<double, kFeatureCount> FeatureVector::as_row() const {
    return {static_cast<double>(ff_fan_in),
            static_cast<double>(ff_fan_out),
            static_cast<double>(total_ffs_influencing),
            static_cast<double>(total_ffs_influenced),
            static_cast<double>(pi_connections),
            static_cast<double>(po_connections),
            static_cast<double>(pi_proximity_min),
            pi_proximity_avg,
            static_cast<double>(pi_proximity_max),
            static_cast<double>(po_proximity_min),
            po_proximity_avg,
            static_cast<double>(po_proximity_max),
            static_cast<double>(part_of_bus),
            static_cast<double>(bus_position),
            static_cast<double>(bus_length),
            static_cast<double>(constant_driver_connections),
            static_cast<double>(has_feedback_loop),
            static_cast<double>(feedback_loop_depth),
            static_cast<double>(drive_strength),
            static_cast<double>(comb_fan_in),
            static_cast<double>(comb_fan_out),
            static_cast<double>(comb_path_depth),
            ratio_at_0,
            ratio_at_1,
            static_cast<double>(state_changes)};
}

std::map<std::string, BusInfo> bus_detect(const std::vector<std::string>& ff_names) {
    static const std::regex bracket(R"(^(.+)\[([0-9]+)\]$)");
    static const std::regex flattened(R"(^(.+_reg)_([0-9]+)_$)");

    struct Member {
        std::string name;
        int position;
    };
    std::map<std::string, std::vector<Member>> groups;
    std::map<std::string, BusInfo> out;

    for (const auto& name : ff_names) {
        out[name] = BusInfo{};
        std::smatch m;
        if (std::regex_match(name, m, bracket) || std::regex_match(name, m, flattened))
            groups[m[1].str()].push_back({name, std::stoi(m[2].str())});
    }
    for (const auto& [base, members] : groups) {
        if (members.size() < 2)
            continue;
        for (const auto& member : members)
            out[member.name] =
                BusInfo{true, member.position, static_cast<int>(members.size())};
    }
    return out;
}

FeatureVector extract_structural(const FfAdjacency& adj,
                                 const std::map<std::string, BusInfo>& buses,
                                 const std::string& ff) {
    const int i = adj.at(ff);
    FeatureVector fv;
    fv.ff_name = ff;
    fv.ff_fan_in = static_cast<int>(adj.pred_ffs[i].size());
    fv.ff_fan_out = static_cast<int>(adj.succ_ffs[i].size());
    fv.total_ffs_influencing = static_cast<int>(influencing_ffs(adj, ff).size());
    fv.total_ffs_influenced = static_cast<int>(influenced_ffs(adj, ff).size());
    fv.pi_connections = static_cast<int>(adj.pis[i].size());
    fv.po_connections = static_cast<int>(adj.pos[i].size());

    const StageDepths from_pi = stage_depths(adj, ff, Endpoint::PrimaryInputs);
    if (from_pi.connected) {
        fv.pi_proximity_min = from_pi.min;
        fv.pi_proximity_avg = from_pi.avg;
        fv.pi_proximity_max = from_pi.max;
    }
    const StageDepths to_po = stage_depths(adj, ff, Endpoint::PrimaryOutputs);
    if (to_po.connected) {
        fv.po_proximity_min = to_po.min;
        fv.po_proximity_avg = to_po.avg;
        fv.po_proximity_max = to_po.max;
    }

    const BusInfo& bus = buses.at(ff);
    fv.part_of_bus = bus.member ? 1 : 0;
    fv.bus_position = bus.position;
    fv.bus_length = bus.length;

    fv.constant_driver_connections = adj.constant_inputs[i];
    auto [has_loop, depth] = feedback_loop(adj, ff);
    fv.has_feedback_loop = has_loop ? 1 : 0;
    fv.feedback_loop_depth = depth;
    return fv;
}

void extract_synthesis(const FfAdjacency& adj, const std::string& ff, FeatureVector& fv) {
    const int i = adj.at(ff);
    fv.drive_strength = adj.drive_strength[i];
    fv.comb_fan_in = adj.comb_fan_in[i];
    fv.comb_fan_out = adj.comb_fan_out[i];
    fv.comb_path_depth = adj.comb_path_depth[i];
}

void extract_dynamic(const ActivityTrace& activity, const std::string& ff,
                     FeatureVector& fv) {
    auto it = std::find(activity.ff_names.begin(), activity.ff_names.end(), ff);
    if (it == activity.ff_names.end())
        throw MissingTraceError("activity trace has no samples for '" + ff + "'");
    const auto& samples = activity.samples[it - activity.ff_names.begin()];
    if (samples.empty())
        throw MissingTraceError("activity trace for '" + ff + "' is empty");

    std::size_t zeros = 0;
    int changes = 0;
    for (std::size_t c = 0; c < samples.size(); ++c) {
        zeros += samples[c] == 0;
        if (c > 0 && samples[c] != samples[c - 1])
            ++changes;
    }
    fv.ratio_at_0 = static_cast<double>(zeros) / static_cast<double>(samples.size());
    fv.ratio_at_1 = 1.0 - fv.ratio_at_0;
    fv.state_changes = changes;
}

std::vector<FeatureVector> extract_all(const Netlist& nl, const CircuitGraph& g,
                                       const ActivityTrace& activity) {
    const FfAdjacency adj = build_ff_adjacency(nl, g);
    const auto buses = bus_detect(adj.ffs);
    std::vector<FeatureVector> out;
    for (const auto& ff : adj.ffs) {
        FeatureVector fv = extract_structural(adj, buses, ff);
        extract_synthesis(adj, ff, fv);
        extract_dynamic(activity, ff, fv);
        for (double v : fv.as_row())
            if (std::isnan(v))
                throw FdrError("NaN feature for flip-flop '" + ff + "'");
        out.push_back(std::move(fv));
    }
    return out;
}

void write_features_csv(const std::string& path, const std::vector<FeatureVector>& rows) {
    std::string text = "ff_name";
    for (const char* name : kFeatureNames)
        text += std::string(",") + name;
    text += "\n";
    for (const auto& fv : rows) {
        text += fv.ff_name;
        for (double v : fv.as_row())
            text += "," + format_double(v);
        text += "\n";
    }
    write_text_file(path, text);
}

std::vector<NamedRow> read_features_csv(const std::string& path) {
    CsvTable csv = read_csv(path);
    if (csv.header.size() != static_cast<std::size_t>(kFeatureCount) + 1 ||
        csv.header[0] != "ff_name")
        throw ColumnMismatchError("unexpected feature csv header in " + path);
    for (int i = 0; i < kFeatureCount; ++i)
        if (csv.header[i + 1] != kFeatureNames[i])
            throw ColumnMismatchError("feature column " + std::to_string(i + 1) +
                                      " is '" + csv.header[i + 1] + "', expected '" +
                                      kFeatureNames[i] + "'");
    std::vector<NamedRow> out;
    for (const auto& row : csv.rows) {
        if (row.size() != csv.header.size())
            throw ColumnMismatchError("short feature row in " + path);
        NamedRow r;
        r.name = row[0];
        for (int i = 0; i < kFeatureCount; ++i)
            r.values[i] = parse_double(row[i + 1], path);
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace fdr
