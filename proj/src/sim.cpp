#include "fdr/sim.hpp"

#include <algorithm>
#include <map>

#include "fdr/textio.hpp"

namespace fdr {

CycleRange parse_cycle_range(const std::string& text) {
    std::size_t pos = text.find("..");
    if (pos == std::string::npos)
        throw ConfigError("cycle range must look like A..B, got '" + text + "'");
    CycleRange r;
    r.begin = static_cast<int>(parse_long(text.substr(0, pos), "cycle range"));
    r.end = static_cast<int>(parse_long(text.substr(pos + 2), "cycle range"));
    if (r.begin < 0 || r.end < r.begin)
        throw ConfigError("empty or negative cycle range '" + text + "'");
    return r;
}

Stimulus load_stimulus(const std::string& path, const Netlist& nl,
                       std::optional<CycleRange> observe) {
    CsvTable csv = read_csv(path);
    Stimulus stim;

    std::size_t first_col = 0;
    if (!csv.header.empty() && strip(csv.header[0]) == "cycle")
        first_col = 1;
    for (std::size_t i = first_col; i < csv.header.size(); ++i)
        stim.pi_names.push_back(strip(csv.header[i]));

    std::vector<std::string> want(nl.primary_inputs);
    std::vector<std::string> have(stim.pi_names);
    std::sort(want.begin(), want.end());
    std::sort(have.begin(), have.end());
    if (want != have) {
        std::string msg = "stimulus columns do not match the circuit's data inputs;";
        for (const auto& w : want)
            if (!std::binary_search(have.begin(), have.end(), w))
                msg += " missing '" + w + "'";
        for (const auto& h : have)
            if (!std::binary_search(want.begin(), want.end(), h))
                msg += " unexpected '" + h + "'";
        throw StimulusError(msg);
    }

    for (const auto& row : csv.rows) {
        if (row.size() != csv.header.size())
            throw StimulusError("stimulus row " + std::to_string(stim.rows.size()) +
                                " has " + std::to_string(row.size()) + " columns, expected " +
                                std::to_string(csv.header.size()));
        std::vector<std::uint8_t> bits;
        for (std::size_t i = first_col; i < row.size(); ++i) {
            const std::string v = strip(row[i]);
            if (v != "0" && v != "1")
                throw StimulusError("stimulus value '" + v + "' is not 0 or 1");
            bits.push_back(v == "1");
        }
        stim.rows.push_back(std::move(bits));
    }
    if (stim.rows.empty())
        throw StimulusError("stimulus has no cycles: " + path);

    stim.observe = observe.value_or(CycleRange{0, stim.cycles() - 1});
    if (stim.observe.begin < 0 || stim.observe.end >= stim.cycles())
        throw CycleOutOfRangeError("observe window " + std::to_string(stim.observe.begin) +
                                   ".." + std::to_string(stim.observe.end) +
                                   " leaves the simulated range 0.." +
                                   std::to_string(stim.cycles() - 1));
    return stim;
}

Simulator::Simulator(const Netlist& nl, const CircuitGraph& g) {
    std::map<std::string, int> net_id;
    for (const auto& [name, net] : nl.nets)
        net_id[name] = static_cast<int>(num_nets_++);

    for (int node : g.topo_combinational()) {
        const Cell& c = nl.cells[g.nodes()[node].cell];
        Gate gate;
        gate.op = c.type;
        const auto& ins = input_pins(c.type);
        for (std::size_t i = 0; i < ins.size(); ++i)
            gate.in[i] = net_id.at(c.pins.at(ins[i]));
        gate.out = net_id.at(c.pins.at(output_pin(c.type)));
        program_.push_back(gate);
    }

    ff_names_ = nl.flip_flops();
    for (const auto& name : ff_names_) {
        const Cell& c = nl.cell(name);
        FlipFlop ff;
        ff.d = net_id.at(c.pins.at("D"));
        if (c.type == CellType::Dffr)
            ff.rn = net_id.at(c.pins.at("RN"));
        ff.q = net_id.at(c.pins.at("Q"));
        ffs_.push_back(ff);
    }

    for (const auto& [net, value] : nl.constants)
        preset_.emplace_back(net_id.at(net), value);
    for (const auto& c : nl.cells)
        if (is_constant(c.type))
            preset_.emplace_back(net_id.at(c.pins.at("Y")),
                                 c.type == CellType::Tie1 ? 1 : 0);

    for (const auto& pi : nl.primary_inputs) {
        pi_nets_.push_back(net_id.at(pi));
        pi_names_.push_back(pi);
    }
    for (const auto& po : nl.primary_outputs) {
        po_nets_.push_back(net_id.at(po));
        po_names_.push_back(po);
    }
}

GoldenTrace Simulator::run_golden(const Stimulus& stim, ActivityTrace* activity) const {
    return run(stim, -1, -1, activity);
}

GoldenTrace Simulator::run_with_injection(const Stimulus& stim, const std::string& target_ff,
                                          int flip_cycle) const {
    auto it = std::lower_bound(ff_names_.begin(), ff_names_.end(), target_ff);
    if (it == ff_names_.end() || *it != target_ff)
        throw UnknownFlipFlopError("no flip-flop named '" + target_ff + "'");
    if (flip_cycle < 0 || flip_cycle >= stim.cycles())
        throw CycleOutOfRangeError("flip cycle " + std::to_string(flip_cycle) +
                                   " outside simulated range 0.." +
                                   std::to_string(stim.cycles() - 1));
    return run(stim, static_cast<int>(it - ff_names_.begin()), flip_cycle, nullptr);
}

GoldenTrace Simulator::run(const Stimulus& stim, int flip_ff, int flip_cycle,
                           ActivityTrace* activity) const {
    std::vector<int> column(pi_nets_.size(), -1);
    for (std::size_t i = 0; i < pi_nets_.size(); ++i) {
        auto it = std::find(stim.pi_names.begin(), stim.pi_names.end(), pi_names_[i]);
        column[i] = static_cast<int>(it - stim.pi_names.begin());
    }

    GoldenTrace trace;
    trace.po_names = po_names_;
    trace.window = stim.observe;
    trace.values.assign(po_names_.size(),
                        std::vector<std::uint8_t>(stim.observe.length(), 0));
    if (activity) {
        activity->ff_names = ff_names_;
        activity->samples.assign(ff_names_.size(),
                                 std::vector<std::uint8_t>(stim.cycles(), 0));
    }

    std::vector<std::uint8_t> nets(num_nets_, 0);
    std::vector<std::uint8_t> state(ffs_.size(), 0);
    std::vector<std::uint8_t> next(ffs_.size(), 0);
    for (const auto& [net, v] : preset_)
        nets[net] = v;

    for (int cycle = 0; cycle < stim.cycles(); ++cycle) {
        for (std::size_t i = 0; i < pi_nets_.size(); ++i)
            nets[pi_nets_[i]] = stim.rows[cycle][column[i]];
        for (std::size_t f = 0; f < ffs_.size(); ++f)
            nets[ffs_[f].q] = state[f];

        for (const Gate& gate : program_) {
            const auto* in = gate.in;
            std::uint8_t v = 0;
            switch (gate.op) {
            case CellType::Buf: v = nets[in[0]]; break;
            case CellType::Not: v = !nets[in[0]]; break;
            case CellType::And2: v = nets[in[0]] & nets[in[1]]; break;
            case CellType::And3: v = nets[in[0]] & nets[in[1]] & nets[in[2]]; break;
            case CellType::And4:
                v = nets[in[0]] & nets[in[1]] & nets[in[2]] & nets[in[3]];
                break;
            case CellType::Or2: v = nets[in[0]] | nets[in[1]]; break;
            case CellType::Or3: v = nets[in[0]] | nets[in[1]] | nets[in[2]]; break;
            case CellType::Or4:
                v = nets[in[0]] | nets[in[1]] | nets[in[2]] | nets[in[3]];
                break;
            case CellType::Nand2: v = !(nets[in[0]] & nets[in[1]]); break;
            case CellType::Nand3: v = !(nets[in[0]] & nets[in[1]] & nets[in[2]]); break;
            case CellType::Nand4:
                v = !(nets[in[0]] & nets[in[1]] & nets[in[2]] & nets[in[3]]);
                break;
            case CellType::Nor2: v = !(nets[in[0]] | nets[in[1]]); break;
            case CellType::Nor3: v = !(nets[in[0]] | nets[in[1]] | nets[in[2]]); break;
            case CellType::Nor4:
                v = !(nets[in[0]] | nets[in[1]] | nets[in[2]] | nets[in[3]]);
                break;
            case CellType::Xor2: v = nets[in[0]] ^ nets[in[1]]; break;
            case CellType::Xnor2: v = !(nets[in[0]] ^ nets[in[1]]); break;
            case CellType::Mux2: v = nets[in[2]] ? nets[in[1]] : nets[in[0]]; break;
            default: break; // constants and flip-flops never enter the program
            }
            nets[gate.out] = v;
        }

        if (stim.observe.contains(cycle))
            for (std::size_t p = 0; p < po_nets_.size(); ++p)
                trace.values[p][cycle - stim.observe.begin] = nets[po_nets_[p]];
        if (activity)
            for (std::size_t f = 0; f < ffs_.size(); ++f)
                activity->samples[f][cycle] = state[f];

        for (std::size_t f = 0; f < ffs_.size(); ++f) {
            const FlipFlop& ff = ffs_[f];
            std::uint8_t d = nets[ff.d];
            if (ff.rn >= 0 && nets[ff.rn] == 0)
                d = 0; // reset pin wins at the edge
            next[f] = d;
        }
        if (cycle == flip_cycle)
            next[flip_ff] ^= 1;
        state.swap(next);
    }
    return trace;
}

} // namespace fdr
