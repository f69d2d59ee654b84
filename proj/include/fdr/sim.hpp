#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fdr/graph.hpp"
#include "fdr/netlist.hpp"

namespace fdr {

// Inclusive cycle range, written "A..B".
struct CycleRange {
    int begin = 0;
    int end = 0;

    bool contains(int c) const { return c >= begin && c <= end; }
    int length() const { return end - begin + 1; }
    bool operator==(const CycleRange&) const = default;
};

CycleRange parse_cycle_range(const std::string& text);

// Per-cycle primary input vectors. Values are strictly 0/1; every data input
// of the circuit gets exactly one column. An optional leading "cycle" column
// is accepted (and required to express stimulus for circuits without data
// inputs).
struct Stimulus {
    std::vector<std::string> pi_names;
    std::vector<std::vector<std::uint8_t>> rows; // rows[cycle][pi]
    CycleRange observe;

    int cycles() const { return static_cast<int>(rows.size()); }
};

Stimulus load_stimulus(const std::string& path, const Netlist& nl,
                       std::optional<CycleRange> observe = std::nullopt);

// Primary output values inside the observe window; values[po][c - window.begin].
struct GoldenTrace {
    std::vector<std::string> po_names;
    CycleRange window;
    std::vector<std::vector<std::uint8_t>> values;

    bool operator==(const GoldenTrace&) const = default;
};

// Flip-flop states over all cycles; samples[ff][cycle] is the state the
// flip-flop held during that cycle.
struct ActivityTrace {
    std::vector<std::string> ff_names;
    std::vector<std::vector<std::uint8_t>> samples;
};

// Two-valued cycle-based engine. Each cycle: apply inputs, settle the
// levelized combinational logic in one pass, sample outputs and states, then
// clock every flip-flop at once. All state starts at 0. A fault injection
// inverts the target's state right after the clock edge that ends flip_cycle,
// so downstream logic first sees the corrupted value in the following cycle.
class Simulator {
  public:
    Simulator(const Netlist& nl, const CircuitGraph& g);

    GoldenTrace run_golden(const Stimulus& stim, ActivityTrace* activity = nullptr) const;
    GoldenTrace run_with_injection(const Stimulus& stim, const std::string& target_ff,
                                   int flip_cycle) const;

    const std::vector<std::string>& ff_names() const { return ff_names_; }

  private:
    GoldenTrace run(const Stimulus& stim, int flip_ff, int flip_cycle,
                    ActivityTrace* activity) const;

    struct Gate {
        CellType op;
        int in[4] = {-1, -1, -1, -1};
        int out = -1;
    };
    struct FlipFlop {
        int d = -1;
        int rn = -1; // -1 when the cell has no reset pin
        int q = -1;
    };

    std::size_t num_nets_ = 0;
    std::vector<Gate> program_;                       // levelized order
    std::vector<FlipFlop> ffs_;                       // ff index order
    std::vector<std::string> ff_names_;               // sorted instance names
    std::vector<std::pair<int, std::uint8_t>> preset_; // constant nets
    std::vector<int> pi_nets_;                        // by netlist input order
    std::vector<std::string> pi_names_;
    std::vector<int> po_nets_;
    std::vector<std::string> po_names_;
};

} // namespace fdr
