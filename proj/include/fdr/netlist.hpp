#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fdr/errors.hpp"

#include <nlohmann/json.hpp>

namespace fdr {

// Insertion-ordered JSON keeps emitted documents stable and readable.
using Json = nlohmann::ordered_json;

// Closed gate library. Drive strength is not part of the enum; it is parsed
// from the _X<n> suffix of the type string.
enum class CellType {
    Buf,
    Not,
    And2,
    And3,
    And4,
    Or2,
    Or3,
    Or4,
    Nand2,
    Nand3,
    Nand4,
    Nor2,
    Nor3,
    Nor4,
    Xor2,
    Xnor2,
    Mux2,
    Tie0,
    Tie1,
    Dff,
    Dffr,
};

bool is_flip_flop(CellType t);
bool is_constant(CellType t);
bool is_combinational(CellType t);

// Input pin names in evaluation order, then the single output pin.
const std::vector<std::string>& input_pins(CellType t);
const std::string& output_pin(CellType t);
const std::string& cell_type_name(CellType t);

struct Cell {
    std::string name;
    CellType type;
    int drive_strength = 1; // 1, 2 or 4
    // pin name -> net name; covers every library pin of the type exactly once
    std::map<std::string, std::string> pins;
};

// A connection point. owner is a cell instance name, or empty for a primary
// port (then pin holds the port name). direction is the data flow at the
// point: out drives the net, in reads it.
struct PortRef {
    std::string owner;
    std::string pin;
    bool drives = false;

    bool is_primary() const { return owner.empty(); }
    bool operator==(const PortRef&) const = default;
};

struct ConstantDriver {
    std::uint8_t value = 0;
};

struct Net {
    std::string name;
    std::variant<std::monostate, PortRef, ConstantDriver> driver;
    std::vector<PortRef> sinks;

    bool has_driver() const { return driver.index() != 0; }
    bool constant_driven() const { return std::holds_alternative<ConstantDriver>(driver); }
};

struct Netlist {
    std::string name;
    std::string clock_net;
    std::vector<std::string> primary_inputs;  // data inputs; clock is separate
    std::vector<std::string> primary_outputs; // net names observed
    std::vector<Cell> cells;
    std::map<std::string, std::uint8_t> constants; // net -> fixed value

    std::map<std::string, Net> nets;        // derived connectivity
    std::map<std::string, std::size_t> cell_index;

    const Cell& cell(const std::string& name) const;
    // Flip-flop instance names, sorted; this order defines flip-flop indices
    // everywhere downstream.
    std::vector<std::string> flip_flops() const;
};

// Parses and fully validates; throws SchemaError, MultiDriverError,
// UnknownCellTypeError or MissingClockError.
Netlist parse_netlist(const Json& doc);
Netlist load_netlist(const std::string& path);

// Canonical JSON form; parse(serialize(n)) reproduces the same netlist.
Json serialize_netlist(const Netlist& nl);

struct NetlistReport {
    std::size_t cells = 0;
    std::size_t flip_flops = 0;
    std::size_t nets = 0;
    std::size_t primary_inputs = 0;
    std::size_t primary_outputs = 0;
    std::size_t constant_nets = 0;
    std::vector<std::string> dangling_nets; // driven but never read
};

NetlistReport describe_netlist(const Netlist& nl);

} // namespace fdr
