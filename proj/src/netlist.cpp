#include "fdr/netlist.hpp"

#include <algorithm>
#include <array>
#include <fstream>

#include "fdr/textio.hpp"

namespace fdr {
namespace {

struct TypeInfo {
    const char* name;
    CellType type;
    std::vector<std::string> inputs; // data inputs; FFs additionally take CK
    const char* output;
};

const std::vector<TypeInfo>& type_table() {
    static const std::vector<TypeInfo> table = {
        {"BUF", CellType::Buf, {"A"}, "Y"},
        {"NOT", CellType::Not, {"A"}, "Y"},
        {"AND2", CellType::And2, {"A", "B"}, "Y"},
        {"AND3", CellType::And3, {"A", "B", "C"}, "Y"},
        {"AND4", CellType::And4, {"A", "B", "C", "D"}, "Y"},
        {"OR2", CellType::Or2, {"A", "B"}, "Y"},
        {"OR3", CellType::Or3, {"A", "B", "C"}, "Y"},
        {"OR4", CellType::Or4, {"A", "B", "C", "D"}, "Y"},
        {"NAND2", CellType::Nand2, {"A", "B"}, "Y"},
        {"NAND3", CellType::Nand3, {"A", "B", "C"}, "Y"},
        {"NAND4", CellType::Nand4, {"A", "B", "C", "D"}, "Y"},
        {"NOR2", CellType::Nor2, {"A", "B"}, "Y"},
        {"NOR3", CellType::Nor3, {"A", "B", "C"}, "Y"},
        {"NOR4", CellType::Nor4, {"A", "B", "C", "D"}, "Y"},
        {"XOR2", CellType::Xor2, {"A", "B"}, "Y"},
        {"XNOR2", CellType::Xnor2, {"A", "B"}, "Y"},
        {"MUX2", CellType::Mux2, {"A", "B", "S"}, "Y"},
        {"TIE0", CellType::Tie0, {}, "Y"},
        {"TIE1", CellType::Tie1, {}, "Y"},
        {"DFF", CellType::Dff, {"D"}, "Q"},
        {"DFFR", CellType::Dffr, {"D", "RN"}, "Q"},
    };
    return table;
}

const TypeInfo& info_for(CellType t) {
    for (const auto& ti : type_table())
        if (ti.type == t)
            return ti;
    throw UnknownCellTypeError("unmapped cell type");
}

constexpr const char* kClockPin = "CK";

} // namespace

bool is_flip_flop(CellType t) { return t == CellType::Dff || t == CellType::Dffr; }
bool is_constant(CellType t) { return t == CellType::Tie0 || t == CellType::Tie1; }
bool is_combinational(CellType t) { return !is_flip_flop(t) && !is_constant(t); }

const std::vector<std::string>& input_pins(CellType t) { return info_for(t).inputs; }

const std::string& output_pin(CellType t) {
    static std::map<CellType, std::string> cache;
    auto it = cache.find(t);
    if (it == cache.end())
        it = cache.emplace(t, info_for(t).output).first;
    return it->second;
}

const std::string& cell_type_name(CellType t) {
    static std::map<CellType, std::string> cache;
    auto it = cache.find(t);
    if (it == cache.end())
        it = cache.emplace(t, info_for(t).name).first;
    return it->second;
}

const Cell& Netlist::cell(const std::string& name) const {
    auto it = cell_index.find(name);
    if (it == cell_index.end())
        throw UnknownFlipFlopError("no cell named '" + name + "'");
    return cells[it->second];
}

std::vector<std::string> Netlist::flip_flops() const {
    std::vector<std::string> out;
    for (const auto& c : cells)
        if (is_flip_flop(c.type))
            out.push_back(c.name);
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

std::pair<CellType, int> parse_type_string(const std::string& s) {
    std::string base = s;
    int strength = 1;
    std::size_t pos = s.rfind("_X");
    if (pos != std::string::npos) {
        std::string suffix = s.substr(pos + 2);
        bool digits = !suffix.empty() &&
                      std::all_of(suffix.begin(), suffix.end(),
                                  [](char c) { return c >= '0' && c <= '9'; });
        if (digits) {
            base = s.substr(0, pos);
            strength = std::stoi(suffix);
            if (strength != 1 && strength != 2 && strength != 4)
                throw UnknownCellTypeError("unsupported drive strength in type '" + s +
                                           "' (expected _X1, _X2 or _X4)");
        }
    }
    for (const auto& ti : type_table())
        if (base == ti.name)
            return {ti.type, strength};
    throw UnknownCellTypeError("unknown cell type '" + s + "'");
}

void require_keys(const Json& obj, const std::vector<std::string>& required,
                  const std::vector<std::string>& optional, const std::string& what) {
    for (const auto& k : required)
        if (!obj.contains(k))
            throw SchemaError(what + ": missing key '" + k + "'");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        const std::string& k = it.key();
        if (std::find(required.begin(), required.end(), k) == required.end() &&
            std::find(optional.begin(), optional.end(), k) == optional.end())
            throw SchemaError(what + ": unknown key '" + k + "'");
    }
}

void add_sink(Netlist& nl, const std::string& net, PortRef ref) {
    nl.nets[net].name = net;
    nl.nets[net].sinks.push_back(std::move(ref));
}

void add_driver(Netlist& nl, const std::string& net,
                std::variant<std::monostate, PortRef, ConstantDriver> drv,
                const std::string& who) {
    Net& n = nl.nets[net];
    n.name = net;
    if (n.has_driver()) {
        std::string prev = "another driver";
        if (auto* p = std::get_if<PortRef>(&n.driver))
            prev = p->is_primary() ? ("primary input '" + p->pin + "'")
                                   : ("cell '" + p->owner + "' pin " + p->pin);
        else if (std::holds_alternative<ConstantDriver>(n.driver))
            prev = "a constant driver";
        throw MultiDriverError("net '" + net + "' driven by both " + prev + " and " + who);
    }
    n.driver = std::move(drv);
}

} // namespace

Netlist parse_netlist(const Json& doc) {
    if (!doc.is_object())
        throw SchemaError("netlist document must be a JSON object");
    require_keys(doc, {"name", "clock", "inputs", "outputs", "cells"},
                 {"constants", "version"}, "netlist");

    if (doc.contains("version")) {
        if (!doc["version"].is_number_integer() || doc["version"].get<int>() != 1)
            throw SchemaError("unsupported netlist schema version");
    }
    if (!doc["name"].is_string() || !doc["clock"].is_string())
        throw SchemaError("'name' and 'clock' must be strings");

    Netlist nl;
    nl.name = doc["name"].get<std::string>();
    nl.clock_net = doc["clock"].get<std::string>();
    if (nl.clock_net.empty())
        throw MissingClockError("netlist declares no clock net");

    auto read_port_list = [&](const char* key) {
        if (!doc[key].is_array())
            throw SchemaError(std::string("'") + key + "' must be an array of net names");
        std::vector<std::string> out;
        for (const auto& v : doc[key]) {
            if (!v.is_string())
                throw SchemaError(std::string("'") + key + "' entries must be strings");
            out.push_back(v.get<std::string>());
        }
        return out;
    };
    nl.primary_inputs = read_port_list("inputs");
    nl.primary_outputs = read_port_list("outputs");

    // The clock is its own source; tolerate it being listed under inputs but
    // keep the data-input list clean.
    std::erase(nl.primary_inputs, nl.clock_net);
    for (const auto& list : {nl.primary_inputs, nl.primary_outputs}) {
        std::vector<std::string> sorted(list);
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw SchemaError("duplicate entry in port list");
    }

    if (doc.contains("constants")) {
        if (!doc["constants"].is_object())
            throw SchemaError("'constants' must map net names to 0 or 1");
        for (auto it = doc["constants"].begin(); it != doc["constants"].end(); ++it) {
            if (!it.value().is_number_integer())
                throw SchemaError("constant value for net '" + it.key() + "' must be 0 or 1");
            int v = it.value().get<int>();
            if (v != 0 && v != 1)
                throw SchemaError("constant value for net '" + it.key() + "' must be 0 or 1");
            nl.constants[it.key()] = static_cast<std::uint8_t>(v);
        }
    }

    if (!doc["cells"].is_array())
        throw SchemaError("'cells' must be an array");
    for (const auto& cj : doc["cells"]) {
        if (!cj.is_object())
            throw SchemaError("cell entries must be objects");
        require_keys(cj, {"name", "type", "pins"}, {}, "cell");
        Cell c;
        if (!cj["name"].is_string() || !cj["type"].is_string() || !cj["pins"].is_object())
            throw SchemaError("cell 'name'/'type' must be strings and 'pins' an object");
        c.name = cj["name"].get<std::string>();
        if (c.name.empty())
            throw SchemaError("cell with empty name");
        auto [type, strength] = parse_type_string(cj["type"].get<std::string>());
        c.type = type;
        c.drive_strength = strength;
        for (auto it = cj["pins"].begin(); it != cj["pins"].end(); ++it) {
            if (!it.value().is_string())
                throw SchemaError("cell '" + c.name + "': pin '" + it.key() +
                                  "' must name a net");
            c.pins[it.key()] = it.value().get<std::string>();
        }

        std::vector<std::string> expected = input_pins(c.type);
        if (is_flip_flop(c.type))
            expected.push_back(kClockPin);
        expected.push_back(output_pin(c.type));
        for (const auto& pin : expected)
            if (!c.pins.count(pin))
                throw SchemaError("cell '" + c.name + "' (" + cell_type_name(c.type) +
                                  "): missing pin '" + pin + "'");
        if (c.pins.size() != expected.size())
            throw SchemaError("cell '" + c.name + "' (" + cell_type_name(c.type) +
                              "): unexpected pin present");

        if (nl.cell_index.count(c.name))
            throw SchemaError("duplicate cell name '" + c.name + "'");
        nl.cell_index[c.name] = nl.cells.size();
        nl.cells.push_back(std::move(c));
    }

    // Connectivity. Sources first so multi-driver conflicts name both sides.
    add_driver(nl, nl.clock_net, PortRef{"", nl.clock_net, true}, "the clock source");
    for (const auto& pi : nl.primary_inputs)
        add_driver(nl, pi, PortRef{"", pi, true}, "primary input '" + pi + "'");
    for (const auto& [net, value] : nl.constants)
        add_driver(nl, net, ConstantDriver{value}, "a constant");

    for (const auto& c : nl.cells) {
        const std::string& out = output_pin(c.type);
        add_driver(nl, c.pins.at(out), PortRef{c.name, out, true},
                   "cell '" + c.name + "' pin " + out);
        for (const auto& pin : input_pins(c.type))
            add_sink(nl, c.pins.at(pin), PortRef{c.name, pin, false});
        if (is_flip_flop(c.type))
            add_sink(nl, c.pins.at(kClockPin), PortRef{c.name, kClockPin, false});
    }
    for (const auto& po : nl.primary_outputs)
        add_sink(nl, po, PortRef{"", po, false});

    for (const auto& [name, net] : nl.nets)
        if (!net.has_driver())
            throw SchemaError("net '" + name + "' has no driver");

    // Clock discipline: one clock net feeding every flip-flop clock pin and
    // nothing else.
    for (const auto& c : nl.cells) {
        if (!is_flip_flop(c.type))
            continue;
        const std::string& ck = c.pins.at(kClockPin);
        if (ck != nl.clock_net)
            throw MissingClockError("flip-flop '" + c.name + "' is clocked by net '" + ck +
                                    "', expected clock net '" + nl.clock_net + "'");
    }
    for (const auto& sink : nl.nets.at(nl.clock_net).sinks) {
        if (sink.is_primary())
            throw SchemaError("clock net '" + nl.clock_net + "' cannot be a primary output");
        if (sink.pin != kClockPin)
            throw SchemaError("clock net '" + nl.clock_net + "' feeds data pin " + sink.pin +
                              " of cell '" + sink.owner + "'");
    }

    return nl;
}

Netlist load_netlist(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open netlist file: " + path);
    Json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("netlist is not valid JSON: " + std::string(e.what()));
    }
    return parse_netlist(doc);
}

Json serialize_netlist(const Netlist& nl) {
    Json doc;
    doc["version"] = 1;
    doc["name"] = nl.name;
    doc["clock"] = nl.clock_net;
    doc["inputs"] = nl.primary_inputs;
    doc["outputs"] = nl.primary_outputs;
    Json cells = Json::array();
    for (const auto& c : nl.cells) {
        Json cj;
        cj["name"] = c.name;
        std::string type = cell_type_name(c.type);
        if (c.drive_strength != 1)
            type += "_X" + std::to_string(c.drive_strength);
        cj["type"] = type;
        cj["pins"] = c.pins;
        cells.push_back(std::move(cj));
    }
    doc["cells"] = std::move(cells);
    if (!nl.constants.empty()) {
        Json cj;
        for (const auto& [net, v] : nl.constants)
            cj[net] = static_cast<int>(v);
        doc["constants"] = std::move(cj);
    }
    return doc;
}

NetlistReport describe_netlist(const Netlist& nl) {
    NetlistReport r;
    r.cells = nl.cells.size();
    r.flip_flops = nl.flip_flops().size();
    r.nets = nl.nets.size();
    r.primary_inputs = nl.primary_inputs.size();
    r.primary_outputs = nl.primary_outputs.size();
    r.constant_nets = nl.constants.size();
    for (const auto& [name, net] : nl.nets)
        if (net.sinks.empty())
            r.dangling_nets.push_back(name);
    return r;
}

} // namespace fdr
