#include "fdr/graph.hpp"

#include <algorithm>
#include <deque>
#include <functional>

namespace fdr {

int CircuitGraph::cell_node(const std::string& name) const {
    auto it = cell_node_.find(name);
    if (it == cell_node_.end())
        throw UnknownFlipFlopError("no cell named '" + name + "' in graph");
    return it->second;
}

int CircuitGraph::input_node(const std::string& name) const {
    auto it = input_node_.find(name);
    return it == input_node_.end() ? -1 : it->second;
}

int CircuitGraph::output_node(const std::string& name) const {
    auto it = output_node_.find(name);
    return it == output_node_.end() ? -1 : it->second;
}

std::size_t CircuitGraph::count_kind(NodeKind k) const {
    std::size_t n = 0;
    for (const auto& node : nodes_)
        if (node.kind == k)
            ++n;
    return n;
}

namespace {

NodeKind kind_of_cell(CellType t) {
    if (is_flip_flop(t))
        return NodeKind::FlipFlop;
    if (is_constant(t))
        return NodeKind::Constant;
    return NodeKind::Combinational;
}

// Finds one combinational cycle for the error message.
std::string find_comb_cycle(const CircuitGraph& g, const std::vector<int>& candidates) {
    enum { White, Grey, Black };
    std::vector<int> color(g.nodes().size(), White);
    std::vector<int> stack, cycle;
    std::function<bool(int)> dfs = [&](int v) {
        color[v] = Grey;
        stack.push_back(v);
        for (int w : g.out(v)) {
            if (g.nodes()[w].kind != NodeKind::Combinational)
                continue;
            if (color[w] == Grey) {
                auto it = std::find(stack.begin(), stack.end(), w);
                cycle.assign(it, stack.end());
                return true;
            }
            if (color[w] == White && dfs(w))
                return true;
        }
        stack.pop_back();
        color[v] = Black;
        return false;
    };
    for (int v : candidates)
        if (color[v] == White && dfs(v))
            break;
    std::string msg;
    for (int v : cycle)
        msg += g.nodes()[v].name + " -> ";
    if (!cycle.empty())
        msg += g.nodes()[cycle.front()].name;
    return msg;
}

} // namespace

CircuitGraph build_graph(const Netlist& nl) {
    CircuitGraph g;
    auto add_node = [&](NodeKind kind, const std::string& name, int cell) {
        g.nodes_.push_back({kind, name, cell});
        return static_cast<int>(g.nodes_.size() - 1);
    };

    for (std::size_t i = 0; i < nl.cells.size(); ++i)
        g.cell_node_[nl.cells[i].name] =
            add_node(kind_of_cell(nl.cells[i].type), nl.cells[i].name, static_cast<int>(i));
    for (const auto& pi : nl.primary_inputs)
        g.input_node_[pi] = add_node(NodeKind::PrimaryInput, pi, -1);
    for (const auto& po : nl.primary_outputs)
        g.output_node_[po] = add_node(NodeKind::PrimaryOutput, po, -1);
    std::map<std::string, int> const_net_node;
    for (const auto& [net, value] : nl.constants)
        const_net_node[net] = add_node(NodeKind::Constant, net, -1);

    g.out_.resize(g.nodes_.size());
    g.in_.resize(g.nodes_.size());

    for (const auto& [name, net] : nl.nets) {
        if (name == nl.clock_net)
            continue;
        int from = -1;
        if (const auto* ref = std::get_if<PortRef>(&net.driver))
            from = ref->is_primary() ? g.input_node_.at(ref->pin)
                                     : g.cell_node_.at(ref->owner);
        else if (std::holds_alternative<ConstantDriver>(net.driver))
            from = const_net_node.at(name);
        for (const auto& sink : net.sinks) {
            int to = sink.is_primary() ? g.output_node_.at(sink.pin)
                                       : g.cell_node_.at(sink.owner);
            g.out_[from].push_back(to);
            g.in_[to].push_back(from);
            ++g.edge_count_;
        }
    }

    // Levelize the combinational subgraph; leftovers mean a loop.
    std::vector<int> comb_nodes;
    std::vector<int> indeg(g.nodes_.size(), 0);
    for (std::size_t v = 0; v < g.nodes_.size(); ++v) {
        if (g.nodes_[v].kind != NodeKind::Combinational)
            continue;
        comb_nodes.push_back(static_cast<int>(v));
        for (int w : g.in_[v])
            if (g.nodes_[w].kind == NodeKind::Combinational)
                ++indeg[v];
    }
    std::deque<int> ready;
    for (int v : comb_nodes)
        if (indeg[v] == 0)
            ready.push_back(v);
    while (!ready.empty()) {
        int v = ready.front();
        ready.pop_front();
        g.topo_comb_.push_back(v);
        for (int w : g.out_[v])
            if (g.nodes_[w].kind == NodeKind::Combinational && --indeg[w] == 0)
                ready.push_back(w);
    }
    if (g.topo_comb_.size() != comb_nodes.size()) {
        std::vector<int> leftover;
        for (int v : comb_nodes)
            if (indeg[v] > 0)
                leftover.push_back(v);
        throw CombinationalLoopError("combinational loop: " + find_comb_cycle(g, leftover));
    }
    return g;
}

int FfAdjacency::at(const std::string& ff) const {
    auto it = index.find(ff);
    if (it == index.end())
        throw UnknownFlipFlopError("no flip-flop named '" + ff + "'");
    return it->second;
}

FfAdjacency build_ff_adjacency(const Netlist& nl, const CircuitGraph& g) {
    FfAdjacency adj;
    adj.ffs = nl.flip_flops();
    for (std::size_t i = 0; i < adj.ffs.size(); ++i)
        adj.index[adj.ffs[i]] = static_cast<int>(i);

    const std::size_t n = adj.ffs.size();
    adj.pred_ffs.resize(n);
    adj.succ_ffs.resize(n);
    adj.pis.resize(n);
    adj.pos.resize(n);
    adj.constant_inputs.assign(n, 0);
    adj.comb_fan_in.assign(n, 0);
    adj.comb_fan_out.assign(n, 0);
    adj.comb_path_depth.assign(n, 0);
    adj.drive_strength.assign(n, 1);

    // Longest combinational chain leaving each combinational cell, over the
    // already-checked DAG.
    std::vector<int> chain(g.nodes().size(), 0);
    const auto& topo = g.topo_combinational();
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        int best = 0;
        for (int w : g.out(*it))
            if (g.nodes()[w].kind == NodeKind::Combinational)
                best = std::max(best, chain[w]);
        chain[*it] = 1 + best;
    }

    for (std::size_t i = 0; i < n; ++i) {
        const int node = g.cell_node(adj.ffs[i]);
        adj.drive_strength[i] = nl.cells[g.nodes()[node].cell].drive_strength;

        int depth = 0;
        for (int w : g.out(node))
            if (g.nodes()[w].kind == NodeKind::Combinational)
                depth = std::max(depth, chain[w]);
        adj.comb_path_depth[i] = depth;

        // Output side: cross combinational cells, stop at flip-flops and
        // primary outputs.
        std::vector<int> stack{node};
        std::set<int> seen_comb;
        std::set<int> succs;
        std::set<std::string> pos;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (int w : g.out(v)) {
                switch (g.nodes()[w].kind) {
                case NodeKind::FlipFlop:
                    succs.insert(adj.index.at(g.nodes()[w].name));
                    break;
                case NodeKind::PrimaryOutput:
                    pos.insert(g.nodes()[w].name);
                    break;
                case NodeKind::Combinational:
                    if (seen_comb.insert(w).second)
                        stack.push_back(w);
                    break;
                default:
                    break;
                }
            }
        }
        adj.succ_ffs[i].assign(succs.begin(), succs.end());
        adj.pos[i].assign(pos.begin(), pos.end());
        adj.comb_fan_out[i] = static_cast<int>(seen_comb.size());

        // Input side: walk drivers, stop at flip-flops, primary inputs and
        // constant drivers.
        stack.assign({node});
        seen_comb.clear();
        std::set<int> preds;
        std::set<std::string> pis;
        std::set<std::string> consts;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (int w : g.in(v)) {
                switch (g.nodes()[w].kind) {
                case NodeKind::FlipFlop:
                    preds.insert(adj.index.at(g.nodes()[w].name));
                    break;
                case NodeKind::PrimaryInput:
                    pis.insert(g.nodes()[w].name);
                    break;
                case NodeKind::Constant:
                    consts.insert(g.nodes()[w].name);
                    break;
                case NodeKind::Combinational:
                    if (seen_comb.insert(w).second)
                        stack.push_back(w);
                    break;
                default:
                    break;
                }
            }
        }
        adj.pred_ffs[i].assign(preds.begin(), preds.end());
        adj.pis[i].assign(pis.begin(), pis.end());
        adj.constant_inputs[i] = static_cast<int>(consts.size());
        adj.comb_fan_in[i] = static_cast<int>(seen_comb.size());
    }
    return adj;
}

namespace {

std::set<int> closure(const std::vector<std::vector<int>>& edges, int start) {
    std::set<int> out;
    std::vector<int> stack(edges[start].begin(), edges[start].end());
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        if (out.insert(v).second)
            stack.insert(stack.end(), edges[v].begin(), edges[v].end());
    }
    return out;
}

} // namespace

std::set<int> influencing_ffs(const FfAdjacency& adj, const std::string& ff) {
    return closure(adj.pred_ffs, adj.at(ff));
}

std::set<int> influenced_ffs(const FfAdjacency& adj, const std::string& ff) {
    return closure(adj.succ_ffs, adj.at(ff));
}

StageDepths stage_depths(const FfAdjacency& adj, const std::string& ff, Endpoint which) {
    const int start = adj.at(ff);
    const bool forward = which == Endpoint::PrimaryOutputs;
    const auto& edges = forward ? adj.succ_ffs : adj.pred_ffs;
    const auto& ports = forward ? adj.pos : adj.pis;

    // BFS over flip-flop hops; the first time a port shows up fixes its
    // shortest depth because distances are non-decreasing.
    std::map<std::string, int> port_depth;
    std::vector<int> dist(adj.ffs.size(), -1);
    std::deque<int> queue{start};
    dist[start] = 0;
    while (!queue.empty()) {
        int v = queue.front();
        queue.pop_front();
        for (const auto& p : ports[v])
            port_depth.emplace(p, dist[v] + 1);
        for (int w : edges[v])
            if (dist[w] < 0) {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
    }

    StageDepths out;
    if (port_depth.empty())
        return out;
    out.connected = true;
    out.min = out.max = port_depth.begin()->second;
    double sum = 0.0;
    for (const auto& [name, d] : port_depth) {
        out.min = std::min(out.min, d);
        out.max = std::max(out.max, d);
        sum += d;
    }
    out.avg = sum / static_cast<double>(port_depth.size());
    return out;
}

std::pair<bool, int> feedback_loop(const FfAdjacency& adj, const std::string& ff) {
    const int start = adj.at(ff);
    std::vector<int> dist(adj.ffs.size(), -1);
    std::deque<int> queue;
    for (int w : adj.succ_ffs[start]) {
        if (w == start)
            return {true, 1};
        if (dist[w] < 0) {
            dist[w] = 1;
            queue.push_back(w);
        }
    }
    while (!queue.empty()) {
        int v = queue.front();
        queue.pop_front();
        for (int w : adj.succ_ffs[v]) {
            if (w == start)
                return {true, dist[v] + 1};
            if (dist[w] < 0) {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    return {false, -1};
}

} // namespace fdr
