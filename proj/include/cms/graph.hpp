// Directed multigraph and code windows.
//
// A system's combinatorial skeleton is a finite directed multigraph: vertices
// 1..N and edges 0..E-1, each edge e carrying an initial vertex i(e) and a
// terminal vertex t(e).  Parallel edges and loops are allowed.  A code window
// is a finite block of edge symbols occupying positions m..0 on the integer
// line (m <= 0), stored in chronological order: symbols[0] sits at position m,
// symbols.back() at position m + size - 1.  A window is admissible when every
// consecutive pair chains through the graph, t(symbols[k]) == i(symbols[k+1]),
// which is exactly the condition that makes the corresponding map composition
// well-defined region-to-region.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cms/errors.hpp"

namespace cms {

struct DirectedMultigraph {
    struct Edge {
        int initial  = 0;  // 1-based vertex id
        int terminal = 0;  // 1-based vertex id
    };

    int vertex_count = 0;
    std::vector<Edge> edges;

    int edge_count() const { return static_cast<int>(edges.size()); }
    int initial(int e) const { return edges[static_cast<std::size_t>(e)].initial; }
    int terminal(int e) const { return edges[static_cast<std::size_t>(e)].terminal; }

    bool valid_edge(int e) const { return e >= 0 && e < edge_count(); }

    // Throws ConfigError when a vertex id is out of 1..vertex_count or the
    // graph is empty.
    void check() const {
        if (vertex_count < 1)
            throw ConfigError("graph: vertex_count must be >= 1, got " +
                              std::to_string(vertex_count));
        if (edges.empty()) throw ConfigError("graph: needs at least one edge");
        for (std::size_t k = 0; k < edges.size(); ++k) {
            const Edge& ed = edges[k];
            if (ed.initial < 1 || ed.initial > vertex_count ||
                ed.terminal < 1 || ed.terminal > vertex_count)
                throw ConfigError("graph: edge " + std::to_string(k) +
                                  " touches vertex outside 1.." +
                                  std::to_string(vertex_count));
        }
    }
};

// Convenience: N = 1 graph with `edge_count` loop edges (fully admissible).
inline DirectedMultigraph single_vertex_graph(int edge_count) {
    DirectedMultigraph g;
    g.vertex_count = 1;
    g.edges.assign(static_cast<std::size_t>(edge_count), {1, 1});
    return g;
}

struct CodeWindow {
    long long start_index = 0;   // m <= 0
    std::vector<int> symbols;    // chronological: symbols[0] at position m

    long long end_index() const {
        return start_index + static_cast<long long>(symbols.size()) - 1;
    }
    std::size_t size() const { return symbols.size(); }

    // Throws ConfigError on a positive start index or an end past 0.
    void check_indices() const {
        if (start_index > 0)
            throw ConfigError("window: start index must be <= 0, got " +
                              std::to_string(start_index));
        if (!symbols.empty() && end_index() > 0)
            throw ConfigError("window: runs past position 0 (start " +
                              std::to_string(start_index) + ", length " +
                              std::to_string(symbols.size()) + ")");
    }
};

// Window whose symbols end at position 0 (the usual layout for coding).
inline CodeWindow window_ending_at_zero(std::vector<int> symbols) {
    CodeWindow w;
    w.start_index = 1 - static_cast<long long>(symbols.size());
    w.symbols = std::move(symbols);
    return w;
}

// True when every consecutive symbol pair chains through the graph.  Empty
// and single-symbol windows are trivially admissible.  Throws ConfigError on
// an unknown edge id.
inline bool is_admissible(const DirectedMultigraph& g, const CodeWindow& w) {
    for (int e : w.symbols)
        if (!g.valid_edge(e))
            throw ConfigError("window: unknown edge id " + std::to_string(e));
    for (std::size_t k = 0; k + 1 < w.symbols.size(); ++k)
        if (g.terminal(w.symbols[k]) != g.initial(w.symbols[k + 1])) return false;
    return true;
}

// All words of the given length in lexicographic symbol order, optionally
// filtered to admissible ones.  Guarded: refuses when edge_count^length
// exceeds 10^7 candidates.  Returned windows end at position 0.
inline std::vector<CodeWindow> enumerate_words(const DirectedMultigraph& g,
                                               int length,
                                               bool admissible_only) {
    if (length < 1) throw ConfigError("enumerate_words: length must be >= 1");
    const double budget = 1e7;
    double count = 1.0;
    for (int k = 0; k < length; ++k) {
        count *= static_cast<double>(g.edge_count());
        if (count > budget)
            throw CapacityError("enumerate_words: " +
                                std::to_string(g.edge_count()) + "^" +
                                std::to_string(length) + " exceeds 1e7 words");
    }

    std::vector<CodeWindow> out;
    std::vector<int> word(static_cast<std::size_t>(length), 0);
    for (;;) {
        bool keep = true;
        if (admissible_only) {
            for (std::size_t k = 0; k + 1 < word.size(); ++k)
                if (g.terminal(word[k]) != g.initial(word[k + 1])) {
                    keep = false;
                    break;
                }
        }
        if (keep) out.push_back(window_ending_at_zero(word));
        // lexicographic odometer, most significant digit first
        int pos = length - 1;
        while (pos >= 0) {
            if (++word[static_cast<std::size_t>(pos)] < g.edge_count()) break;
            word[static_cast<std::size_t>(pos)] = 0;
            --pos;
        }
        if (pos < 0) break;
    }
    return out;
}

// Compact display form, e.g. "2-0-1" (chronological).
inline std::string format_word(const CodeWindow& w) {
    std::string s;
    for (std::size_t k = 0; k < w.symbols.size(); ++k) {
        if (k) s += '-';
        s += std::to_string(w.symbols[k]);
    }
    return s;
}

}  // namespace cms
