// Markov system: maps, probability profiles, and the assembled structure.
//
// Each edge e carries an affine map w_e(x) = A_e * s_e(x) + b_e, where s_e
// optionally takes componentwise absolute values of selected input
// coordinates (a per-component mask; the only non-affine ingredient), and a
// probability profile p_e that is a constant, c*sin^2(norm x) + b, or
// c*cos^2(norm x) + b on the source region K_{i(e)} and exactly zero off it.
// The declared rate is the average contraction constant the system claims:
// for x, y in a common region, sum_e p_e(x) d(w_e x, w_e y) <= a d(x, y).
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cms/errors.hpp"
#include "cms/graph.hpp"
#include "cms/space.hpp"

namespace cms {

struct EdgeMap {
    std::vector<double> linear;       // d*d, row-major
    std::vector<double> offset;       // d
    std::vector<std::uint8_t> abs_input;  // per-component mask; empty = none

    // out = linear * s(in) + offset.  `out` must not alias `in`.
    void apply_into(std::span<const double> in, std::span<double> out) const {
        const std::size_t d = offset.size();
        for (std::size_t r = 0; r < d; ++r) {
            double acc = offset[r];
            const double* row = linear.data() + r * d;
            for (std::size_t c = 0; c < d; ++c) {
                double v = in[c];
                if (!abs_input.empty() && abs_input[c]) v = std::fabs(v);
                acc += row[c] * v;
            }
            out[r] = acc;
        }
    }

    void check(int dimension, int edge) const {
        const std::string where = "map " + std::to_string(edge);
        const std::size_t d = static_cast<std::size_t>(dimension);
        if (linear.size() != d * d)
            throw ConfigError(where + ": linear needs " + std::to_string(d * d) +
                              " row-major entries, got " +
                              std::to_string(linear.size()));
        if (offset.size() != d)
            throw ConfigError(where + ": offset needs " + std::to_string(d) +
                              " entries, got " + std::to_string(offset.size()));
        if (!abs_input.empty() && abs_input.size() != d)
            throw ConfigError(where + ": abs mask needs " + std::to_string(d) +
                              " entries or none");
    }
};

struct ProbabilityFunction {
    enum class Form { Constant, SinSq, CosSq };

    Form form = Form::Constant;
    double value = 0.0;  // Constant
    double scale = 0.0;  // c, trig forms
    double shift = 0.0;  // b, trig forms

    // Profile value ignoring the region (callers gate on membership).
    double profile(const MetricSpaceDescriptor& sp, std::span<const double> x) const {
        switch (form) {
            case Form::Constant: return value;
            case Form::SinSq: {
                const double s = std::sin(norm_of(sp, x));
                return scale * s * s + shift;
            }
            case Form::CosSq: {
                const double c = std::cos(norm_of(sp, x));
                return scale * c * c + shift;
            }
        }
        return 0.0;
    }
};

struct MarkovSystem {
    std::string name;  // diagnostic label (builtin name or file path)
    DirectedMultigraph graph;
    MetricSpaceDescriptor space;
    std::vector<VertexRegion> regions;            // index v-1
    std::vector<EdgeMap> maps;                    // index = edge
    std::vector<ProbabilityFunction> probabilities;  // index = edge
    std::vector<Point> anchors;                   // index v-1, anchors[v-1] in K_v
    double declared_rate = 0.0;                   // a in (0,1)
    BoundingBox sampling_box;                     // window for sampling/grids

    std::vector<std::vector<int>> edges_by_source;  // index v-1 -> edge ids

    int dimension() const { return space.dimension; }

    // Vertex whose region contains x (1-based), or 0 when none does.
    int region_of(std::span<const double> x) const {
        for (std::size_t v = 0; v < regions.size(); ++v)
            if (regions[v].contains(x)) return static_cast<int>(v) + 1;
        return 0;
    }

    const std::vector<int>& edges_from(int vertex) const {
        return edges_by_source[static_cast<std::size_t>(vertex) - 1];
    }

    // Rebuilds derived tables and checks structural consistency.
    void finalize() {
        graph.check();
        if (space.dimension < 1)
            throw ConfigError("space: dimension must be >= 1");
        const std::size_t nv = static_cast<std::size_t>(graph.vertex_count);
        const std::size_t ne = static_cast<std::size_t>(graph.edge_count());
        if (regions.size() != nv)
            throw ConfigError("regions: need one per vertex (" +
                              std::to_string(nv) + "), got " +
                              std::to_string(regions.size()));
        if (maps.size() != ne)
            throw ConfigError("maps: need one per edge (" + std::to_string(ne) +
                              "), got " + std::to_string(maps.size()));
        if (probabilities.size() != ne)
            throw ConfigError("probabilities: need one per edge (" +
                              std::to_string(ne) + "), got " +
                              std::to_string(probabilities.size()));
        if (anchors.size() != nv)
            throw ConfigError("anchors: need one per vertex (" +
                              std::to_string(nv) + "), got " +
                              std::to_string(anchors.size()));
        for (std::size_t v = 0; v < nv; ++v)
            regions[v].check(space.dimension, static_cast<int>(v) + 1);
        for (std::size_t e = 0; e < ne; ++e)
            maps[e].check(space.dimension, static_cast<int>(e));
        for (std::size_t v = 0; v < nv; ++v) {
            check_dimension(space, anchors[v].size(),
                            ("anchor " + std::to_string(v + 1)).c_str());
            if (!regions[v].contains(anchors[v]))
                throw ConfigError("anchor " + std::to_string(v + 1) +
                                  ": lies outside its region");
        }
        if (!(declared_rate > 0.0 && declared_rate < 1.0))
            throw ConfigError("declared_rate: must lie in (0,1), got " +
                              std::to_string(declared_rate));
        if (sampling_box.lo.empty())
            sampling_box = BoundingBox::cube(space.dimension, -8.0, 8.0);
        sampling_box.check(space.dimension);

        edges_by_source.assign(nv, {});
        for (int e = 0; e < graph.edge_count(); ++e)
            edges_by_source[static_cast<std::size_t>(graph.initial(e)) - 1]
                .push_back(e);
        for (std::size_t v = 0; v < nv; ++v)
            if (edges_by_source[v].empty())
                throw ConfigError("graph: vertex " + std::to_string(v + 1) +
                                  " has no outgoing edge");
    }
};

// p_e(x): the profile on K_{i(e)}, exactly 0.0 elsewhere.
inline double eval_probability(const MarkovSystem& s, int edge,
                               std::span<const double> x) {
    if (!s.graph.valid_edge(edge))
        throw ConfigError("probability: unknown edge id " + std::to_string(edge));
    const std::size_t v = static_cast<std::size_t>(s.graph.initial(edge)) - 1;
    if (!s.regions[v].contains(x)) return 0.0;
    return s.probabilities[static_cast<std::size_t>(edge)].profile(s.space, x);
}

inline void apply_map_into(const MarkovSystem& s, int edge,
                           std::span<const double> in, std::span<double> out) {
    if (!s.graph.valid_edge(edge))
        throw ConfigError("map: unknown edge id " + std::to_string(edge));
    check_dimension(s.space, in.size(), "map input");
    s.maps[static_cast<std::size_t>(edge)].apply_into(in, out);
}

inline Point apply_map(const MarkovSystem& s, int edge, const Point& x) {
    Point out(static_cast<std::size_t>(s.dimension()));
    apply_map_into(s, edge, x, out);
    return out;
}

// Folds the window's maps over a start point: applies w_{symbols[0]} first,
// then w_{symbols[1]}, ... (chronological order).  This is the backward
// composition w_{sigma_0} o ... o w_{sigma_m} evaluated at `start`.
inline Point fold_window(const MarkovSystem& s, const CodeWindow& w,
                         const Point& start) {
    Point cur = start;
    Point next(cur.size());
    for (int e : w.symbols) {
        apply_map_into(s, e, cur, next);
        cur.swap(next);
    }
    return cur;
}

}  // namespace cms
