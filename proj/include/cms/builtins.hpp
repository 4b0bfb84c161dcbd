// Built-in example systems.
//
//   decimal           ten maps x/10 + e/10 on [0,1]; invariant law is uniform
//                     when the weights are; rate 1/10.
//   cantor            x/3 and x/3 + 2/3 on [0,1]; middle-thirds set; rate 1/3.
//   barnsley_elton    x/2 and -2x + 3 on R with weights (3/4, 1/4); only
//                     contractive on average; rate 7/8.
//   two_vertex_planar two half-plane regions in (R^2, L1) joined by three
//                     maps with position-dependent trigonometric weights;
//                     rate 209/210.  Edge table: 0: 1->2, 1: 1->1, 2: 2->1.
//
// decimal and cantor accept an optional weight vector (default uniform).
#pragma once

#include <optional>
#include <vector>

#include "cms/system.hpp"

namespace cms {

inline std::vector<std::string> builtin_names() {
    return {"decimal", "cantor", "barnsley_elton", "two_vertex_planar"};
}

namespace detail {

inline void set_constant_probs(MarkovSystem& s, const std::vector<double>& probs) {
    const std::size_t ne = static_cast<std::size_t>(s.graph.edge_count());
    if (probs.size() != ne)
        throw ConfigError(s.name + ": needs " + std::to_string(ne) +
                          " probabilities, got " + std::to_string(probs.size()));
    double total = 0.0;
    for (double p : probs) {
        if (p < 0.0) throw ConfigError(s.name + ": negative probability");
        total += p;
    }
    if (std::fabs(total - 1.0) > 1e-9)
        throw ConfigError(s.name + ": probabilities sum to " +
                          std::to_string(total) + ", expected 1");
    s.probabilities.clear();
    for (double p : probs) {
        ProbabilityFunction f;
        f.form = ProbabilityFunction::Form::Constant;
        f.value = p;
        s.probabilities.push_back(f);
    }
}

inline MarkovSystem interval_system(const std::string& name, int edge_count,
                                    double slope,
                                    const std::vector<double>& offsets,
                                    double rate) {
    MarkovSystem s;
    s.name = name;
    s.graph = single_vertex_graph(edge_count);
    s.space = {1, MetricKind::L2};
    AxisBox unit;
    unit.lo = {0.0};
    unit.hi = {1.0};
    s.regions = {VertexRegion{unit}};
    for (double b : offsets) s.maps.push_back(EdgeMap{{slope}, {b}, {}});
    std::vector<double> uniform(static_cast<std::size_t>(edge_count),
                                1.0 / edge_count);
    set_constant_probs(s, uniform);
    s.anchors = {{0.0}};
    s.declared_rate = rate;
    return s;
}

}  // namespace detail

inline MarkovSystem builtin_decimal(
    const std::optional<std::vector<double>>& probs = std::nullopt) {
    std::vector<double> offsets;
    for (int e = 0; e < 10; ++e) offsets.push_back(e / 10.0);
    MarkovSystem s = detail::interval_system("decimal", 10, 1.0 / 10.0, offsets,
                                             1.0 / 10.0);
    if (probs) detail::set_constant_probs(s, *probs);
    s.finalize();
    return s;
}

inline MarkovSystem builtin_cantor(
    const std::optional<std::vector<double>>& probs = std::nullopt) {
    MarkovSystem s = detail::interval_system("cantor", 2, 1.0 / 3.0,
                                             {0.0, 2.0 / 3.0}, 1.0 / 3.0);
    if (probs) detail::set_constant_probs(s, *probs);
    s.finalize();
    return s;
}

inline MarkovSystem builtin_barnsley_elton() {
    MarkovSystem s;
    s.name = "barnsley_elton";
    s.graph = single_vertex_graph(2);
    s.space = {1, MetricKind::L2};
    s.regions = {VertexRegion{FullSpace{}}};
    s.maps.push_back(EdgeMap{{0.5}, {0.0}, {}});
    s.maps.push_back(EdgeMap{{-2.0}, {3.0}, {}});
    detail::set_constant_probs(s, {3.0 / 4.0, 1.0 / 4.0});
    s.anchors = {{0.0}};
    s.declared_rate = 7.0 / 8.0;
    s.finalize();
    return s;
}

inline MarkovSystem builtin_two_vertex_planar() {
    MarkovSystem s;
    s.name = "two_vertex_planar";
    s.graph.vertex_count = 2;
    s.graph.edges = {{1, 2}, {1, 1}, {2, 1}};
    s.space = {2, MetricKind::L1};

    HalfSpace upper;  // K_1 = { y >= 1/2 }
    upper.normal = {0.0, 1.0};
    upper.offset = 0.5;
    upper.sense = HalfSpaceSense::GreaterEqual;
    HalfSpace lower;  // K_2 = { y <= -1/2 }
    lower.normal = {0.0, 1.0};
    lower.offset = -0.5;
    lower.sense = HalfSpaceSense::LessEqual;
    s.regions = {VertexRegion{upper}, VertexRegion{lower}};

    // edge 0: (x, y) -> (-x/2 - 1, -3y/2 + 1/4)       K_1 -> K_2
    s.maps.push_back(EdgeMap{{-0.5, 0.0, 0.0, -1.5}, {-1.0, 0.25}, {}});
    // edge 1: (x, y) -> (-3x/2 + 1, y/4 + 3/8)        K_1 -> K_1
    s.maps.push_back(EdgeMap{{-1.5, 0.0, 0.0, 0.25}, {1.0, 0.375}, {}});
    // edge 2: (x, y) -> (-|x|/2 + 1, -3y/4 + 1/8)     K_2 -> K_1
    s.maps.push_back(EdgeMap{{-0.5, 0.0, 0.0, -0.75}, {1.0, 0.125}, {1, 0}});

    ProbabilityFunction p0;  // (1/15) sin^2 |(x,y)|_1 + 53/105
    p0.form = ProbabilityFunction::Form::SinSq;
    p0.scale = 1.0 / 15.0;
    p0.shift = 53.0 / 105.0;
    ProbabilityFunction p1;  // (1/15) cos^2 |(x,y)|_1 + 3/7
    p1.form = ProbabilityFunction::Form::CosSq;
    p1.scale = 1.0 / 15.0;
    p1.shift = 3.0 / 7.0;
    ProbabilityFunction p2;  // identically 1 on K_2
    p2.form = ProbabilityFunction::Form::Constant;
    p2.value = 1.0;
    s.probabilities = {p0, p1, p2};

    s.anchors = {{0.0, 1.0}, {0.0, -1.0}};
    s.declared_rate = 209.0 / 210.0;
    s.finalize();
    return s;
}

inline MarkovSystem builtin(const std::string& name,
                            const std::optional<std::vector<double>>& probs =
                                std::nullopt) {
    if (name == "decimal") return builtin_decimal(probs);
    if (name == "cantor") return builtin_cantor(probs);
    if (name == "barnsley_elton") {
        if (probs) throw ConfigError("barnsley_elton: fixed probabilities");
        return builtin_barnsley_elton();
    }
    if (name == "two_vertex_planar") {
        if (probs) throw ConfigError("two_vertex_planar: fixed probabilities");
        return builtin_two_vertex_planar();
    }
    throw ConfigError("unknown builtin system '" + name + "'");
}

}  // namespace cms
