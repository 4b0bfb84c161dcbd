// Cylinder masses, shift invariance, absolute continuity, and entropy.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cms/builtins.hpp"
#include "cms/markov_measure.hpp"
#include "cms/measure.hpp"

using namespace cms;

namespace {

MarkovSystem halving_system() {
    MarkovSystem s;
    s.name = "halving";
    s.graph = single_vertex_graph(1);
    s.space = {1, MetricKind::L2};
    s.regions = {VertexRegion{FullSpace{}}};
    s.maps.push_back(EdgeMap{{0.5}, {0.0}, {}});
    ProbabilityFunction one;
    one.form = ProbabilityFunction::Form::Constant;
    one.value = 1.0;
    s.probabilities = {one};
    s.anchors = {{1.0}};
    s.declared_rate = 0.5;
    s.finalize();
    return s;
}

// Single vertex on [0,1] with sin^2 / cos^2 probabilities; the first
// probability vanishes at x = 0, i.e. inside the region, violating the
// positivity hypothesis on purpose.
MarkovSystem vanishing_probability_system() {
    MarkovSystem s;
    s.name = "vanishing";
    s.graph = single_vertex_graph(2);
    s.space = {1, MetricKind::L2};
    s.regions = {VertexRegion{AxisBox{{0.0}, {1.0}}}};
    s.maps.push_back(EdgeMap{{1.0 / 3.0}, {0.0}, {}});
    s.maps.push_back(EdgeMap{{1.0 / 3.0}, {2.0 / 3.0}, {}});
    ProbabilityFunction p0, p1;
    p0.form = ProbabilityFunction::Form::SinSq;
    p0.scale = 1.0;
    p0.shift = 0.0;
    p1.form = ProbabilityFunction::Form::CosSq;
    p1.scale = 1.0;
    p1.shift = 0.0;
    s.probabilities = {p0, p1};
    s.anchors = {{0.0}};
    s.declared_rate = 1.0 / 3.0;
    s.finalize();
    return s;
}

EmpiricalMeasure planar_cloud(std::size_t particles, std::uint64_t seed) {
    InvariantOptions opt;
    opt.particles = particles;
    opt.max_iters = 60;
    opt.tol = 0.0;  // fixed-length run; convergence not needed here
    opt.seed = seed;
    return estimate_invariant(builtin("two_vertex_planar"), opt).measure;
}

}  // namespace

TEST_CASE("constant-probability cylinder masses are exact products") {
    const MarkovSystem cantor = builtin("cantor");
    const EmpiricalMeasure mu = anchor_measure(cantor);
    for (int len : {1, 4, 9}) {
        CodeWindow w;
        w.start_index = 1 - len;
        for (int k = 0; k < len; ++k) w.symbols.push_back(k % 2);
        const CylinderMass m = cylinder_mass(cantor, mu, w);
        CHECK(m.exact);
        CHECK(m.estimate == std::exp2(-len));
        CHECK(m.std_error == 0.0);
    }

    const MarkovSystem be = builtin("barnsley_elton");
    const CylinderMass m =
        cylinder_mass(be, anchor_measure(be), window_ending_at_zero({0, 0, 1}));
    CHECK(m.exact);
    CHECK(m.estimate == 9.0 / 64.0);

    const MarkovSystem dec = builtin("decimal");
    const CylinderMass d =
        cylinder_mass(dec, anchor_measure(dec), window_ending_at_zero({3, 1, 4}));
    CHECK(d.exact);
    CHECK(std::fabs(d.estimate - 1e-3) < 1e-17);
}

TEST_CASE("empty word has mass one; non-admissible words have mass zero") {
    const MarkovSystem planar = builtin("two_vertex_planar");
    const EmpiricalMeasure mu = planar_cloud(500, 3);
    CodeWindow empty;
    empty.start_index = 0;
    const CylinderMass one = cylinder_mass(planar, mu, empty);
    CHECK(one.estimate == 1.0);
    CHECK(one.exact);

    // Edge 0 ends at vertex 2; edge 0 needs vertex 1: zero factor for every
    // particle.
    const CylinderMass zero =
        cylinder_mass(planar, mu, window_ending_at_zero({0, 0}));
    CHECK(zero.estimate == 0.0);
    CHECK(zero.std_error == 0.0);
    CHECK_FALSE(zero.exact);
}

TEST_CASE("masses of all fixed-length words sum to one") {
    const MarkovSystem cantor = builtin("cantor");
    const EmpiricalMeasure cmu = anchor_measure(cantor);
    for (int len : {1, 3, 6}) {
        double total = 0.0;
        for (const CodeWindow& w : enumerate_words(cantor.graph, len, true))
            total += cylinder_mass(cantor, cmu, w).estimate;
        CHECK(total == 1.0);
    }

    const MarkovSystem planar = builtin("two_vertex_planar");
    const EmpiricalMeasure mu = planar_cloud(2000, 5);
    for (int len : {1, 2, 3}) {
        double total = 0.0;
        for (const CodeWindow& w : enumerate_words(planar.graph, len, true))
            total += cylinder_mass(planar, mu, w).estimate;
        CHECK(std::fabs(total - 1.0) < 1e-9);
    }
}

TEST_CASE("mass is monotone under word extension") {
    const MarkovSystem planar = builtin("two_vertex_planar");
    const EmpiricalMeasure mu = planar_cloud(1000, 7);
    for (const CodeWindow& w : enumerate_words(planar.graph, 3, true)) {
        const double base = cylinder_mass(planar, mu, w).estimate;
        for (int e = 0; e < planar.graph.edge_count(); ++e) {
            CodeWindow ext = w;
            ext.start_index = -3;
            ext.symbols.push_back(e);
            CHECK(cylinder_mass(planar, mu, ext).estimate <= base + 1e-12);
        }
    }
}

TEST_CASE("nonconstant integrands report a positive error bar with honest ess") {
    const MarkovSystem planar = builtin("two_vertex_planar");
    const EmpiricalMeasure mu = planar_cloud(1000, 9);
    const CylinderMass m =
        cylinder_mass(planar, mu, window_ending_at_zero({1, 1}));
    CHECK_FALSE(m.exact);
    CHECK(m.estimate > 0.0);
    CHECK(m.estimate < 1.0);
    CHECK(m.std_error > 0.0);
    CHECK(m.ess > 100.0);
    CHECK(m.ess <= 1000.0 + 1e-9);
}

TEST_CASE("shift invariance is exact algebra for constant probabilities") {
    const MarkovSystem be = builtin("barnsley_elton");
    const ShiftInvarianceReport rep =
        shift_invariance_check(be, anchor_measure(be), 3);
    REQUIRE(rep.rows.size() == 2 + 4 + 8);
    for (const ShiftInvarianceRow& row : rep.rows) {
        CHECK(std::fabs(row.left_discrepancy) <= 1e-12);
        CHECK(std::fabs(row.right_discrepancy) <= 1e-12);
    }
    CHECK(rep.max_right_discrepancy <= 1e-12);
}

TEST_CASE("shift invariance on the planar system: appends exact, prepends noisy") {
    const MarkovSystem planar = builtin("two_vertex_planar");
    InvariantOptions opt;
    opt.particles = 4000;
    opt.max_iters = 250;
    opt.tol = 1e-3;
    opt.seed = 21;
    const EmpiricalMeasure mu = estimate_invariant(planar, opt).measure;
    const ShiftInvarianceReport rep = shift_invariance_check(planar, mu, 2);
    REQUIRE(rep.rows.size() == 3 + 5);
    CHECK(rep.max_right_discrepancy <= 1e-12);
    for (const ShiftInvarianceRow& row : rep.rows) {
        CHECK(row.mass > 0.0);
        CHECK(row.left_se > 0.0);
        // Lenient at this particle count; the tight bound is exercised at
        // full scale by the acceptance suite.
        CHECK(std::fabs(row.left_discrepancy) <=
              8.0 * row.left_se + 2e-3);
    }
}

TEST_CASE("absolute continuity diagnostic finds no flags for positive systems") {
    const MarkovSystem planar = builtin("two_vertex_planar");
    const AbsContinuityReport rep =
        abs_continuity_diagnostic(planar, {0.5, 2.0}, 3);
    CHECK(rep.rows.size() == 27);
    CHECK(rep.flagged_count == 0);
    // Zero anchor mass happens exactly on the non-admissible words.
    for (const AbsContinuityRow& row : rep.rows) {
        CodeWindow w;
        w.start_index = -2;
        w.symbols = row.word;
        const bool adm = is_admissible(planar.graph, w);
        CHECK((row.anchor_mass > 0.0) == adm);
        if (!adm) CHECK(row.point_mass == 0.0);
    }
}

TEST_CASE("absolute continuity from an anchor matches up to the vertex factor") {
    const MarkovSystem planar = builtin("two_vertex_planar");
    const Point anchor = planar.anchors[0];  // vertex 1
    const AbsContinuityReport rep = abs_continuity_diagnostic(planar, anchor, 2);
    for (const AbsContinuityRow& row : rep.rows) {
        const int v0 =
            planar.graph.edges[static_cast<std::size_t>(row.word.front())].initial;
        if (v0 == 1)
            CHECK(std::fabs(row.anchor_mass - 0.5 * row.point_mass) < 1e-15);
        else
            CHECK(row.point_mass == 0.0);
    }
}

TEST_CASE("absolute continuity flags a probability vanishing inside its region") {
    const MarkovSystem bad = vanishing_probability_system();
    // From the anchor x=0 the first factor sin^2(0) kills every word
    // starting with edge 0, but an interior point charges those words.
    const AbsContinuityReport rep = abs_continuity_diagnostic(bad, {0.5}, 2);
    CHECK(rep.flagged_count > 0);
}

TEST_CASE("entropy of constant-probability systems is the Shannon entropy") {
    const MarkovSystem be = builtin("barnsley_elton");
    const EntropyEstimate h = entropy_estimate(be, anchor_measure(be));
    const double expect = -(0.75 * std::log(0.75) + 0.25 * std::log(0.25));
    CHECK(std::fabs(h.entropy_nats - expect) < 1e-15);
    CHECK(std::fabs(h.entropy_nats - 0.5623351446188083) < 1e-12);
    CHECK(h.sum_p_log_p == -h.entropy_nats);
    CHECK(h.std_error == 0.0);

    const MarkovSystem cantor = builtin("cantor");
    CHECK(std::fabs(entropy_estimate(cantor, anchor_measure(cantor)).entropy_nats -
                    std::log(2.0)) < 1e-12);
    const MarkovSystem dec = builtin("decimal");
    CHECK(std::fabs(entropy_estimate(dec, anchor_measure(dec)).entropy_nats -
                    std::log(10.0)) < 1e-12);
}

TEST_CASE("deterministic systems carry zero entropy") {
    const MarkovSystem h = halving_system();
    const EntropyEstimate e = entropy_estimate(h, anchor_measure(h));
    CHECK(e.entropy_nats == 0.0);
    CHECK(e.std_error == 0.0);
}

TEST_CASE("planar entropy lies between the per-vertex extremes") {
    const MarkovSystem planar = builtin("two_vertex_planar");
    const EntropyEstimate h = entropy_estimate(planar, planar_cloud(2000, 11));
    CHECK(h.entropy_nats > 0.05);
    CHECK(h.entropy_nats < std::log(2.0));
    CHECK(h.std_error > 0.0);
}
