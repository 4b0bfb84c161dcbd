// Graph and code-window behavior: admissibility against the edge tables,
// lexicographic word enumeration, and the enumeration capacity guard.
#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "cms/builtins.hpp"
#include "cms/graph.hpp"

using namespace cms;

TEST_CASE("single symbol windows are always admissible") {
    DirectedMultigraph g = single_vertex_graph(3);
    for (int e = 0; e < 3; ++e)
        CHECK(is_admissible(g, window_ending_at_zero({e})));
}

TEST_CASE("two_vertex_planar edge table drives admissibility") {
    const MarkovSystem s = builtin("two_vertex_planar");
    const DirectedMultigraph& g = s.graph;
    REQUIRE(g.vertex_count == 2);
    REQUIRE(g.edge_count() == 3);
    // Edge table: 0: 1->2, 1: 1->1, 2: 2->1.
    CHECK(g.initial(0) == 1);
    CHECK(g.terminal(0) == 2);
    CHECK(g.initial(1) == 1);
    CHECK(g.terminal(1) == 1);
    CHECK(g.initial(2) == 2);
    CHECK(g.terminal(2) == 1);

    // Oracle: a pair (a, b) chains iff t(a) == i(b); checked by brute force.
    std::vector<std::pair<int, int>> expect;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            if (g.terminal(a) == g.initial(b)) expect.emplace_back(a, b);
    REQUIRE(expect == std::vector<std::pair<int, int>>{
                          {0, 2}, {1, 0}, {1, 1}, {2, 0}, {2, 1}});

    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            const bool adm = is_admissible(g, window_ending_at_zero({a, b}));
            const bool oracle = g.terminal(a) == g.initial(b);
            CHECK(adm == oracle);
        }

    // Chains through the middle vertex: 0 must be followed by 2.
    CHECK(is_admissible(g, window_ending_at_zero({1, 0, 2, 1})));
    CHECK_FALSE(is_admissible(g, window_ending_at_zero({1, 0, 0})));
}

TEST_CASE("admissibility fails exactly at a broken consecutive pair") {
    const DirectedMultigraph g = builtin("two_vertex_planar").graph;
    std::mt19937_64 gen(7);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<int> word;
        for (int k = 0; k < 6; ++k)
            word.push_back(static_cast<int>(gen() % 3));
        bool oracle = true;
        for (std::size_t k = 0; k + 1 < word.size(); ++k)
            if (g.terminal(word[k]) != g.initial(word[k + 1])) oracle = false;
        CHECK(is_admissible(g, window_ending_at_zero(word)) == oracle);
    }
}

TEST_CASE("enumerate_words is lexicographic and filters admissibility") {
    const DirectedMultigraph cantor = builtin("cantor").graph;
    const std::vector<CodeWindow> len2 = enumerate_words(cantor, 2, false);
    REQUIRE(len2.size() == 4);
    CHECK(len2[0].symbols == std::vector<int>{0, 0});
    CHECK(len2[1].symbols == std::vector<int>{0, 1});
    CHECK(len2[2].symbols == std::vector<int>{1, 0});
    CHECK(len2[3].symbols == std::vector<int>{1, 1});
    for (const CodeWindow& w : len2) {
        CHECK(w.start_index == -1);
        CHECK(w.end_index() == 0);
    }

    const std::vector<CodeWindow> d1 = enumerate_words(builtin("decimal").graph, 1, false);
    CHECK(d1.size() == 10);

    const DirectedMultigraph planar = builtin("two_vertex_planar").graph;
    const std::vector<CodeWindow> all = enumerate_words(planar, 2, false);
    const std::vector<CodeWindow> adm = enumerate_words(planar, 2, true);
    REQUIRE(all.size() == 9);
    REQUIRE(adm.size() == 5);
    // Every admissible word appears in the full list and passes the filter.
    std::size_t j = 0;
    for (const CodeWindow& w : all) {
        const bool keep = is_admissible(planar, w);
        if (keep) {
            REQUIRE(j < adm.size());
            CHECK(adm[j].symbols == w.symbols);
            ++j;
        }
    }
    CHECK(j == adm.size());
}

TEST_CASE("single-vertex graphs make every word admissible") {
    const DirectedMultigraph g = builtin("cantor").graph;
    for (int len = 1; len <= 3; ++len) {
        const auto all = enumerate_words(g, len, false);
        const auto adm = enumerate_words(g, len, true);
        CHECK(all.size() == adm.size());
    }
}

TEST_CASE("enumeration guard refuses oversized word spaces") {
    const DirectedMultigraph g = builtin("decimal").graph;
    CHECK_THROWS_AS(enumerate_words(g, 8, false), CapacityError);
    CHECK_NOTHROW(enumerate_words(g, 7, true));  // 10^7 exactly is allowed
}

TEST_CASE("windows with unknown symbols or bad indices are rejected") {
    const DirectedMultigraph g = builtin("cantor").graph;
    CHECK_THROWS_AS(is_admissible(g, window_ending_at_zero({0, 5})), ConfigError);
    CodeWindow w;
    w.start_index = 2;
    w.symbols = {0};
    CHECK_THROWS_AS(w.check_indices(), ConfigError);
    CodeWindow runs_past;
    runs_past.start_index = -1;
    runs_past.symbols = {0, 0, 0};
    CHECK_THROWS_AS(runs_past.check_indices(), ConfigError);
}
