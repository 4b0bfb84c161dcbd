// Coding map: backward evaluation of symbol windows with certified bounds.
//
// A window of symbols ending at index 0 is evaluated by starting at the
// anchor of the first symbol's initial vertex and folding the maps in
// chronological order.  Lengthening the window backward changes the result
// by at most the anchor-offset constant times the accumulated contraction,
// so the evaluation carries a certified tail bound that holds outside an
// exceptional set of windows of explicitly summable mass: per depth k the
// chain assigns mass at most sqrt(a)^k to windows whose step-k gap exceeds
// its typical size, and the geometric sum of those masses bounds the
// exceptional fraction.
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cms/errors.hpp"
#include "cms/graph.hpp"
#include "cms/measure.hpp"
#include "cms/rng.hpp"
#include "cms/space.hpp"
#include "cms/system.hpp"

namespace cms {

// Per-edge displacement d(w_e(x_{i(e)}), x_{t(e)}): how far one map step
// from the source anchor lands from the target anchor.  The maximum over
// edges is the constant entering every certified bound below.
inline std::vector<double> anchor_offset_components(const MarkovSystem& s) {
    std::vector<double> out;
    out.reserve(s.maps.size());
    for (std::size_t e = 0; e < s.maps.size(); ++e) {
        const Point image =
            apply_map(s, static_cast<int>(e),
                      s.anchors[static_cast<std::size_t>(
                          s.graph.edges[e].initial - 1)]);
        out.push_back(distance(
            s.space, image,
            s.anchors[static_cast<std::size_t>(s.graph.edges[e].terminal - 1)]));
    }
    return out;
}

inline double anchor_offset_constant(const MarkovSystem& s) {
    double c = 0.0;
    for (double v : anchor_offset_components(s)) c = std::max(c, v);
    return c;
}

// Certified tail bound for a window of `window_length` symbols:
//   C * sqrt(a)^window_length / (1 - sqrt(a)).
// Valid for all windows outside the exceptional set described above.
inline double certified_tail_bound(const MarkovSystem& s, int window_length) {
    if (window_length < 0)
        throw ConfigError("coding: window length must be >= 0");
    const double root = std::sqrt(s.declared_rate);
    const double c = anchor_offset_constant(s);
    return c * std::pow(root, window_length) / (1.0 - root);
}

// Mass allowance for the exceptional windows at depths >= `window_length`:
// the geometric sum of the per-depth Markov bounds sqrt(a)^k.
inline double exceptional_mass_allowance(const MarkovSystem& s,
                                         int window_length) {
    const double root = std::sqrt(s.declared_rate);
    return std::min(1.0, std::pow(root, window_length) / (1.0 - root));
}

// Shortest window length whose certified tail bound is at or below tol.
inline int depth_for_tolerance(const MarkovSystem& s, double tol) {
    if (tol <= 0.0) throw ConfigError("coding: tolerance must be positive");
    const double root = std::sqrt(s.declared_rate);
    const double c = anchor_offset_constant(s);
    if (c <= 0.0) return 1;
    const double target = tol * (1.0 - root) / c;
    if (target >= 1.0) return 1;
    return std::max(1, static_cast<int>(
                           std::ceil(std::log(target) / std::log(root))));
}

struct CodingOptions {
    double tol = 1e-9;       // target certified accuracy
    bool with_gaps = false;  // also record the per-deepening-step gaps
};

struct CodingResult {
    Point point;                          // folded image of the full window
    int depth = 0;                        // symbols consumed
    double error_bound = 0.0;             // certified tail bound at this depth
    bool converged = false;               // error_bound <= requested tol
    std::vector<double> successive_gaps;  // only if with_gaps was set
};

// Evaluates the window (must be admissible and end at index 0) from the
// anchor of its first symbol's initial vertex.
inline CodingResult coding_eval(const MarkovSystem& s, const CodeWindow& w,
                                const CodingOptions& opt = {}) {
    w.check_indices();
    if (w.end_index() != 0)
        throw ConfigError("coding: window must end at index 0, ends at " +
                          std::to_string(w.end_index()));
    if (w.symbols.empty()) throw ConfigError("coding: empty window");
    if (!is_admissible(s.graph, w))
        throw ConfigError("coding: window is not admissible");

    CodingResult res;
    res.depth = static_cast<int>(w.symbols.size());
    const int v0 =
        s.graph.edges[static_cast<std::size_t>(w.symbols.front())].initial;
    res.point = fold_window(s, w, s.anchors[static_cast<std::size_t>(v0 - 1)]);
    res.error_bound = certified_tail_bound(s, res.depth);
    res.converged = res.error_bound <= opt.tol;

    if (opt.with_gaps && res.depth > 1) {
        // The depth-k evaluation uses only the last k symbols; each suffix is
        // its own fold, so this pass is quadratic in the depth.
        const int n = res.depth;
        std::vector<Point> evals(static_cast<std::size_t>(n));
        for (int k = 1; k <= n; ++k) {
            CodeWindow suffix;
            suffix.start_index = 1 - k;
            suffix.symbols.assign(w.symbols.end() - k, w.symbols.end());
            const int sv =
                s.graph
                    .edges[static_cast<std::size_t>(suffix.symbols.front())]
                    .initial;
            evals[static_cast<std::size_t>(k - 1)] = fold_window(
                s, suffix, s.anchors[static_cast<std::size_t>(sv - 1)]);
        }
        res.successive_gaps.reserve(static_cast<std::size_t>(n - 1));
        for (int k = 1; k < n; ++k)
            res.successive_gaps.push_back(
                distance(s.space, evals[static_cast<std::size_t>(k - 1)],
                         evals[static_cast<std::size_t>(k)]));
    }
    return res;
}

// Draws a window through the chain from a uniformly chosen anchor, then
// evaluates it.
inline CodingResult coding_eval_on_sample(const MarkovSystem& s, int steps,
                                          std::uint64_t seed,
                                          const CodingOptions& opt = {}) {
    if (steps < 1) throw ConfigError("coding: need steps >= 1");
    std::mt19937_64 pick(derive_seed(seed, 0));
    const std::size_t v0 =
        static_cast<std::size_t>(pick() % s.anchors.size());
    const ChainSample chain =
        sample_chain(s, s.anchors[v0], steps, derive_seed(seed, 1));
    return coding_eval(s, chain.window, opt);
}

inline CodingResult coding_eval_on_sample(const MarkovSystem& s,
                                          const ChainSample& chain,
                                          const CodingOptions& opt = {}) {
    return coding_eval(s, chain.window, opt);
}

// ---------------------------------------------------------------------------
// Anchor independence.

struct AnchorIndependence {
    int steps = 0;
    int trials = 0;
    double mean_anchor_gap = 0.0;  // average d(x_v, y_v) over vertices
    double bound = 0.0;            // sqrt(a)^steps * mean_anchor_gap
    double max_discrepancy = 0.0;  // worst image gap over the trials
    double exceed_fraction = 0.0;  // trials with image gap above the bound
    double allowance = 0.0;        // expected ceiling for that fraction
};

// Folds chain-sampled windows from the standard anchors and from
// `alt_anchors` and compares the images.  One application of the window
// contracts the anchor gap by a^steps on average, so all but a
// sqrt(a)^steps fraction of windows stay under the square-root-scaled
// bound.
inline AnchorIndependence anchor_independence(const MarkovSystem& s,
                                              const std::vector<Point>& alt_anchors,
                                              int trials, int steps,
                                              std::uint64_t seed) {
    if (steps < 1) throw ConfigError("anchor-independence: need steps >= 1");
    if (trials < 1) throw ConfigError("anchor-independence: need trials >= 1");
    if (alt_anchors.size() != s.anchors.size())
        throw ConfigError(
            "anchor-independence: need one alternative anchor per vertex");
    for (std::size_t v = 0; v < alt_anchors.size(); ++v) {
        check_dimension(s.space, alt_anchors[v].size(), "alternative anchor");
        if (!s.regions[v].contains(alt_anchors[v]))
            throw ConfigError(
                "anchor-independence: alternative anchor for vertex " +
                std::to_string(v + 1) + " lies outside its region");
    }

    AnchorIndependence rep;
    rep.steps = steps;
    rep.trials = trials;
    double gap_sum = 0.0;
    for (std::size_t v = 0; v < s.anchors.size(); ++v)
        gap_sum += distance(s.space, s.anchors[v], alt_anchors[v]);
    rep.mean_anchor_gap = gap_sum / static_cast<double>(s.anchors.size());
    const double root_pow = std::pow(std::sqrt(s.declared_rate), steps);
    rep.bound = root_pow * rep.mean_anchor_gap;
    rep.allowance = root_pow;

    int exceed = 0;
    for (int t = 0; t < trials; ++t) {
        const std::size_t v0 = static_cast<std::size_t>(t) % s.anchors.size();
        const ChainSample chain =
            sample_chain(s, s.anchors[v0], steps,
                         derive_seed(seed, static_cast<std::uint64_t>(t)));
        const std::size_t fv = static_cast<std::size_t>(
            s.graph.edges[static_cast<std::size_t>(chain.window.symbols.front())]
                .initial -
            1);
        const Point a = fold_window(s, chain.window, s.anchors[fv]);
        const Point b = fold_window(s, chain.window, alt_anchors[fv]);
        const double gap = distance(s.space, a, b);
        rep.max_discrepancy = std::max(rep.max_discrepancy, gap);
        if (gap > rep.bound) ++exceed;
    }
    rep.exceed_fraction = static_cast<double>(exceed) / trials;
    return rep;
}

// ---------------------------------------------------------------------------
// Regularity of the coding map in the sequence metric.

// Distance between symbol sequences: (1/2)^k with k the length of the
// longest common suffix.
inline double code_distance(const std::vector<int>& a,
                            const std::vector<int>& b) {
    std::size_t k = 0;
    const std::size_t n = std::min(a.size(), b.size());
    while (k < n && a[a.size() - 1 - k] == b[b.size() - 1 - k]) ++k;
    return std::exp2(-static_cast<double>(k));
}

struct HolderPair {
    double code_distance = 0.0;   // (1/2)^k for the pair's common suffix
    double image_distance = 0.0;  // gap between the two evaluations
};

struct HolderReport {
    double alpha = 0.0;          // log sqrt(a) / log(1/2)
    double constant = 0.0;       // 2C / (1 - sqrt(a))
    int window_length = 0;       // depth used for both evaluations
    double eval_tolerance = 0.0; // certified accuracy of each evaluation
    std::vector<HolderPair> pairs;
    int violations = 0;  // image gap above constant*d'^alpha + 2*tolerance
};

inline double holder_exponent(const MarkovSystem& s) {
    return std::log(std::sqrt(s.declared_rate)) / std::log(0.5);
}

namespace detail {

// Draws a chain of `steps` whose final vertex is `target` (1-based), by
// redrawing with fresh sub-seeds; the chain's final vertex is the terminal
// vertex of its last edge.
inline ChainSample chain_ending_at(const MarkovSystem& s, int steps,
                                   int target, std::uint64_t seed) {
    for (std::uint64_t r = 0; r < 1000; ++r) {
        const std::size_t v0 = static_cast<std::size_t>(r) % s.anchors.size();
        ChainSample c =
            sample_chain(s, s.anchors[v0], steps, derive_seed(seed, r));
        const int last = c.window.symbols.back();
        if (s.graph.edges[static_cast<std::size_t>(last)].terminal == target)
            return c;
    }
    throw ConfigError("holder: could not draw a chain ending at vertex " +
                      std::to_string(target));
}

}  // namespace detail

// Samples pairs of admissible windows agreeing on their last k symbols
// (k cycles through 1..max_agree) and compares each image gap with
//   constant * d'(pair)^alpha + 2 * eval_tolerance.
// With alpha tied to the square-root rate, d'^alpha equals sqrt(a)^k, the
// typical contraction over the shared suffix; the additive term covers the
// certified inaccuracy of the two evaluations.  Window depth is chosen so
// both evaluations are converged at `tol`.
inline HolderReport holder_estimate(const MarkovSystem& s, int trials,
                                    int max_agree, std::uint64_t seed,
                                    double tol = 1e-9) {
    if (trials < 1) throw ConfigError("holder: need trials >= 1");
    if (max_agree < 1) throw ConfigError("holder: need max_agree >= 1");

    HolderReport rep;
    rep.alpha = holder_exponent(s);
    const double root = std::sqrt(s.declared_rate);
    rep.constant = 2.0 * anchor_offset_constant(s) / (1.0 - root);
    rep.window_length = std::max(depth_for_tolerance(s, tol), max_agree + 2);
    rep.eval_tolerance = tol;
    rep.pairs.reserve(static_cast<std::size_t>(trials));
    const int length = rep.window_length;

    for (int j = 0; j < trials; ++j) {
        const std::uint64_t sj =
            derive_seed(seed, static_cast<std::uint64_t>(j));
        const int share = 1 + j % max_agree;  // common-suffix length target

        const std::size_t v0 = static_cast<std::size_t>(j) % s.anchors.size();
        const ChainSample base =
            sample_chain(s, s.anchors[v0], length, derive_seed(sj, 0));
        const std::vector<int>& sa = base.window.symbols;
        const int suffix_vertex =
            s.graph
                .edges[static_cast<std::size_t>(
                    sa[static_cast<std::size_t>(length - share)])]
                .initial;
        const ChainSample prefix = detail::chain_ending_at(
            s, length - share, suffix_vertex, derive_seed(sj, 1));

        CodeWindow other;
        other.start_index = 1 - length;
        other.symbols = prefix.window.symbols;
        other.symbols.insert(other.symbols.end(), sa.end() - share, sa.end());

        HolderPair pair;
        pair.code_distance = code_distance(sa, other.symbols);
        const Point fa = coding_eval(s, base.window).point;
        const Point fb = coding_eval(s, other).point;
        pair.image_distance = distance(s.space, fa, fb);
        rep.pairs.push_back(pair);

        const double bound =
            rep.constant * std::pow(pair.code_distance, rep.alpha) + 2.0 * tol;
        if (pair.image_distance > bound) ++rep.violations;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Trajectory comparison.

struct TrajectoryComparison {
    int steps = 0;
    int trials = 0;
    double start_gap = 0.0;  // d(start, anchor of its vertex)
    // Indexed by the number of symbols applied minus one (n = 1..steps):
    std::vector<double> exceed_fraction;  // trials with gap > bound*start_gap
    std::vector<double> bound_curve;      // sqrt(a)^n, both threshold scale
                                          // and failure-fraction ceiling
    std::vector<double> mean_gap;         // average observed gap
};

// Runs the chain from `start` and replays every prefix of each window from
// the anchor of the start's vertex.  After n symbols the two runs are an
// identical fold of the start pair, so their gap contracts on average like
// a^n times the start gap and exceeds the square-root threshold on at most
// a sqrt(a)^n fraction of runs.
inline TrajectoryComparison trajectory_comparison(const MarkovSystem& s,
                                                  const Point& start,
                                                  int steps, int trials,
                                                  std::uint64_t seed) {
    if (steps < 1) throw ConfigError("trajectory: need steps >= 1");
    if (trials < 1) throw ConfigError("trajectory: need trials >= 1");
    check_dimension(s.space, start.size(), "trajectory start");
    const int v0 = s.region_of(start);
    if (v0 == 0)
        throw EscapeError("trajectory: start point lies in no vertex region");
    const Point& anchor = s.anchors[static_cast<std::size_t>(v0 - 1)];

    TrajectoryComparison rep;
    rep.steps = steps;
    rep.trials = trials;
    rep.start_gap = distance(s.space, start, anchor);
    const double root = std::sqrt(s.declared_rate);
    rep.bound_curve.resize(static_cast<std::size_t>(steps));
    double pw = 1.0;
    for (int n = 0; n < steps; ++n) {
        pw *= root;
        rep.bound_curve[static_cast<std::size_t>(n)] = pw;
    }
    rep.mean_gap.assign(static_cast<std::size_t>(steps), 0.0);
    std::vector<long long> exceed(static_cast<std::size_t>(steps), 0);

    Point replay(static_cast<std::size_t>(s.dimension()));
    Point next(static_cast<std::size_t>(s.dimension()));
    for (int t = 0; t < trials; ++t) {
        const ChainSample chain = sample_chain(
            s, start, steps, derive_seed(seed, static_cast<std::uint64_t>(t)));
        replay = anchor;
        for (int n = 0; n < steps; ++n) {
            const int e = chain.window.symbols[static_cast<std::size_t>(n)];
            apply_map_into(s, e, replay, next);
            replay.swap(next);
            const double gap = distance(
                s.space, chain.trajectory[static_cast<std::size_t>(n)], replay);
            rep.mean_gap[static_cast<std::size_t>(n)] += gap;
            if (gap > rep.bound_curve[static_cast<std::size_t>(n)] *
                          rep.start_gap)
                ++exceed[static_cast<std::size_t>(n)];
        }
    }
    rep.exceed_fraction.resize(static_cast<std::size_t>(steps));
    for (int n = 0; n < steps; ++n) {
        rep.mean_gap[static_cast<std::size_t>(n)] /= trials;
        rep.exceed_fraction[static_cast<std::size_t>(n)] =
            static_cast<double>(exceed[static_cast<std::size_t>(n)]) / trials;
    }
    return rep;
}

}  // namespace cms
