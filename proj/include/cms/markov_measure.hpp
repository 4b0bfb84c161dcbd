// Cylinder masses of the generalized Markov measure and derived reports.
//
// The measure of a cylinder (the set of sequences beginning with a fixed
// word) is the integral over start points of the product of step
// probabilities along the word.  Against a particle measure this is a
// weighted Monte Carlo sum; when the integrand is a constant (single vertex,
// constant probabilities) the product itself is the exact mass.
#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <vector>

#include "cms/errors.hpp"
#include "cms/graph.hpp"
#include "cms/measure.hpp"
#include "cms/space.hpp"
#include "cms/system.hpp"

namespace cms {

namespace detail {

// Probability product along `word` started at x; zero as soon as a factor
// gates to zero (off-region or non-admissible continuation).
inline double path_product(const MarkovSystem& s, std::span<const int> word,
                           std::span<const double> x, Point& cur, Point& next) {
    double prod = 1.0;
    cur.assign(x.begin(), x.end());
    next.resize(cur.size());
    for (std::size_t k = 0; k < word.size(); ++k) {
        const double p = eval_probability(s, word[k], cur);
        if (p == 0.0) return 0.0;
        prod *= p;
        if (k + 1 < word.size()) {
            apply_map_into(s, word[k], cur, next);
            cur.swap(next);
        }
    }
    return prod;
}

// Weighted mean plus the spread statistics used for every error bar here:
// weighted sample variance scaled by the effective sample size.
struct WeightedStats {
    double mean = 0.0;
    double std_error = 0.0;
    double ess = 0.0;
};

inline WeightedStats weighted_stats(const std::vector<double>& values,
                                    const std::vector<double>& weights) {
    WeightedStats st;
    double wsum = 0.0, wsq = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        wsum += weights[i];
        wsq += weights[i] * weights[i];
    }
    if (wsum <= 0.0) throw ConfigError("statistics: zero total weight");
    for (std::size_t i = 0; i < values.size(); ++i)
        st.mean += weights[i] * values[i];
    st.mean /= wsum;
    double var = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = values[i] - st.mean;
        var += weights[i] * d * d;
    }
    var /= wsum;
    st.ess = wsum * wsum / wsq;
    st.std_error = std::sqrt(var / st.ess);
    return st;
}

}  // namespace detail

struct CylinderMass {
    CodeWindow word;
    double estimate = 0.0;
    double std_error = 0.0;
    bool exact = false;
    double ess = 0.0;  // effective sample size behind the error bar
};

// True when the cylinder integrand is the same number for every start
// point: all factors constant and a single vertex region covering the
// measure's support.
inline bool cylinder_integrand_constant(const MarkovSystem& s,
                                        std::span<const int> word) {
    if (word.empty()) return true;
    if (s.graph.vertex_count != 1) return false;
    for (int e : word) {
        if (e < 0 || e >= s.graph.edge_count())
            throw ConfigError("cylinder: unknown edge " + std::to_string(e));
        if (s.probabilities[static_cast<std::size_t>(e)].form !=
            ProbabilityFunction::Form::Constant)
            return false;
    }
    return true;
}

inline CylinderMass cylinder_mass(const MarkovSystem& s,
                                  const EmpiricalMeasure& mu,
                                  const CodeWindow& word) {
    CylinderMass out;
    out.word = word;
    if (word.symbols.empty()) {
        out.estimate = 1.0;
        out.exact = true;
        out.ess = static_cast<double>(mu.size());
        return out;
    }
    if (cylinder_integrand_constant(s, word.symbols)) {
        double prod = 1.0;
        bool chained = true;
        for (std::size_t k = 0; k + 1 < word.symbols.size(); ++k)
            chained = chained &&
                      (s.graph.edges[static_cast<std::size_t>(word.symbols[k])]
                           .terminal ==
                       s.graph.edges[static_cast<std::size_t>(word.symbols[k + 1])]
                           .initial);
        if (!chained) {
            prod = 0.0;  // single-vertex graphs never reach this
        } else {
            for (int e : word.symbols)
                prod *= s.probabilities[static_cast<std::size_t>(e)].value;
        }
        out.estimate = prod;
        out.exact = true;
        out.ess = static_cast<double>(mu.size());
        return out;
    }

    mu.check_dimension(s.dimension());
    std::vector<double> values(mu.size());
    Point cur, next;
    for (std::size_t i = 0; i < mu.size(); ++i)
        values[i] =
            detail::path_product(s, word.symbols, mu.point(i), cur, next);
    const detail::WeightedStats st = detail::weighted_stats(values, mu.weights);
    out.estimate = st.mean;
    out.std_error = st.std_error;
    out.ess = st.ess;
    return out;
}

// ---------------------------------------------------------------------------
// Shift invariance.

struct ShiftInvarianceRow {
    std::vector<int> word;
    double mass = 0.0;
    double mass_se = 0.0;
    // Prepending: sum over edges e of mass(e + word), against mass(word).
    double left_sum = 0.0;
    double left_discrepancy = 0.0;
    double left_se = 0.0;  // paired per-particle standard error
    // Appending: sum over edges e of mass(word + e), against mass(word).
    double right_sum = 0.0;
    double right_discrepancy = 0.0;
    double right_se = 0.0;
};

struct ShiftInvarianceReport {
    int max_word_length = 0;
    std::vector<ShiftInvarianceRow> rows;  // admissible words, length 1..max
    double max_left_over_se = 0.0;   // worst |left_discrepancy| / left_se
    double max_right_discrepancy = 0.0;
};

// Evaluates both extension identities for every admissible word up to
// max_word_length.  Appending holds by normalization alone; prepending
// additionally needs the measure to be invariant under the transfer step,
// which makes it the actual test.  Discrepancies are paired per particle,
// so their error bars reflect the difference, not the two masses.
inline ShiftInvarianceReport shift_invariance_check(const MarkovSystem& s,
                                                    const EmpiricalMeasure& mu,
                                                    int max_word_length) {
    if (max_word_length < 1)
        throw ConfigError("shift-invariance: need max_word_length >= 1");
    mu.check_dimension(s.dimension());

    ShiftInvarianceReport rep;
    rep.max_word_length = max_word_length;
    const int ecount = s.graph.edge_count();

    std::vector<double> f(mu.size()), left(mu.size()), right(mu.size());
    std::vector<double> diff(mu.size());
    Point cur, next;
    Point mapped(static_cast<std::size_t>(s.dimension()));
    for (int len = 1; len <= max_word_length; ++len) {
        for (const CodeWindow& win : enumerate_words(s.graph, len, true)) {
            const std::vector<int>& word = win.symbols;
            ShiftInvarianceRow row;
            row.word = word;
            std::vector<int> extended(word.size() + 1);
            for (std::size_t i = 0; i < mu.size(); ++i) {
                const std::span<const double> x = mu.point(i);
                f[i] = detail::path_product(s, word, x, cur, next);

                // All one-symbol prepends: factor at x, then the word from
                // the mapped point.
                double lsum = 0.0;
                for (int e = 0; e < ecount; ++e) {
                    const double p = eval_probability(s, e, x);
                    if (p == 0.0) continue;
                    apply_map_into(s, e, x, mapped);
                    lsum += p * detail::path_product(s, word, mapped, cur, next);
                }
                left[i] = lsum;

                // All one-symbol appends: the word's product times the total
                // outgoing probability at the endpoint.
                if (f[i] == 0.0) {
                    right[i] = 0.0;
                } else {
                    std::copy(word.begin(), word.end(), extended.begin());
                    double rsum = 0.0;
                    for (int e = 0; e < ecount; ++e) {
                        extended.back() = e;
                        rsum += detail::path_product(s, extended, x, cur, next);
                    }
                    right[i] = rsum;
                }
            }
            const detail::WeightedStats base =
                detail::weighted_stats(f, mu.weights);
            row.mass = base.mean;
            row.mass_se = base.std_error;

            for (std::size_t i = 0; i < mu.size(); ++i) diff[i] = left[i] - f[i];
            const detail::WeightedStats dl =
                detail::weighted_stats(diff, mu.weights);
            row.left_sum = row.mass + dl.mean;
            row.left_discrepancy = dl.mean;
            row.left_se = dl.std_error;

            for (std::size_t i = 0; i < mu.size(); ++i)
                diff[i] = right[i] - f[i];
            const detail::WeightedStats dr =
                detail::weighted_stats(diff, mu.weights);
            row.right_sum = row.mass + dr.mean;
            row.right_discrepancy = dr.mean;
            row.right_se = dr.std_error;

            if (row.left_se > 0.0)
                rep.max_left_over_se =
                    std::max(rep.max_left_over_se,
                             std::fabs(row.left_discrepancy) / row.left_se);
            rep.max_right_discrepancy = std::max(
                rep.max_right_discrepancy, std::fabs(row.right_discrepancy));
            rep.rows.push_back(std::move(row));
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Absolute-continuity diagnostic.

struct AbsContinuityRow {
    std::vector<int> word;
    double point_mass = 0.0;   // product along the word from the given point
    double anchor_mass = 0.0;  // (1/N) * product from the word's start anchor
    bool flagged = false;      // anchor mass zero but point mass positive
};

struct AbsContinuityReport {
    int word_length = 0;
    std::vector<AbsContinuityRow> rows;  // every word of the given length
    int flagged_count = 0;
};

// Compares, for every word of the given length, the mass seen from an
// arbitrary start point with the mass seen from the anchors.  A word that
// the anchors miss but the point charges breaks absolute continuity of the
// point's law with respect to the anchor law; with probabilities positive
// on their regions the only zero-mass words are the non-admissible ones,
// which both sides miss for the same structural reason.
inline AbsContinuityReport abs_continuity_diagnostic(const MarkovSystem& s,
                                                     const Point& x,
                                                     int word_length) {
    if (word_length < 1)
        throw ConfigError("abs-continuity: need word_length >= 1");
    check_dimension(s.space, x.size(), "diagnostic point");
    if (s.region_of(x) == 0)
        throw EscapeError("abs-continuity: point lies in no vertex region");

    AbsContinuityReport rep;
    rep.word_length = word_length;
    const double inv_n = 1.0 / static_cast<double>(s.graph.vertex_count);
    Point cur, next;
    for (const CodeWindow& win : enumerate_words(s.graph, word_length, false)) {
        const std::vector<int>& word = win.symbols;
        AbsContinuityRow row;
        row.word = word;
        row.point_mass = detail::path_product(s, word, x, cur, next);
        const std::size_t v0 = static_cast<std::size_t>(
            s.graph.edges[static_cast<std::size_t>(word.front())].initial - 1);
        row.anchor_mass =
            inv_n * detail::path_product(s, word, s.anchors[v0], cur, next);
        row.flagged = row.anchor_mass == 0.0 && row.point_mass > 0.0;
        if (row.flagged) ++rep.flagged_count;
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Entropy.

struct EntropyEstimate {
    double sum_p_log_p = 0.0;   // integral of sum_e p_e log p_e (<= 0)
    double entropy_nats = 0.0;  // its negative, the usual entropy
    double std_error = 0.0;
};

// Integrates sum_e p_e(x) log p_e(x) against the particle measure, with
// 0 log 0 = 0.  Both the raw (nonpositive) integral and its negative are
// reported so the sign convention is explicit.
inline EntropyEstimate entropy_estimate(const MarkovSystem& s,
                                        const EmpiricalMeasure& mu) {
    mu.check_dimension(s.dimension());
    std::vector<double> values(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const std::span<const double> x = mu.point(i);
        double acc = 0.0;
        for (int e = 0; e < s.graph.edge_count(); ++e) {
            const double p = eval_probability(s, e, x);
            if (p > 0.0) acc += p * std::log(p);
        }
        values[i] = acc;
    }
    const detail::WeightedStats st = detail::weighted_stats(values, mu.weights);
    EntropyEstimate out;
    out.sum_p_log_p = st.mean;
    out.entropy_nats = -st.mean;
    out.std_error = st.std_error;
    return out;
}

}  // namespace cms
