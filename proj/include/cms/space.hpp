// Metric space descriptors, points, and vertex regions.
//
// State spaces are R^d with one of the L1 / L2 / Linf metrics; the norm of
// the same kind doubles as the radial argument of the trigonometric
// probability profiles.  Each graph vertex owns a closed region (axis box,
// half-space, or all of R^d); regions of distinct vertices are expected to be
// pairwise disjoint.  Membership tests are exact closed inequalities, which
// keeps "probability zero off the region" bitwise and non-admissible cylinder
// masses exactly zero.
#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cms/errors.hpp"

namespace cms {

using Point = std::vector<double>;

enum class MetricKind { L1, L2, Linf };

inline std::string metric_name(MetricKind m) {
    switch (m) {
        case MetricKind::L1: return "L1";
        case MetricKind::L2: return "L2";
        case MetricKind::Linf: return "Linf";
    }
    return "?";
}

struct MetricSpaceDescriptor {
    int dimension = 1;
    MetricKind metric = MetricKind::L2;
};

inline void check_dimension(const MetricSpaceDescriptor& sp, std::size_t n,
                            const char* what) {
    if (n != static_cast<std::size_t>(sp.dimension))
        throw ConfigError(std::string(what) + ": expected dimension " +
                          std::to_string(sp.dimension) + ", got " +
                          std::to_string(n));
}

inline double norm_of(const MetricSpaceDescriptor& sp, std::span<const double> x) {
    check_dimension(sp, x.size(), "norm");
    double acc = 0.0;
    switch (sp.metric) {
        case MetricKind::L1:
            for (double v : x) acc += std::fabs(v);
            return acc;
        case MetricKind::L2:
            for (double v : x) acc += v * v;
            return std::sqrt(acc);
        case MetricKind::Linf:
            for (double v : x) acc = std::max(acc, std::fabs(v));
            return acc;
    }
    return acc;
}

inline double distance(const MetricSpaceDescriptor& sp,
                       std::span<const double> x, std::span<const double> y) {
    check_dimension(sp, x.size(), "distance");
    check_dimension(sp, y.size(), "distance");
    double acc = 0.0;
    switch (sp.metric) {
        case MetricKind::L1:
            for (std::size_t k = 0; k < x.size(); ++k) acc += std::fabs(x[k] - y[k]);
            return acc;
        case MetricKind::L2:
            for (std::size_t k = 0; k < x.size(); ++k) {
                const double d = x[k] - y[k];
                acc += d * d;
            }
            return std::sqrt(acc);
        case MetricKind::Linf:
            for (std::size_t k = 0; k < x.size(); ++k)
                acc = std::max(acc, std::fabs(x[k] - y[k]));
            return acc;
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Vertex regions.

struct FullSpace {};

struct AxisBox {
    std::vector<double> lo, hi;  // closed box, componentwise lo <= x <= hi
};

enum class HalfSpaceSense { GreaterEqual, LessEqual };

struct HalfSpace {
    std::vector<double> normal;
    double offset = 0.0;  // <normal, x> >= offset (or <=) — closed
    HalfSpaceSense sense = HalfSpaceSense::GreaterEqual;
};

struct VertexRegion {
    std::variant<FullSpace, AxisBox, HalfSpace> shape = FullSpace{};

    bool contains(std::span<const double> x) const {
        if (std::holds_alternative<FullSpace>(shape)) return true;
        if (const AxisBox* b = std::get_if<AxisBox>(&shape)) {
            for (std::size_t k = 0; k < x.size(); ++k)
                if (x[k] < b->lo[k] || x[k] > b->hi[k]) return false;
            return true;
        }
        const HalfSpace& h = std::get<HalfSpace>(shape);
        double dot = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) dot += h.normal[k] * x[k];
        return h.sense == HalfSpaceSense::GreaterEqual ? dot >= h.offset
                                                       : dot <= h.offset;
    }

    bool bounded() const { return std::holds_alternative<AxisBox>(shape); }

    void check(int dimension, int vertex) const {
        const std::string where = "region " + std::to_string(vertex);
        if (const AxisBox* b = std::get_if<AxisBox>(&shape)) {
            if (b->lo.size() != static_cast<std::size_t>(dimension) ||
                b->hi.size() != static_cast<std::size_t>(dimension))
                throw ConfigError(where + ": box bounds must have " +
                                  std::to_string(dimension) + " entries");
            for (int k = 0; k < dimension; ++k)
                if (!(b->lo[static_cast<std::size_t>(k)] <=
                      b->hi[static_cast<std::size_t>(k)]))
                    throw ConfigError(where + ": empty box on axis " +
                                      std::to_string(k));
        } else if (const HalfSpace* h = std::get_if<HalfSpace>(&shape)) {
            if (h->normal.size() != static_cast<std::size_t>(dimension))
                throw ConfigError(where + ": normal must have " +
                                  std::to_string(dimension) + " entries");
            double mag = 0.0;
            for (double v : h->normal) mag += std::fabs(v);
            if (mag == 0.0) throw ConfigError(where + ": zero normal");
        }
    }
};

// Axis-aligned sampling window, used to bound grids and random draws over
// unbounded regions.
struct BoundingBox {
    std::vector<double> lo, hi;

    static BoundingBox cube(int dimension, double lo, double hi) {
        BoundingBox b;
        b.lo.assign(static_cast<std::size_t>(dimension), lo);
        b.hi.assign(static_cast<std::size_t>(dimension), hi);
        return b;
    }

    void check(int dimension) const {
        if (lo.size() != static_cast<std::size_t>(dimension) ||
            hi.size() != static_cast<std::size_t>(dimension))
            throw ConfigError("bbox: needs " + std::to_string(dimension) +
                              " lo/hi pairs");
        for (std::size_t k = 0; k < lo.size(); ++k)
            if (!(lo[k] < hi[k]))
                throw ConfigError("bbox: lo must be < hi on axis " +
                                  std::to_string(k));
    }
};

// Sampling window for one region: the bounding box tightened by the region's
// own box bounds when it has any.
inline BoundingBox effective_box(const VertexRegion& region, const BoundingBox& box) {
    BoundingBox out = box;
    if (const AxisBox* b = std::get_if<AxisBox>(&region.shape)) {
        for (std::size_t k = 0; k < out.lo.size(); ++k) {
            out.lo[k] = std::max(out.lo[k], b->lo[k]);
            out.hi[k] = std::min(out.hi[k], b->hi[k]);
        }
    }
    return out;
}

}  // namespace cms
