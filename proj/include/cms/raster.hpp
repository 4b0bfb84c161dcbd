// Histograms and raster images of point clouds.
//
// Binning is closed-open [edge_k, edge_{k+1}) with the final bin closed at
// the upper boundary.  Values within 1e-12 of a bin edge are nudged up into
// the higher bin: exact edge values that floating-point evaluation leaves an
// ulp short (e.g. fl(2/3) on a ternary grid) then land in the bin whose
// closed lower edge they equal.  The width is small enough that genuinely
// interior points are never moved.
//
// Rasters are row-major with row 0 at the TOP (highest y), matching image
// conventions; PGM output is binary P5, max-normalized to 255 grey levels.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cms/csv.hpp"
#include "cms/errors.hpp"
#include "cms/measure.hpp"

namespace cms {

inline constexpr double kBinEdgeSnap = 1e-12;

namespace detail {

// Bin index in [0, bins) or -1 when x lies outside [lo, hi] by more than
// the snap width.
inline int snap_bin(double x, double lo, double hi, int bins) {
    if (!(x >= lo - kBinEdgeSnap && x <= hi + kBinEdgeSnap)) return -1;
    const double width = (hi - lo) / bins;
    int k = static_cast<int>(std::floor((x - lo) / width));
    if (lo + (k + 1) * width - x <= kBinEdgeSnap) ++k;
    return std::clamp(k, 0, bins - 1);
}

}  // namespace detail

struct Histogram1D {
    double lo = 0.0, hi = 1.0;
    int bins = 1;
    std::vector<double> mass;     // index = bin
    double dropped = 0.0;         // weight outside [lo, hi]

    void add(double x, double w) {
        const int k = detail::snap_bin(x, lo, hi, bins);
        if (k < 0) dropped += w;
        else mass[static_cast<std::size_t>(k)] += w;
    }

    double total() const {
        double t = 0.0;
        for (double m : mass) t += m;
        return t;
    }
};

inline Histogram1D histogram_1d(const EmpiricalMeasure& m, int bins, double lo,
                                double hi) {
    if (m.dimension != 1)
        throw ConfigError("histogram: needs a 1-dimensional cloud, got dimension " +
                          std::to_string(m.dimension));
    if (bins < 1) throw ConfigError("histogram: bins must be >= 1");
    if (!(lo < hi)) throw ConfigError("histogram: needs lo < hi");
    Histogram1D h;
    h.lo = lo;
    h.hi = hi;
    h.bins = bins;
    h.mass.assign(static_cast<std::size_t>(bins), 0.0);
    for (std::size_t i = 0; i < m.size(); ++i) h.add(m.point(i)[0], m.weights[i]);
    return h;
}

inline void write_histogram_csv(std::ostream& out, const Histogram1D& h) {
    CsvWriter csv(out);
    csv.row("bin", "lo", "hi", "mass");
    const double width = (h.hi - h.lo) / h.bins;
    for (int k = 0; k < h.bins; ++k)
        csv.row(k, h.lo + k * width, h.lo + (k + 1) * width,
                h.mass[static_cast<std::size_t>(k)]);
}

struct Raster {
    int width = 1, height = 1;
    BoundingBox box;              // 2-d window
    std::vector<double> mass;     // row-major, row 0 = top (highest y)
    double dropped = 0.0;

    double& at(int row, int col) {
        return mass[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                    static_cast<std::size_t>(col)];
    }
    double at(int row, int col) const {
        return mass[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                    static_cast<std::size_t>(col)];
    }

    void add(double x, double y, double w) {
        const int c = detail::snap_bin(x, box.lo[0], box.hi[0], width);
        const int r = detail::snap_bin(y, box.lo[1], box.hi[1], height);
        if (c < 0 || r < 0) {
            dropped += w;
            return;
        }
        at(height - 1 - r, c) += w;
    }
};

inline Raster rasterize(const EmpiricalMeasure& m, int width, int height,
                        const BoundingBox& box) {
    if (m.dimension != 2)
        throw ConfigError("raster: needs a 2-dimensional cloud, got dimension " +
                          std::to_string(m.dimension));
    if (width < 1 || height < 1)
        throw ConfigError("raster: width and height must be >= 1");
    box.check(2);
    Raster r;
    r.width = width;
    r.height = height;
    r.box = box;
    r.mass.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
                  0.0);
    for (std::size_t i = 0; i < m.size(); ++i) {
        const std::span<const double> p = m.point(i);
        r.add(p[0], p[1], m.weights[i]);
    }
    return r;
}

// Binary P5, max-normalized.  Refuses an all-empty raster: nothing fell
// inside the window, which indicates a bad window or an empty cloud.
inline void write_pgm(std::ostream& out, const Raster& r) {
    double peak = 0.0;
    for (double m : r.mass) peak = std::max(peak, m);
    if (peak <= 0.0)
        throw ConfigError("render: no mass inside the window (empty point cloud?)");
    out << "P5\n" << r.width << " " << r.height << "\n255\n";
    std::vector<unsigned char> bytes;
    bytes.reserve(r.mass.size());
    for (double m : r.mass)
        bytes.push_back(static_cast<unsigned char>(
            std::lround(255.0 * (m / peak))));
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

}  // namespace cms
