#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "corrslam/pose2d.hpp"

namespace corrslam {

// Hard cap on scan length after preprocessing (core scan-buffer capacity).
inline constexpr std::size_t kMaxScanPoints = 512;

// One range-angle measurement in the sensor's polar frame.
struct ScanPoint {
    double range = 0.0;
    double angle = 0.0;
};

struct Scan {
    std::vector<ScanPoint> points;
    double timestamp = 0.0;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
};

// Integer grid cell index; may lie outside any particular map's bounds.
struct CellIndex {
    int i = 0;
    int j = 0;

    bool operator==(const CellIndex&) const = default;
};

struct ScanFilter {
    double min_range = 0.1;
    double max_range = 80.0;
    std::size_t max_points = kMaxScanPoints;
};

// Drops out-of-range returns, then uniformly decimates to max_points while
// preserving angular order.
inline Scan preprocess_scan(const Scan& raw, const ScanFilter& cfg = {}) {
    Scan out;
    out.timestamp = raw.timestamp;
    out.points.reserve(raw.points.size());
    for (const ScanPoint& p : raw.points) {
        if (!std::isfinite(p.range) || !std::isfinite(p.angle))
            continue;
        if (p.range < cfg.min_range || p.range > cfg.max_range)
            continue;
        out.points.push_back(p);
    }
    const std::size_t n = out.points.size();
    if (n > cfg.max_points) {
        std::vector<ScanPoint> kept;
        kept.reserve(cfg.max_points);
        for (std::size_t k = 0; k < cfg.max_points; ++k)
            kept.push_back(out.points[k * n / cfg.max_points]);
        out.points = std::move(kept);
    }
    return out;
}

// Guard applied before flooring a cell quotient. Coordinates that land a
// rounding error below an exact cell boundary (e.g. 1.0 / 0.05) must resolve
// to the boundary cell.
inline int floor_cell(double q) {
    return static_cast<int>(std::floor(q + 1e-9));
}

// Projects a scan point posed at xi onto the grid with the given resolution
// and origin (world coordinates of cell (0, 0)). Floor, not round; the
// returned index may be out of bounds.
inline CellIndex project_point(const Pose2D& xi, const ScanPoint& z,
                               double resolution,
                               double origin_x, double origin_y) {
    const double wx = z.range * std::cos(z.angle + xi.theta) + xi.x;
    const double wy = z.range * std::sin(z.angle + xi.theta) + xi.y;
    return CellIndex{floor_cell((wx - origin_x) / resolution),
                     floor_cell((wy - origin_y) / resolution)};
}

}  // namespace corrslam
