#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "corrslam/errors.hpp"
#include "corrslam/fixed_point.hpp"
#include "corrslam/pose2d.hpp"
#include "corrslam/quantized_map.hpp"
#include "corrslam/scan.hpp"

namespace corrslam {

// Discrete search window around the initial pose. Candidates are the offsets
// (n_x, n_y, n_theta) with n_x in [-wx, wx), n_y in [-wy, wy) and n_theta in
// [-wtheta, wtheta); a zero half-extent collapses that axis to the single
// offset 0. The linear half-extents must tile into whole coarse blocks.
struct SearchWindow {
    int wx = 0;
    int wy = 0;
    int wtheta = 0;
    double step_linear = 0.05;   // r, equals the map resolution
    double step_angular = 0.005; // delta_theta
    int block = 8;               // w, coarse block size
};

// Arc step matching the linear step at the scan's farthest point.
inline double default_delta_theta(double resolution, double max_range) {
    return resolution / std::max(max_range, resolution);
}

// Builds a window from metric extents (full widths, as reported by sensor
// configs), rounding half-extents up so 2*w_x and 2*w_y are multiples of the
// block size.
inline SearchWindow make_search_window(double extent_x_m, double extent_y_m,
                                       double extent_theta_rad,
                                       double resolution, double delta_theta,
                                       int block = 8) {
    auto cells = [&](double extent) {
        int c = static_cast<int>(std::ceil(extent / (2.0 * resolution) - 1e-9));
        if (c <= 0)
            return 0;
        while ((2 * c) % block != 0)
            ++c;
        return c;
    };
    SearchWindow win;
    win.wx = cells(extent_x_m);
    win.wy = cells(extent_y_m);
    win.wtheta = std::max(
        0, static_cast<int>(
               std::ceil(extent_theta_rad / (2.0 * delta_theta) - 1e-9)));
    win.step_linear = resolution;
    win.step_angular = delta_theta;
    win.block = block;
    return win;
}

struct MatchQuery {
    const QuantizedMap* map = nullptr;  // may be null when reuse_map is set
    const Scan* scan = nullptr;         // may be null when reuse_scan is set
    Pose2D xi0;
    SearchWindow window;
    bool reuse_map = false;
    bool reuse_scan = false;
};

struct MatchSteps {
    int nx = 0;
    int ny = 0;
    int ntheta = 0;

    bool operator==(const MatchSteps&) const = default;
};

struct MatchResult {
    Pose2D pose;
    std::int32_t score = 0;
    MatchSteps best_steps;
    std::uint64_t num_score_evals = 0;   // fine-map candidate evaluations
    std::uint64_t num_coarse_evals = 0;
};

// Scan converted to Q16.16 range-angle pairs, as the matcher buffers it.
struct FixedScan {
    std::vector<FixedPoint32> range;
    std::vector<FixedPoint32> angle;

    std::size_t size() const { return range.size(); }
    bool empty() const { return range.empty(); }

    static FixedScan from_scan(const Scan& scan) {
        FixedScan out;
        out.range.reserve(scan.size());
        out.angle.reserve(scan.size());
        for (const ScanPoint& p : scan.points) {
            out.range.push_back(FixedPoint32::from_real(p.range));
            out.angle.push_back(FixedPoint32::from_real(p.angle));
        }
        return out;
    }
};

struct DiscretizedScan {
    std::vector<CellIndex> indices;

    std::size_t size() const { return indices.size(); }
};

// Scan discretization in pure fixed-point arithmetic. Cell indices are
// relative to the quantized map's origin; the multiply by the reciprocal
// resolution keeps exact integers exact (1/0.05 is representable, 0.05 is
// not).
inline DiscretizedScan discretize(const FixedScan& scan,
                                  FixedPoint32 xi_x, FixedPoint32 xi_y,
                                  FixedPoint32 xi_theta,
                                  const QuantizedMap& geom) {
    const TrigTable& trig = TrigTable::instance();
    const FixedPoint32 inv_res = FixedPoint32::from_real(1.0 / geom.resolution);
    const FixedPoint32 off_x = xi_x - FixedPoint32::from_real(geom.origin_x);
    const FixedPoint32 off_y = xi_y - FixedPoint32::from_real(geom.origin_y);
    DiscretizedScan out;
    out.indices.resize(scan.size());
    for (std::size_t k = 0; k < scan.size(); ++k) {
        const std::uint32_t brad =
            TrigTable::to_brad(scan.angle[k] + xi_theta);
        const FixedPoint32 px =
            scan.range[k].mul(trig.cos_brad(brad)) + off_x;
        const FixedPoint32 py =
            scan.range[k].mul(trig.sin_brad(brad)) + off_y;
        out.indices[k] = CellIndex{
            static_cast<int>((static_cast<std::int64_t>(px.raw) * inv_res.raw) >> 32),
            static_cast<int>((static_cast<std::int64_t>(py.raw) * inv_res.raw) >> 32)};
    }
    return out;
}

inline DiscretizedScan discretize(const FixedScan& scan, const Pose2D& xi,
                                  const QuantizedMap& geom) {
    return discretize(scan, FixedPoint32::from_real(xi.x),
                      FixedPoint32::from_real(xi.y),
                      FixedPoint32::from_real(xi.theta), geom);
}

// Fine score: sum of 6-bit cell values under the shifted scan footprint.
// Out-of-bounds points contribute 0.
inline std::int32_t score_fine(const QuantizedMap& map,
                               const DiscretizedScan& idx, int nx, int ny) {
    std::int32_t s = 0;
    for (const CellIndex& c : idx.indices)
        s += map.at(c.i + nx, c.j + ny);
    return s;
}

// Coarse score: same sum over the sliding-window-maximum map; upper-bounds
// every fine score in the w x w block anchored at (nx, ny).
inline std::int32_t score_coarse(const CoarseMap& coarse,
                                 const DiscretizedScan& idx, int nx, int ny) {
    std::int32_t s = 0;
    for (const CellIndex& c : idx.indices)
        s += coarse.at(c.i + nx, c.j + ny);
    return s;
}

// One matcher instance mirrors one hardware core: it owns a cached map (with
// its coarse maps, built once per load) and a cached scan, and runs queries
// single-threaded. Distinct engines share nothing and may run concurrently.
class CsmEngine {
  public:
    // Candidate range along one axis: [lo, hi).
    struct Span {
        int lo = 0;
        int hi = 1;
    };

    void load_map(const QuantizedMap& map) {
        map_ = map;
        ++map_loads_;
        build_coarse_maps(default_block_);
    }

    void load_scan(const Scan& scan) {
        scan_ = FixedScan::from_scan(scan);
        has_scan_ = true;
        ++scan_loads_;
    }

    MatchResult match_reference(const MatchQuery& q) {
        return match_reference(q, theta_span(q.window));
    }

    MatchResult match_optimized(const MatchQuery& q) {
        return match_optimized(q, theta_span(q.window));
    }

    MatchResult match_oracle(const MatchQuery& q) {
        return match_oracle(q, theta_span(q.window));
    }

    // Theta-restricted variants back the split-window mode where two engines
    // each take half of the angular range.
    MatchResult match_reference(const MatchQuery& q, Span theta) {
        prepare(q);
        return run_match(q, theta, Mode::kReference);
    }

    MatchResult match_optimized(const MatchQuery& q, Span theta) {
        prepare(q);
        if (q.window.block != 8)
            throw std::invalid_argument(
                "match_optimized: unroll factor is fixed at w = 8");
        return run_match(q, theta, Mode::kOptimized);
    }

    MatchResult match_oracle(const MatchQuery& q, Span theta) {
        prepare(q);
        const Span xs = axis_span(q.window.wx);
        const Span ys = axis_span(q.window.wy);
        const std::int64_t candidates =
            static_cast<std::int64_t>(xs.hi - xs.lo) * (ys.hi - ys.lo) *
            (theta.hi - theta.lo);
        if (candidates > 10'000'000)
            throw WindowTooLargeError("match_oracle: window not enumerable");
        return run_match(q, theta, Mode::kOracle);
    }

    bool has_map() const { return map_.has_value(); }
    bool has_scan() const { return has_scan_; }
    const QuantizedMap& cached_map() const { return *map_; }

    std::uint64_t map_load_count() const { return map_loads_; }
    std::uint64_t scan_load_count() const { return scan_loads_; }
    std::uint64_t coarse_build_count() const { return coarse_builds_; }

  private:
    enum class Mode { kReference, kOptimized, kOracle };

    static Span axis_span(int half_extent) {
        return half_extent > 0 ? Span{-half_extent, half_extent} : Span{0, 1};
    }

    static Span theta_span(const SearchWindow& win) {
        return axis_span(win.wtheta);
    }

    void build_coarse_maps(int block) {
        coarse_ = build_coarse(*map_, block);
        coarse_re_ = rearrange_coarse(coarse_);
        coarse_block_ = block;
        ++coarse_builds_;
    }

    void prepare(const MatchQuery& q) {
        if (q.reuse_map) {
            if (!map_)
                throw ReuseWithoutLoadError("reuse_map set but no map cached");
        } else {
            if (!q.map)
                throw std::invalid_argument("query has no map");
            load_map(*q.map);
        }
        if (q.reuse_scan) {
            if (!has_scan_)
                throw ReuseWithoutLoadError("reuse_scan set but no scan cached");
        } else {
            if (!q.scan)
                throw std::invalid_argument("query has no scan");
            load_scan(*q.scan);
        }
        if (scan_.empty())
            throw EmptyScanError();
        validate_window(q.window);
        if (coarse_block_ != q.window.block)
            build_coarse_maps(q.window.block);
    }

    static void validate_window(const SearchWindow& win) {
        if (win.wx < 0 || win.wy < 0 || win.wtheta < 0)
            throw std::invalid_argument("negative window half-extent");
        if (win.block < 1)
            throw std::invalid_argument("window block must be >= 1");
        if (2 * win.wx > kCoreMapMaxSide || 2 * win.wy > kCoreMapMaxSide)
            throw WindowTooLargeError("search window exceeds the map buffer");
        if ((2 * win.wx) % win.block != 0 || (2 * win.wy) % win.block != 0)
            throw std::invalid_argument(
                "window extents must tile into whole coarse blocks");
        if (win.step_linear <= 0.0 || win.step_angular <= 0.0)
            throw std::invalid_argument("window steps must be positive");
    }

    MatchResult run_match(const MatchQuery& q, Span theta, Mode mode) {
        const SearchWindow& win = q.window;
        const QuantizedMap& map = *map_;
        const Span xs = axis_span(win.wx);
        const Span ys = axis_span(win.wy);
        const int w = win.block;

        std::int32_t best = -1;
        MatchSteps steps{xs.lo, ys.lo, theta.lo};
        std::uint64_t fine_evals = 0;
        std::uint64_t coarse_evals = 0;

        const FixedPoint32 dtheta_fx = FixedPoint32::from_real(win.step_angular);
        const FixedPoint32 theta0_fx = FixedPoint32::from_real(q.xi0.theta);
        const FixedPoint32 x_fx = FixedPoint32::from_real(q.xi0.x);
        const FixedPoint32 y_fx = FixedPoint32::from_real(q.xi0.y);

        for (int nt = theta.lo; nt < theta.hi; ++nt) {
            const FixedPoint32 theta_fx{theta0_fx.raw + nt * dtheta_fx.raw};
            const DiscretizedScan idx =
                discretize(scan_, x_fx, y_fx, theta_fx, map);
            switch (mode) {
                case Mode::kReference:
                    sweep_reference(map, idx, xs, ys, w, nt, best, steps,
                                    fine_evals, coarse_evals);
                    break;
                case Mode::kOptimized:
                    sweep_optimized(map, idx, xs, ys, w, nt, best, steps,
                                    fine_evals, coarse_evals);
                    break;
                case Mode::kOracle:
                    sweep_exhaustive(map, idx, xs, ys, w, nt, best, steps,
                                     fine_evals);
                    break;
            }
        }

        MatchResult res;
        res.score = best;
        res.best_steps = steps;
        res.num_score_evals = fine_evals;
        res.num_coarse_evals = coarse_evals;
        res.pose = Pose2D{q.xi0.x + win.step_linear * steps.nx,
                          q.xi0.y + win.step_linear * steps.ny,
                          normalize_angle(q.xi0.theta +
                                          win.step_angular * steps.ntheta)};
        return res;
    }

    // Coarse sweep with pruning, block by block (reference semantics).
    void sweep_reference(const QuantizedMap& map, const DiscretizedScan& idx,
                         Span xs, Span ys, int w, int nt, std::int32_t& best,
                         MatchSteps& steps, std::uint64_t& fine_evals,
                         std::uint64_t& coarse_evals) {
        for (int ny0 = ys.lo; ny0 < ys.hi; ny0 += w) {
            for (int nx0 = xs.lo; nx0 < xs.hi; nx0 += w) {
                const std::int32_t upper = score_coarse(coarse_, idx, nx0, ny0);
                ++coarse_evals;
                if (upper <= best)
                    continue;
                const int ny_end = std::min(ny0 + w, ys.hi);
                const int nx_end = std::min(nx0 + w, xs.hi);
                for (int ny = ny0; ny < ny_end; ++ny) {
                    for (int nx = nx0; nx < nx_end; ++nx) {
                        const std::int32_t s = score_fine(map, idx, nx, ny);
                        ++fine_evals;
                        if (s > best) {
                            best = s;
                            steps = MatchSteps{nx, ny, nt};
                        }
                    }
                }
            }
        }
    }

    // Exhaustive sweep in the same block-major candidate order, no coarse
    // stage and no pruning.
    void sweep_exhaustive(const QuantizedMap& map, const DiscretizedScan& idx,
                          Span xs, Span ys, int w, int nt, std::int32_t& best,
                          MatchSteps& steps, std::uint64_t& fine_evals) {
        for (int ny0 = ys.lo; ny0 < ys.hi; ny0 += w) {
            for (int nx0 = xs.lo; nx0 < xs.hi; nx0 += w) {
                const int ny_end = std::min(ny0 + w, ys.hi);
                const int nx_end = std::min(nx0 + w, xs.hi);
                for (int ny = ny0; ny < ny_end; ++ny) {
                    for (int nx = nx0; nx < nx_end; ++nx) {
                        const std::int32_t s = score_fine(map, idx, nx, ny);
                        ++fine_evals;
                        if (s > best) {
                            best = s;
                            steps = MatchSteps{nx, ny, nt};
                        }
                    }
                }
            }
        }
    }

    // Hardware-shaped sweep: the coarse stage evaluates eight consecutive
    // blocks per pass against the rearranged layout, and the fine stage
    // accumulates 2w candidate scores per pass. Results are identical to the
    // reference sweep, tie-break included.
    void sweep_optimized(const QuantizedMap& map, const DiscretizedScan& idx,
                         Span xs, Span ys, int w, int nt, std::int32_t& best,
                         MatchSteps& steps, std::uint64_t& fine_evals,
                         std::uint64_t& coarse_evals) {
        const int blocks_x = (xs.hi - xs.lo + w - 1) / w;
        const int stride = coarse_re_.stride();
        const int row_blocks = coarse_re_.row_blocks;
        const std::size_t n = idx.size();

        for (int ny0 = ys.lo; ny0 < ys.hi; ny0 += w) {
            for (int gx = 0; gx < blocks_x; gx += 8) {
                std::int32_t upper[8] = {0, 0, 0, 0, 0, 0, 0, 0};
                for (std::size_t k = 0; k < n; ++k) {
                    const int j = idx.indices[k].j + ny0;
                    if (j < 0 || j >= coarse_re_.height)
                        continue;
                    const int c0 = idx.indices[k].i + xs.lo + gx * w;
                    // Valid unrolled lanes: 0 <= c0 + i*w < width.
                    int i_min = 0;
                    if (c0 < 0)
                        i_min = (-c0 + w - 1) / w;
                    int i_max = (c0 < coarse_re_.width)
                                    ? std::min(8, (coarse_re_.width - 1 - c0) / w + 1)
                                    : 0;
                    if (i_min >= i_max)
                        continue;
                    const int c_start = c0 + i_min * w;
                    const std::uint8_t* row =
                        coarse_re_.cells.data() +
                        static_cast<std::size_t>(j) * stride +
                        (c_start % w) * row_blocks + c_start / w;
                    for (int i = i_min; i < i_max; ++i)
                        upper[i] += row[i - i_min];
                }
                coarse_evals += static_cast<std::uint64_t>(
                    std::min(8, blocks_x - gx));
                for (int i = 0; i < 8 && gx + i < blocks_x; ++i) {
                    if (upper[i] <= best)
                        continue;
                    const int nx0 = xs.lo + (gx + i) * w;
                    fine_block(map, idx, nx0, ny0, xs, ys, w, nt, best, steps,
                               fine_evals);
                }
            }
        }
    }

    // Parallel-structured fine matching: two candidate rows per pass, all w
    // column offsets accumulated together.
    void fine_block(const QuantizedMap& map, const DiscretizedScan& idx,
                    int nx0, int ny0, Span xs, Span ys, int w, int nt,
                    std::int32_t& best, MatchSteps& steps,
                    std::uint64_t& fine_evals) {
        const int nx_end = std::min(nx0 + w, xs.hi);
        const int ny_end = std::min(ny0 + w, ys.hi);
        const int width = map.width;
        const int height = map.height;
        std::vector<std::int32_t> acc(static_cast<std::size_t>(w) * 2);

        for (int ny = ny0; ny < ny_end; ny += 2) {
            const int rows = std::min(2, ny_end - ny);
            std::fill(acc.begin(), acc.end(), 0);
            for (const CellIndex& c : idx.indices) {
                const int i0 = c.i + nx0;
                const int lane_min = std::max(0, -i0);
                const int lane_max = std::min(w, width - i0);
                if (lane_min >= lane_max)
                    continue;
                for (int dj = 0; dj < rows; ++dj) {
                    const int j = c.j + ny + dj;
                    if (j < 0 || j >= height)
                        continue;
                    const std::uint8_t* row =
                        map.cells.data() +
                        static_cast<std::size_t>(j) * width + i0;
                    std::int32_t* lane = acc.data() + static_cast<std::size_t>(dj) * w;
                    for (int i = lane_min; i < lane_max; ++i)
                        lane[i] += row[i];
                }
            }
            // Candidate order matches the reference sweep: row-major inside
            // the block, earliest strict maximum wins.
            for (int dj = 0; dj < rows; ++dj) {
                for (int i = 0; i < nx_end - nx0; ++i) {
                    const std::int32_t s = acc[static_cast<std::size_t>(dj) * w + i];
                    ++fine_evals;
                    if (s > best) {
                        best = s;
                        steps = MatchSteps{nx0 + i, ny + dj, nt};
                    }
                }
            }
        }
    }

    std::optional<QuantizedMap> map_;
    CoarseMap coarse_;
    CoarseMap coarse_re_;
    int coarse_block_ = 0;
    int default_block_ = 8;
    FixedScan scan_;
    bool has_scan_ = false;

    std::uint64_t map_loads_ = 0;
    std::uint64_t scan_loads_ = 0;
    std::uint64_t coarse_builds_ = 0;
};

// One-to-many matching: the map is transferred once, then reused for every
// scan in the batch.
inline std::vector<MatchResult> match_scans_against_map(
    CsmEngine& engine, const QuantizedMap& map, std::span<const Scan> scans,
    std::span<const Pose2D> centers, const SearchWindow& window) {
    if (scans.size() != centers.size())
        throw std::invalid_argument("scan/center count mismatch");
    std::vector<MatchResult> results;
    results.reserve(scans.size());
    for (std::size_t k = 0; k < scans.size(); ++k) {
        MatchQuery q;
        q.map = &map;
        q.scan = &scans[k];
        q.xi0 = centers[k];
        q.window = window;
        q.reuse_map = (k > 0);
        results.push_back(engine.match_optimized(q));
    }
    return results;
}

// Many-to-one matching: the scan is transferred once, then reused against
// every map in the batch.
inline std::vector<MatchResult> match_scan_against_maps(
    CsmEngine& engine, std::span<const QuantizedMap> maps, const Scan& scan,
    std::span<const Pose2D> centers, const SearchWindow& window) {
    if (maps.size() != centers.size())
        throw std::invalid_argument("map/center count mismatch");
    std::vector<MatchResult> results;
    results.reserve(maps.size());
    for (std::size_t k = 0; k < maps.size(); ++k) {
        MatchQuery q;
        q.map = &maps[k];
        q.scan = &scan;
        q.xi0 = centers[k];
        q.window = window;
        q.reuse_scan = (k > 0);
        results.push_back(engine.match_optimized(q));
    }
    return results;
}

}  // namespace corrslam
