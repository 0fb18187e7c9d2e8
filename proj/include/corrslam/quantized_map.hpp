#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "corrslam/errors.hpp"
#include "corrslam/grid_map.hpp"

namespace corrslam {

// Core buffer budget: at most 320x320 cells per transferred map.
inline constexpr int kCoreMapMaxSide = 320;

// World-rectangle selecting the map region transferred to the matcher.
struct WorldWindow {
    double center_x = 0.0;
    double center_y = 0.0;
    double size_x = 16.0;  // meters
    double size_y = 16.0;
};

// 8-bit crop of a GridMap, v = floor(p * 255). This is the packet payload;
// the matcher keeps only the high 6 bits on ingest.
struct MapCrop8 {
    int width = 0;
    int height = 0;
    double resolution = 0.05;
    double origin_x = 0.0;
    double origin_y = 0.0;
    std::vector<std::uint8_t> bytes;
};

// Occupancy map as the matcher stores it: 6-bit cell values (0..63).
struct QuantizedMap {
    int width = 0;
    int height = 0;
    double resolution = 0.05;
    double origin_x = 0.0;
    double origin_y = 0.0;
    std::vector<std::uint8_t> cells;  // row-major, each <= 63

    // Out-of-bounds cells contribute nothing to matching scores.
    std::uint8_t at(int i, int j) const {
        if (i < 0 || i >= width || j < 0 || j >= height)
            return 0;
        return cells[static_cast<std::size_t>(j) * width + i];
    }
};

inline std::uint8_t probability_to_byte(double p) {
    const double clamped = std::clamp(p, 0.0, 1.0);
    return static_cast<std::uint8_t>(
        std::min(255.0, std::floor(clamped * 255.0)));
}

// Crops the window (centered, clamped toward map bounds) out of the fine map
// as 8-bit values. Cells outside the source map read as 0.
inline MapCrop8 crop_probabilities(const GridMap& map, const WorldWindow& win) {
    const double res = map.resolution();
    int cw = std::max(1, static_cast<int>(std::llround(win.size_x / res)));
    int ch = std::max(1, static_cast<int>(std::llround(win.size_y / res)));
    if (cw > kCoreMapMaxSide || ch > kCoreMapMaxSide)
        throw WindowTooLargeError("map window exceeds 320x320 cells");

    const CellIndex center = map.world_to_cell(win.center_x, win.center_y);
    int start_i = center.i - cw / 2;
    int start_j = center.j - ch / 2;
    // Shift the crop to stay inside the map where the map is large enough.
    if (map.width() >= cw)
        start_i = std::clamp(start_i, 0, map.width() - cw);
    if (map.height() >= ch)
        start_j = std::clamp(start_j, 0, map.height() - ch);

    MapCrop8 crop;
    crop.width = cw;
    crop.height = ch;
    crop.resolution = res;
    crop.origin_x = map.origin_x() + start_i * res;
    crop.origin_y = map.origin_y() + start_j * res;
    crop.bytes.resize(static_cast<std::size_t>(cw) * ch, 0);
    for (int j = 0; j < ch; ++j) {
        for (int i = 0; i < cw; ++i) {
            const int mi = start_i + i, mj = start_j + j;
            if (!map.in_bounds(mi, mj))
                continue;
            crop.bytes[static_cast<std::size_t>(j) * cw + i] =
                probability_to_byte(map.probability_at(mi, mj));
        }
    }
    return crop;
}

// Keeps the high-order 6 bits of each 8-bit cell value.
inline QuantizedMap quantize_crop(const MapCrop8& crop) {
    QuantizedMap q;
    q.width = crop.width;
    q.height = crop.height;
    q.resolution = crop.resolution;
    q.origin_x = crop.origin_x;
    q.origin_y = crop.origin_y;
    q.cells.resize(crop.bytes.size());
    for (std::size_t k = 0; k < crop.bytes.size(); ++k)
        q.cells[k] = static_cast<std::uint8_t>(crop.bytes[k] >> 2);
    return q;
}

inline QuantizedMap quantize(const GridMap& map, const WorldWindow& win) {
    return quantize_crop(crop_probabilities(map, win));
}

// Sliding-window-maximum map M'. Each cell upper-bounds the w x w fine block
// anchored at it. Storage is either row-major or the block-interleaved layout
// used by the parallel coarse matcher; at() resolves either.
struct CoarseMap {
    int width = 0;
    int height = 0;
    int block = 8;  // w
    bool rearranged = false;
    int row_blocks = 0;     // ceil(width / block); row stride when rearranged
    std::vector<std::uint8_t> cells;

    int stride() const { return rearranged ? row_blocks * block : width; }

    // Column permutation applied by the rearranged layout.
    int rearranged_column(int c) const {
        return (c % block) * row_blocks + c / block;
    }

    std::uint8_t at(int i, int j) const {
        if (i < 0 || i >= width || j < 0 || j >= height)
            return 0;
        const int col = rearranged ? rearranged_column(i) : i;
        return cells[static_cast<std::size_t>(j) * stride() + col];
    }
};

// Two-pass sliding window maximum: column-wise maxima M'' first, then
// row-wise maxima of the cache. Out-of-bounds reads count as 0, so the result
// matches the direct w x w maximum at every cell.
inline CoarseMap build_coarse(const QuantizedMap& map, int w) {
    if (w < 1)
        throw std::invalid_argument("build_coarse: w must be >= 1");
    CoarseMap coarse;
    coarse.width = map.width;
    coarse.height = map.height;
    coarse.block = w;
    coarse.row_blocks = (map.width + w - 1) / w;
    coarse.cells.assign(static_cast<std::size_t>(map.width) * map.height, 0);

    std::vector<std::uint8_t> column_max(coarse.cells.size(), 0);
    for (int j = 0; j < map.height; ++j) {
        for (int i = 0; i < map.width; ++i) {
            std::uint8_t m = 0;
            for (int dj = 0; dj < w && j + dj < map.height; ++dj)
                m = std::max(m, map.cells[static_cast<std::size_t>(j + dj) *
                                              map.width + i]);
            column_max[static_cast<std::size_t>(j) * map.width + i] = m;
        }
    }
    for (int j = 0; j < map.height; ++j) {
        for (int i = 0; i < map.width; ++i) {
            std::uint8_t m = 0;
            for (int di = 0; di < w && i + di < map.width; ++di)
                m = std::max(m, column_max[static_cast<std::size_t>(j) *
                                               map.width + i + di]);
            coarse.cells[static_cast<std::size_t>(j) * map.width + i] = m;
        }
    }
    return coarse;
}

// Permutes each row so the stride-w accesses of coarse matching become
// contiguous: original column c moves to (c mod w) * ceil(width/w) + c / w.
// Rows are padded with zeros up to a whole number of blocks.
inline CoarseMap rearrange_coarse(const CoarseMap& coarse) {
    if (coarse.rearranged)
        throw std::invalid_argument("rearrange_coarse: already rearranged");
    CoarseMap out;
    out.width = coarse.width;
    out.height = coarse.height;
    out.block = coarse.block;
    out.row_blocks = coarse.row_blocks;
    out.rearranged = true;
    const int stride = out.row_blocks * out.block;
    out.cells.assign(static_cast<std::size_t>(stride) * out.height, 0);
    for (int j = 0; j < coarse.height; ++j)
        for (int c = 0; c < coarse.width; ++c)
            out.cells[static_cast<std::size_t>(j) * stride +
                      out.rearranged_column(c)] =
                coarse.cells[static_cast<std::size_t>(j) * coarse.width + c];
    return out;
}

}  // namespace corrslam
