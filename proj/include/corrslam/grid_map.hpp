#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "corrslam/pose2d.hpp"
#include "corrslam/scan.hpp"

namespace corrslam {

// Binary Bayes filter increments applied per traced ray.
struct LogOddsModel {
    double hit = 0.85;
    double miss = -0.4;
    double clamp_min = -10.0;
    double clamp_max = 10.0;
};

// Fine occupancy grid. Cells store log-odds; unknown cells sit at 0
// (probability 0.5). The map grows automatically when an update reaches
// beyond the current bounds; the world origin of cell (0, 0) shifts by whole
// cells so existing content stays aligned.
class GridMap {
  public:
    GridMap() = default;

    GridMap(int width, int height, double resolution,
            double origin_x, double origin_y)
        : width_(width), height_(height), resolution_(resolution),
          origin_x_(origin_x), origin_y_(origin_y),
          cells_(static_cast<std::size_t>(width) * height, 0.0f) {
        if (width < 0 || height < 0 || resolution <= 0.0)
            throw std::invalid_argument("GridMap: bad geometry");
    }

    // Map sized in meters, centered on a world point.
    static GridMap centered(double size_x_m, double size_y_m,
                            double resolution,
                            double center_x = 0.0, double center_y = 0.0) {
        const int w = std::max(1, static_cast<int>(std::ceil(size_x_m / resolution)));
        const int h = std::max(1, static_cast<int>(std::ceil(size_y_m / resolution)));
        return GridMap(w, h, resolution,
                       center_x - 0.5 * w * resolution,
                       center_y - 0.5 * h * resolution);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    double resolution() const { return resolution_; }
    double origin_x() const { return origin_x_; }
    double origin_y() const { return origin_y_; }

    bool in_bounds(int i, int j) const {
        return i >= 0 && i < width_ && j >= 0 && j < height_;
    }

    double log_odds_at(int i, int j) const {
        return cells_[index(i, j)];
    }

    void set_log_odds(int i, int j, double value) {
        cells_[index(i, j)] = static_cast<float>(value);
    }

    // Occupancy probability in [0, 1]; out-of-bounds cells read as unknown.
    double probability_at(int i, int j) const {
        if (!in_bounds(i, j))
            return 0.5;
        const double l = cells_[index(i, j)];
        return 1.0 / (1.0 + std::exp(-l));
    }

    CellIndex world_to_cell(double wx, double wy) const {
        return CellIndex{
            static_cast<int>(std::floor((wx - origin_x_) / resolution_)),
            static_cast<int>(std::floor((wy - origin_y_) / resolution_))};
    }

    // World coordinates of the center of cell (i, j).
    std::pair<double, double> cell_center(int i, int j) const {
        return {origin_x_ + (i + 0.5) * resolution_,
                origin_y_ + (j + 0.5) * resolution_};
    }

    // Grows the map so that cell (i, j) (given in current indices) becomes
    // valid, with a margin of spare cells on the crossed sides.
    void grow_to_include(int i, int j, int margin = 64) {
        if (in_bounds(i, j))
            return;
        int shift_x = 0, shift_y = 0;
        int new_w = std::max(width_, 1), new_h = std::max(height_, 1);
        if (i < 0) {
            shift_x = -i + margin;
            new_w += shift_x;
        } else if (i >= new_w) {
            new_w = i + 1 + margin;
        }
        if (j < 0) {
            shift_y = -j + margin;
            new_h += shift_y;
        } else if (j >= new_h) {
            new_h = j + 1 + margin;
        }
        std::vector<float> grown(static_cast<std::size_t>(new_w) * new_h, 0.0f);
        for (int y = 0; y < height_; ++y)
            for (int x = 0; x < width_; ++x)
                grown[static_cast<std::size_t>(y + shift_y) * new_w + (x + shift_x)] =
                    cells_[index(x, y)];
        cells_ = std::move(grown);
        width_ = new_w;
        height_ = new_h;
        origin_x_ -= shift_x * resolution_;
        origin_y_ -= shift_y * resolution_;
    }

    // Integrates one posed scan: endpoint cells take the hit increment,
    // cells on the sensor-to-endpoint ray (endpoint exclusive) take the miss
    // increment. Grows the map first so every touched cell is in bounds.
    void integrate_scan(const Scan& scan, const Pose2D& pose,
                        const LogOddsModel& model = {}) {
        if (scan.empty())
            return;
        const CellIndex sensor = world_to_cell(pose.x, pose.y);
        grow_to_include(sensor.i, sensor.j);
        for (const ScanPoint& z : scan.points) {
            const CellIndex e =
                project_point(pose, z, resolution_, origin_x_, origin_y_);
            grow_to_include(e.i, e.j);
        }
        // Growth shifts indices, so trace with the settled geometry.
        const CellIndex s = world_to_cell(pose.x, pose.y);
        for (std::size_t k = 0; k < scan.size(); ++k) {
            const CellIndex e = project_point(pose, scan.points[k],
                                              resolution_, origin_x_, origin_y_);
            trace_miss(s, e, model);
            add_log_odds(e.i, e.j, model.hit, model);
        }
    }

    // Binary PGM (P5), gray = 255 * (1 - p).
    void save_pgm(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw std::runtime_error("cannot open " + path);
        out << "P5\n" << width_ << " " << height_ << "\n255\n";
        std::vector<std::uint8_t> row(static_cast<std::size_t>(width_));
        for (int j = 0; j < height_; ++j) {
            for (int i = 0; i < width_; ++i)
                row[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(
                    std::floor(255.0 * (1.0 - probability_at(i, j))));
            out.write(reinterpret_cast<const char*>(row.data()), width_);
        }
    }

  private:
    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(j) * width_ + i;
    }

    void add_log_odds(int i, int j, double delta, const LogOddsModel& model) {
        float& c = cells_[index(i, j)];
        c = static_cast<float>(std::clamp(static_cast<double>(c) + delta,
                                          model.clamp_min, model.clamp_max));
    }

    // Bresenham traversal from a to b, applying the miss increment to every
    // cell except b.
    void trace_miss(CellIndex a, CellIndex b, const LogOddsModel& model) {
        int x = a.i, y = a.j;
        const int dx = std::abs(b.i - a.i), dy = std::abs(b.j - a.j);
        const int sx = (a.i < b.i) ? 1 : -1;
        const int sy = (a.j < b.j) ? 1 : -1;
        int err = dx - dy;
        while (x != b.i || y != b.j) {
            add_log_odds(x, y, model.miss, model);
            const int e2 = 2 * err;
            if (e2 > -dy) {
                err -= dy;
                x += sx;
            }
            if (e2 < dx) {
                err += dx;
                y += sy;
            }
        }
    }

    int width_ = 0;
    int height_ = 0;
    double resolution_ = 0.05;
    double origin_x_ = 0.0;
    double origin_y_ = 0.0;
    std::vector<float> cells_;
};

}  // namespace corrslam
