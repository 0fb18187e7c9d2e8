#pragma once

#include <cmath>

namespace corrslam {

inline constexpr double kPi = 3.14159265358979323846;

// Wraps an angle to (-pi, pi].
inline double normalize_angle(double theta) {
    double a = std::remainder(theta, 2.0 * kPi);
    if (a <= -kPi)
        a = kPi;
    return a;
}

// Planar rigid-body pose (x, y, theta). Every operation below returns the
// heading normalized to (-pi, pi].
struct Pose2D {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;

    bool operator==(const Pose2D&) const = default;
};

// a (+) b: pose b expressed in a's frame, mapped into a's parent frame.
inline Pose2D compose(const Pose2D& a, const Pose2D& b) {
    const double c = std::cos(a.theta);
    const double s = std::sin(a.theta);
    return Pose2D{a.x + c * b.x - s * b.y,
                  a.y + s * b.x + c * b.y,
                  normalize_angle(a.theta + b.theta)};
}

// xi_j (-) xi_i: pose of j seen from i's frame.
inline Pose2D relative(const Pose2D& j, const Pose2D& i) {
    const double c = std::cos(i.theta);
    const double s = std::sin(i.theta);
    const double dx = j.x - i.x;
    const double dy = j.y - i.y;
    return Pose2D{c * dx + s * dy,
                  -s * dx + c * dy,
                  normalize_angle(j.theta - i.theta)};
}

inline Pose2D inverse(const Pose2D& p) {
    return relative(Pose2D{}, p);
}

}  // namespace corrslam
