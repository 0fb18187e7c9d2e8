#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "corrslam/pose2d.hpp"

namespace corrslam {

// Q16.16 signed fixed point, the format scan coordinates take inside the
// matcher.
struct FixedPoint32 {
    std::int32_t raw = 0;

    static FixedPoint32 from_real(double x) {
        return FixedPoint32{static_cast<std::int32_t>(std::llround(x * 65536.0))};
    }

    double to_real() const { return raw / 65536.0; }

    FixedPoint32 operator+(FixedPoint32 o) const { return {raw + o.raw}; }
    FixedPoint32 operator-(FixedPoint32 o) const { return {raw - o.raw}; }

    FixedPoint32 mul(FixedPoint32 o) const {
        return {static_cast<std::int32_t>(
            (static_cast<std::int64_t>(raw) * o.raw) >> 16)};
    }
};

// Sine/cosine lookup table over one turn, 2^14 entries with linear
// interpolation between neighbors. Angles are binary radians: the full
// uint32_t range maps to [0, 2*pi).
class TrigTable {
  public:
    static constexpr int kIndexBits = 14;
    static constexpr int kEntries = 1 << kIndexBits;
    static constexpr int kFracBits = 32 - kIndexBits;

    static const TrigTable& instance() {
        static const TrigTable table;
        return table;
    }

    // Q16.16 radians -> binary radians (wraps mod 2*pi).
    static std::uint32_t to_brad(FixedPoint32 radians) {
        // 683565276 = round(2^32 / (2*pi))
        constexpr std::int64_t kScale = 683565276;
        return static_cast<std::uint32_t>(
            (static_cast<std::int64_t>(radians.raw) * kScale) >> 16);
    }

    FixedPoint32 sin_brad(std::uint32_t brad) const {
        const std::uint32_t idx = brad >> kFracBits;
        const std::int64_t frac = brad & ((1u << kFracBits) - 1);
        const std::int32_t e0 = table_[idx];
        const std::int32_t e1 = table_[idx + 1];
        return FixedPoint32{static_cast<std::int32_t>(
            e0 + ((static_cast<std::int64_t>(e1 - e0) * frac) >> kFracBits))};
    }

    FixedPoint32 cos_brad(std::uint32_t brad) const {
        return sin_brad(brad + 0x40000000u);  // + pi/2
    }

    FixedPoint32 sin(FixedPoint32 radians) const {
        return sin_brad(to_brad(radians));
    }

    FixedPoint32 cos(FixedPoint32 radians) const {
        return cos_brad(to_brad(radians));
    }

  private:
    TrigTable() {
        for (int i = 0; i <= kEntries; ++i)
            table_[i] = static_cast<std::int32_t>(
                std::llround(std::sin(2.0 * kPi * i / kEntries) * 65536.0));
    }

    std::array<std::int32_t, kEntries + 1> table_;
};

}  // namespace corrslam
