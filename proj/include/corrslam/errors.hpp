#pragma once

#include <stdexcept>
#include <string>

namespace corrslam {

struct EmptyScanError : std::runtime_error {
    EmptyScanError() : std::runtime_error("scan has no points") {}
};

struct WindowTooLargeError : std::runtime_error {
    explicit WindowTooLargeError(const std::string& what)
        : std::runtime_error(what) {}
};

struct ReuseWithoutLoadError : std::runtime_error {
    explicit ReuseWithoutLoadError(const std::string& what)
        : std::runtime_error(what) {}
};

struct MalformedPacketError : std::runtime_error {
    explicit MalformedPacketError(const std::string& what)
        : std::runtime_error(what) {}
};

struct NotConnectedError : std::runtime_error {
    explicit NotConnectedError(const std::string& what)
        : std::runtime_error(what) {}
};

struct RankDeficientError : std::runtime_error {
    explicit RankDeficientError(const std::string& what)
        : std::runtime_error(what) {}
};

struct NoResolvableRelationsError : std::runtime_error {
    explicit NoResolvableRelationsError(const std::string& what)
        : std::runtime_error(what) {}
};

}  // namespace corrslam
