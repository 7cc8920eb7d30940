#pragma once

#include "hri/common.hpp"

#include <chrono>

namespace hri {

/// Clock chosen at session start: virtual for headless runs, wall for
/// interactive ones.
class TimeSource {
public:
    virtual ~TimeSource() = default;
    virtual Millis now() const = 0;
};

class VirtualClock : public TimeSource {
public:
    Millis now() const override { return now_; }
    /// Moves forward only.
    void advance_to(Millis t)
    {
        if (t < now_)
            throw OrderingError("virtual clock cannot move backwards");
        now_ = t;
    }

private:
    Millis now_ = 0;
};

class WallClock : public TimeSource {
public:
    WallClock() : start_(std::chrono::steady_clock::now()) {}
    Millis now() const override
    {
        return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

} // namespace hri
