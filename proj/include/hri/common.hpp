#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hri {

/// Virtual or wall time in milliseconds since session start.
using Millis = std::int64_t;

/// Half-open time interval [start, end).
struct TimeSpan {
    Millis start = 0;
    Millis end = 0;
};

/// Base class for all errors raised by the framework.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class LoadError : public Error {
public:
    using Error::Error;
};

class OrderingError : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// splitmix64 step; used for all seeded randomness so streams are identical
/// across standard library implementations.
inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Uniform double in [0, 1) from a 64-bit hash.
inline double unit_from_bits(std::uint64_t bits)
{
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline std::uint64_t hash_string(const std::string& s)
{
    // FNV-1a
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Small deterministic generator (splitmix64 sequence).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next()
    {
        state_ += 0x9E3779B97F4A7C15ULL;
        return splitmix64(state_);
    }
    double uniform() { return unit_from_bits(next()); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }

private:
    std::uint64_t state_;
};

} // namespace hri
