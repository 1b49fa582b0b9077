#pragma once

#include <cstdint>
#include <initializer_list>

namespace hrcn {

// SplitMix64 finalizer. Used to derive independent stream seeds from a master
// seed and a tuple of indices (trial, radar, target, interval, ...).
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t h = mix64(master);
    for (std::uint64_t p : path) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
    return h;
}

/// Stream tags keep seeds for different purposes disjoint.
enum class Stream : std::uint64_t {
    kMeasurementNoise = 1,
    kProcessNoise = 2,
    kRandomAllocation = 3,
};

}  // namespace hrcn
