#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ionet {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OverflowError : Error {
    using Error::Error;
};

// Raised when two markings (or a marking and a net) disagree on size.
struct SizeMismatch : Error {
    using Error::Error;
};

// Signals a broken internal invariant: a bug, never a property of the input.
struct InternalInvariantBroken : Error {
    using Error::Error;
};

// Input exceeds what an exhaustive procedure is willing to enumerate.
struct TooLarge : Error {
    using Error::Error;
};

inline std::int64_t checked_add(std::int64_t a, std::int64_t b) {
    std::int64_t out = 0;
    if (__builtin_add_overflow(a, b, &out))
        throw OverflowError("integer overflow in " + std::to_string(a) + " + " + std::to_string(b));
    return out;
}

inline std::int64_t checked_sub(std::int64_t a, std::int64_t b) {
    std::int64_t out = 0;
    if (__builtin_sub_overflow(a, b, &out))
        throw OverflowError("integer overflow in " + std::to_string(a) + " - " + std::to_string(b));
    return out;
}

inline std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
    std::int64_t out = 0;
    if (__builtin_mul_overflow(a, b, &out))
        throw OverflowError("integer overflow in " + std::to_string(a) + " * " + std::to_string(b));
    return out;
}

} // namespace ionet
