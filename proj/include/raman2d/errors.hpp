#pragma once

#include <stdexcept>
#include <string>

namespace raman2d {

// Frequency outside the domain of a configured curve.
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Matrix/grid dimensions do not match.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input grid too coarse for the requested emulation.
struct ResolutionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad magic, version or layout in a serialized file.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Truncated or otherwise damaged file contents.
struct CorruptionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite state in an integrator or training loop.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace raman2d
