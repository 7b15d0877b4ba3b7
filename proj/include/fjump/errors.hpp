#pragma once

#include <stdexcept>
#include <string>

namespace fjump {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// (a_u, q_u) outside the first Mathieu stability region.
struct UnstableMathieu : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct QuadratureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Particle left the dark trap's capture range; the shot is excluded, not fatal.
struct RecaptureFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoTone : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct WindowTooShort : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace fjump
