#pragma once

#include <stdexcept>
#include <string>

namespace roughfrac {

/// Base class for all library errors; every throw site uses a subclass below
/// so callers can discriminate without string matching.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- geometry / params ---
struct ConstraintViolation : Error { using Error::Error; };
struct InvalidLadder : Error { using Error::Error; };
struct InvalidGrid : Error { using Error::Error; };

// --- sphere kernel ---
struct ZeroVector : Error { using Error::Error; };
struct NonIntegrable : Error { using Error::Error; };
struct KernelParseError : Error { using Error::Error; };

// --- weights ---
struct NonFiniteWeight : Error { using Error::Error; };
struct DegenerateWeight : Error { using Error::Error; };
struct EmptySubset : Error { using Error::Error; };

// --- norms ---
struct GridMismatch : Error { using Error::Error; };
struct ZeroMeasureBall : Error { using Error::Error; };

// --- operators ---
struct InvalidAlpha : Error { using Error::Error; };
struct InvalidExponent : Error { using Error::Error; };
struct NoCoveringBall : Error { using Error::Error; };

// --- verification ---
struct PreconditionFailed : Error { using Error::Error; };
struct DominationViolation : Error { using Error::Error; };

// --- cli / config ---
struct ConfigError : Error { using Error::Error; };

} // namespace roughfrac
