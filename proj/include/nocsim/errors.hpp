#pragma once

#include <stdexcept>
#include <string>

namespace nocsim {

// One exception type per failure kind so callers and the CLI can map
// failures to exit codes without string matching.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonPowerOfTwo : Error { using Error::Error; };
struct TargetUnreachable : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };
struct OddLength : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct NonFiniteActivation : Error { using Error::Error; };
struct DegenerateFeature : Error { using Error::Error; };
struct RankDeficient : Error { using Error::Error; };
struct TooManyUsers : Error { using Error::Error; };
struct DivergenceDetected : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

}  // namespace nocsim
