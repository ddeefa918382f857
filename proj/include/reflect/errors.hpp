#pragma once

#include <stdexcept>
#include <string>

namespace reflect {

// Every failure mode the library reports is a distinct type so callers can
// map them onto process exit codes without string matching.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// State algebra.
struct DegenerateShock : Error { using Error::Error; };
struct VacuumState : Error { using Error::Error; };
struct RootNotBracketed : Error { using Error::Error; };
struct NewtonDiverged : Error { using Error::Error; };
struct InvariantViolated : Error { using Error::Error; };

// Geometry.
struct OriginSingularity : Error { using Error::Error; };
struct ArcsineDomain : Error { using Error::Error; };
struct MeshFold : Error { using Error::Error; };
struct NonMonotone : Error { using Error::Error; };

// Discrete operators and solves.
struct ObliquenessLost : Error { using Error::Error; };
struct IllPosedRow : Error { using Error::Error; };
struct LinearSolveStalled : Error { using Error::Error; };
struct PicardDiverged : Error { using Error::Error; };
struct BarrierViolated : Error { using Error::Error; };
struct MaxOuterExceeded : Error { using Error::Error; };

// Configuration and file formats; maps to the usage exit code, everything
// above maps to the solver-failure code.
struct ParseError : Error { using Error::Error; };

}  // namespace reflect
