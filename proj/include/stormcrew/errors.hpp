#pragma once

#include <stdexcept>
#include <string>

namespace stormcrew {

// Base class for everything this library throws on bad input or bad state.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Grid document validation.
struct DocumentError : Error {
  using Error::Error;
};
struct CycleInCircuit : DocumentError {
  using DocumentError::DocumentError;
};
struct MultipleRoots : DocumentError {
  using DocumentError::DocumentError;
};
struct UnmappedGridNode : DocumentError {
  using DocumentError::DocumentError;
};
struct DisconnectedRoad : DocumentError {
  using DocumentError::DocumentError;
};

// Runtime lookups.
struct UnknownLine : Error {
  using Error::Error;
};
struct Unreachable : Error {
  using Error::Error;
};

// Belief engine.
struct TooManyCandidates : Error {
  using Error::Error;
};
struct ZeroEvidence : Error {
  using Error::Error;
};

// Tour solvers.
struct TooManyFaults : Error {
  using Error::Error;
};
struct NotAPermutation : Error {
  using Error::Error;
};

// Search.
struct NoCandidateActions : Error {
  using Error::Error;
};
struct UnreachableDestination : Error {
  using Error::Error;
};

}  // namespace stormcrew
