#pragma once

#include <stdexcept>
#include <string>

namespace surplex {

/// Base class for all errors raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonPositiveProbability : Error {
  using Error::Error;
};
struct ProbabilitySumMismatch : Error {
  using Error::Error;
};
struct NonFiniteValue : Error {
  using Error::Error;
};
struct SpaceMismatch : Error {
  using Error::Error;
};
struct AlphaOutOfRange : Error {
  using Error::Error;
};
struct SamplerExhausted : Error {
  using Error::Error;
};
struct DecompositionMismatch : Error {
  using Error::Error;
};
struct PCFull : Error {
  using Error::Error;
};
struct NotCoherent : Error {
  using Error::Error;
};
struct ScenarioExtractionMismatch : Error {
  using Error::Error;
};
struct NegativeDualDirection : Error {
  using Error::Error;
};
struct EmptyFamily : Error {
  using Error::Error;
};
struct NotDecayingEnvelope : Error {
  using Error::Error;
};
struct UnsupportedFamily : Error {
  using Error::Error;
};
struct ParseError : Error {
  using Error::Error;
};
struct SpecError : Error {
  using Error::Error;
};

}  // namespace surplex
