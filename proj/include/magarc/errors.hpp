#pragma once

#include <stdexcept>
#include <string>

namespace magarc {

// Base for all toolkit errors; subclasses name the failed contract.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyLog : Error {
  using Error::Error;
};
struct FrameDistortion : Error {
  using Error::Error;
};
struct DomainError : Error {
  using Error::Error;
};
struct RankDeficient : Error {
  using Error::Error;
};
struct TrackTooShort : Error {
  using Error::Error;
};
struct OutOfMapRange : Error {
  using Error::Error;
};
struct MapFormatError : Error {
  using Error::Error;
};
struct QuaternionNormError : Error {
  using Error::Error;
};
struct DegenerateTiming : Error {
  using Error::Error;
};
struct UnobservableCalibration : Error {
  using Error::Error;
};
struct TimeRegression : Error {
  using Error::Error;
};
struct GeometryError : Error {
  using Error::Error;
};
struct InvalidImuTruth : Error {
  using Error::Error;
};
struct ParseError : Error {
  using Error::Error;
};
struct InvariantFailure : Error {
  using Error::Error;
};

}  // namespace magarc
