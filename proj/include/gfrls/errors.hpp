#pragma once

#include <stdexcept>
#include <string>

namespace gfrls {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class NotPositiveDefinite : public Error {
 public:
  explicit NotPositiveDefinite(const std::string& what) : Error(what) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& what) : Error(what) {}
};

class InvalidParameter : public Error {
 public:
  explicit InvalidParameter(const std::string& what) : Error(what) {}
};

// Raised by the estimator step when the information matrix minus the
// forgetting matrix is not positive definite (the cost has no unique
// minimizer at this step).
class IllPosedForgetting : public Error {
 public:
  explicit IllPosedForgetting(const std::string& what) : Error(what) {}
};

// A strategy was asked to run outside the measurement/parameter
// dimensions it was published for.
class UnsupportedDimension : public Error {
 public:
  explicit UnsupportedDimension(const std::string& what) : Error(what) {}
};

class EmptySequence : public Error {
 public:
  explicit EmptySequence(const std::string& what) : Error(what) {}
};

class EmptyTrajectory : public Error {
 public:
  explicit EmptyTrajectory(const std::string& what) : Error(what) {}
};

// A bound or check needs a condition constant that the profile could not
// certify.
class MissingCondition : public Error {
 public:
  explicit MissingCondition(const std::string& what) : Error(what) {}
};

class InsufficientData : public Error {
 public:
  explicit InsufficientData(const std::string& what) : Error(what) {}
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what) : Error(what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what) {}
};

}  // namespace gfrls
