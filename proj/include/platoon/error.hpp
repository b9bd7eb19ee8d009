#pragma once

#include <stdexcept>
#include <string>

namespace platoon {

// Every failure raised by the library derives from Error so callers (the CLI
// in particular) can map it to an exit code with a single catch.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParameterError : public Error { using Error::Error; };
class DomainError : public Error { using Error::Error; };
class ModelError : public Error { using Error::Error; };
class FactorizationError : public Error { using Error::Error; };
class ConvergenceError : public Error { using Error::Error; };
class NotStabilizingError : public Error { using Error::Error; };
class StructureError : public Error { using Error::Error; };
class SynthesisError : public Error { using Error::Error; };
class InformationViolation : public Error { using Error::Error; };
class InstabilityError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };

}  // namespace platoon
