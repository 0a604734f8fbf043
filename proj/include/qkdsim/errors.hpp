#ifndef QKDSIM_ERRORS_HPP
#define QKDSIM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace qkdsim {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input / configuration problems (CLI exit code 2)
struct ConfigError : Error { using Error::Error; };
struct ParseError : ConfigError { using ConfigError::ConfigError; };
struct SchemaError : ConfigError { using ConfigError::ConfigError; };
struct InvariantError : ConfigError { using ConfigError::ConfigError; };
struct FormatError : ConfigError { using ConfigError::ConfigError; };
struct ChecksumError : ConfigError { using ConfigError::ConfigError; };
struct RangeError : ConfigError { using ConfigError::ConfigError; };

// Numerical / model problems (CLI exit code 3)
struct NumericalError : Error { using Error::Error; };
struct DomainError : NumericalError { using NumericalError::NumericalError; };
struct ConvergenceError : NumericalError { using NumericalError::NumericalError; };
struct PropagationWindowError : NumericalError { using NumericalError::NumericalError; };
struct EmptySearchError : NumericalError { using NumericalError::NumericalError; };
struct EmptyWindowError : NumericalError { using NumericalError::NumericalError; };
struct BelowHorizonError : NumericalError { using NumericalError::NumericalError; };
struct ScheduleGapError : NumericalError { using NumericalError::NumericalError; };
struct DegenerateChannelError : NumericalError { using NumericalError::NumericalError; };

} // namespace qkdsim

#endif
