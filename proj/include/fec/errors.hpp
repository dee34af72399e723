#ifndef FEC_ERRORS_HPP
#define FEC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fec {

// Invalid code/interleaver/pattern parameters.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid runtime input (non-binary bits, bad value domain).
class DomainError : public std::runtime_error {
  public:
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// Length/shape mismatch between a buffer and the plan or pattern describing it.
class FramingError : public std::runtime_error {
  public:
    explicit FramingError(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor shape mismatch in the differentiable engine.
class ShapeError : public std::runtime_error {
  public:
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure (singular matrix, degenerate batch).
class NumericalError : public std::runtime_error {
  public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Unreadable/corrupt checkpoint or checkpoint incompatible with the config.
class CheckpointError : public std::runtime_error {
  public:
    explicit CheckpointError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace fec

#endif
