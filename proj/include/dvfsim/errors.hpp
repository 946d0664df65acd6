#pragma once

#include <stdexcept>
#include <string>

namespace dvfsim {

// Base class for everything thrown by the simulator on invalid inputs.
// Internal logic errors use assertions instead.
class SimError : public std::runtime_error {
  public:
    explicit SimError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or inconsistent configuration (profiles, scenarios, overheads).
class ConfigError : public SimError {
  public:
    explicit ConfigError(const std::string& what) : SimError(what) {}
};

// A frequency level was requested that the active profile does not define.
class UnknownLevelError : public ConfigError {
  public:
    explicit UnknownLevelError(const std::string& what) : ConfigError(what) {}
};

// Component state spans handed to the energy integrator must tile the run
// without gaps or double-booking a component.
class OverlapError : public SimError {
  public:
    explicit OverlapError(const std::string& what) : SimError(what) {}
};

// Numeric argument outside its documented domain (orders, indices).
class OutOfRangeError : public ConfigError {
  public:
    explicit OutOfRangeError(const std::string& what) : ConfigError(what) {}
};

// A task id was scheduled that the policy has no target for.
class UnknownTaskError : public SimError {
  public:
    explicit UnknownTaskError(const std::string& what) : SimError(what) {}
};

// A payload cannot be carried even after fragmentation.
class FrameTooLargeError : public SimError {
  public:
    explicit FrameTooLargeError(const std::string& what) : SimError(what) {}
};

// Request method outside the supported set.
class UnsupportedMethodError : public SimError {
  public:
    explicit UnsupportedMethodError(const std::string& what) : SimError(what) {}
};

// Offered traffic exceeds what the schedule can carry.
class CapacityError : public SimError {
  public:
    explicit CapacityError(const std::string& what) : SimError(what) {}
};

// Optimizer inputs whose dimensions disagree.
class ShapeMismatchError : public SimError {
  public:
    explicit ShapeMismatchError(const std::string& what) : SimError(what) {}
};

// File or stream level failure while reading or writing artifacts.
class IoError : public SimError {
  public:
    explicit IoError(const std::string& what) : SimError(what) {}
};

}  // namespace dvfsim
