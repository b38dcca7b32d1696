#pragma once

#include <stdexcept>
#include <string>

namespace twinhet {

// Bad inputs: out-of-range parameters, index errors, wrong shapes.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// A requested dimension would exceed the configured memory cap.
class CapacityError : public ValidationError {
public:
    explicit CapacityError(const std::string& what) : ValidationError(what) {}
};

// Tolerance checks that failed after a computation ran.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace twinhet
