#pragma once

#include <stdexcept>
#include <string>

namespace primestat {

/// Bad user-supplied parameters: invalid windows, specs, tuples, CSV rows.
class InputError : public std::invalid_argument {
public:
    explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// Invalid configuration (limits out of range, unknown config keys).
class ConfigError : public InputError {
public:
    explicit ConfigError(const std::string& what) : InputError(what) {}
};

/// A computation could not produce a meaningful number.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// A statistic is undefined for the data (e.g. w when the mean count is zero).
class UndefinedStatistic : public NumericalError {
public:
    explicit UndefinedStatistic(const std::string& what) : NumericalError(what) {}
};

/// An iterative fit did not converge.
class FitFailure : public NumericalError {
public:
    explicit FitFailure(const std::string& what) : NumericalError(what) {}
};

}  // namespace primestat
