#pragma once

#include <stdexcept>
#include <string>

namespace fnreg {

// Exit-code families used by the command line front end.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class GridMismatch : public DataError {
public:
    GridMismatch(long lhs, long rhs)
        : DataError("grid mismatch: " + std::to_string(lhs) + " vs " + std::to_string(rhs) + " points") {}
};

/// Nadaraya-Watson ball with zero kernel mass.
class EmptyNeighborhood : public NumericError {
public:
    explicit EmptyNeighborhood(const std::string& detail)
        : NumericError("empty neighborhood: " + detail) {}
};

} // namespace fnreg
