#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cam {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input: bad CSV cells, missing responses, non-finite values.
class DataError : public Error {
public:
    using Error::Error;
};

// A row does not observe a coordinate that a pattern requires.
class PatternError : public Error {
public:
    using Error::Error;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

// Total kernel mass at a query point underflowed.
class NoLocalData : public Error {
public:
    using Error::Error;
};

using Warnings = std::vector<std::string>;

}  // namespace cam
