#pragma once

#include <stdexcept>
#include <string>

namespace qc {

// Caller supplied a parameter outside its documented domain (sigma <= 0,
// k < 1, bad bounds...). The CLI maps this to exit code 1.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// The data itself is unusable: unparsable cells, ragged rows, non-finite
// values, queries the potential cannot answer. The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised by the minimizer when the objective or gradient turns non-finite at
// an accepted iterate.
class NumericalError : public DataError {
public:
    using DataError::DataError;
};

}  // namespace qc
