#pragma once

#include <stdexcept>
#include <string>

namespace seqlab {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape disagreement between operands.
struct DimensionError : Error {
    using Error::Error;
};

// Non-finite values or other numeric breakdown.
struct NumericError : Error {
    using Error::Error;
};

// Out-of-range label or element index.
struct IndexError : Error {
    using Error::Error;
};

// API misuse (wrong tape, non-scalar backward, bad beta, ...).
struct ContractError : Error {
    using Error::Error;
};

// Bad input data (empty corpus, span out of bounds, label not in schema, ...).
struct DataError : Error {
    using Error::Error;
};

// Malformed file contents; message carries the line number.
struct ParseError : Error {
    using Error::Error;
};

// Invalid run configuration.
struct ConfigError : Error {
    using Error::Error;
};

// Task name not present in the schema.
struct SchemaError : Error {
    using Error::Error;
};

// Prediction/gold files that do not line up; message names the sentence.
struct AlignmentError : Error {
    using Error::Error;
};

}  // namespace seqlab
