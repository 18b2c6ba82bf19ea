#pragma once

#include <stdexcept>
#include <string>

namespace clusteradj {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid specification, design parameter or configuration key.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed input data (CSV rows, non-binary treatment, missing columns).
class DataError : public Error {
public:
    using Error::Error;
};

/// A sample with an empty treatment arm.
class DegenerateSampleError : public Error {
public:
    using Error::Error;
};

/// Fixed-effects design with no within-cluster treatment variation.
class SingularDesignError : public Error {
public:
    using Error::Error;
};

/// Within-cluster correlation requested for a vector with zero variance.
class UndefinedDiagnosticError : public Error {
public:
    using Error::Error;
};

/// Enumeration request whose support exceeds the oracle's budget.
class OracleSizeError : public Error {
public:
    using Error::Error;
};

}  // namespace clusteradj
