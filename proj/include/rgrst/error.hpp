#pragma once

#include <stdexcept>
#include <string>

namespace rgrst {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed model parameters (lengths, signs, simplex violations).
class ParameterError : public Error {
public:
  using Error::Error;
};

/// Non-finite inputs, quadrature or ODE failure.
class NumericError : public Error {
public:
  using Error::Error;
};

/// Bad observations: empty samples, nonpositive values, non-finite covariates.
class DataError : public Error {
public:
  using Error::Error;
};

/// Every optimizer start failed.
class OptimizationError : public Error {
public:
  using Error::Error;
};

/// Missing CSV columns or covariate levels unknown to the schema.
class SchemaError : public Error {
public:
  using Error::Error;
};

class CalibrationError : public Error {
public:
  using Error::Error;
};

/// Conditional slice carries too little mass to normalize.
class ConditioningError : public Error {
public:
  using Error::Error;
};

/// A general-pathway density came out negative: the supplied q1 violates the
/// non-positive directional derivative requirement.
class ModelValidityError : public Error {
public:
  using Error::Error;
};

/// Chi-square partition holds none of the model mass.
class RangeError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace rgrst
