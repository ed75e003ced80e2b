#pragma once

#include <stdexcept>
#include <string>

namespace mbnas {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidConfig : public Error {
public:
  using Error::Error;
};

// Genome grids do not match the configured layer/row/width dimensions.
class StructureMismatch : public Error {
public:
  using Error::Error;
};

// A one-hot group with zero or several hot bits, or a bad vector length.
class MalformedEncoding : public Error {
public:
  using Error::Error;
};

class NoLegalNeighbor : public Error {
public:
  using Error::Error;
};

class OddSpatialDim : public Error {
public:
  using Error::Error;
};

class InfeasibleSpace : public Error {
public:
  using Error::Error;
};

class EmptyFront : public Error {
public:
  using Error::Error;
};

class LengthMismatch : public Error {
public:
  using Error::Error;
};

class ZeroVariance : public Error {
public:
  using Error::Error;
};

// Evaluation failures. Every external request resolves to a result or to
// exactly one of these.
class EvaluatorError : public Error {
public:
  using Error::Error;
};

class Timeout : public EvaluatorError {
public:
  using EvaluatorError::EvaluatorError;
};

class ProtocolError : public EvaluatorError {
public:
  using EvaluatorError::EvaluatorError;
};

class EvaluatorCrash : public EvaluatorError {
public:
  using EvaluatorError::EvaluatorError;
};

}  // namespace mbnas
