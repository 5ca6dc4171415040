#pragma once

#include <stdexcept>
#include <string>

namespace tda {

// Violated precondition (shape mismatch, bad argument, overlong prompt).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Input data could not be read or is malformed.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LoadError : public DataError {
 public:
  using DataError::DataError;
};

class CacheOverflowError : public ContractError {
 public:
  using ContractError::ContractError;
};

// CETT is undefined when the FFN output is exactly zero.
class UndefinedCettError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class DegenerateCalibrationError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace tda
