#pragma once

#include <stdexcept>
#include <string>

namespace mrinorm {

// Error taxonomy shared by the library and the CLI exit codes:
// contract violations -> 2, numerical failures -> 3, I/O failures -> 4.
enum class ErrorKind { Contract, Numerical, Io };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

class ContractError : public Error {
public:
  explicit ContractError(const std::string& what) : Error(ErrorKind::Contract, what) {}
};

class NumericalError : public Error {
public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

class IoError : public Error {
public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

} // namespace mrinorm
