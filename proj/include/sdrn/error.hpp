#ifndef SDRN_ERROR_HPP
#define SDRN_ERROR_HPP

#include <stdexcept>
#include <string>

namespace sdrn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Arguments outside an operation's domain (d = 0, R = 0, bad loss string...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Problems with user data: missing columns, non-numeric cells, constant columns.
class DataError : public Error {
 public:
  using Error::Error;
};

class ConstantColumnError : public DataError {
 public:
  explicit ConstantColumnError(const std::string& column)
      : DataError("covariate column '" + column + "' is constant"), column_(column) {}
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

class CapExceeded : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

}  // namespace sdrn

#endif  // SDRN_ERROR_HPP
