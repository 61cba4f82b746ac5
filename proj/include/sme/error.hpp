#pragma once

#include <stdexcept>
#include <string>

namespace sme {

enum class ErrorKind {
  shape,
  config,
  lookup,
  argument,
  numeric,
  data,
  format,
  io,
  verification,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define SME_DEFINE_ERROR(Name, Kind)                                              \
  class Name : public Error {                                                      \
   public:                                                                         \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {}       \
  };

SME_DEFINE_ERROR(ShapeError, shape)
SME_DEFINE_ERROR(ConfigError, config)
SME_DEFINE_ERROR(LookupError, lookup)
SME_DEFINE_ERROR(ArgumentError, argument)
SME_DEFINE_ERROR(NumericError, numeric)
SME_DEFINE_ERROR(DataError, data)
SME_DEFINE_ERROR(FormatError, format)
SME_DEFINE_ERROR(IoError, io)
SME_DEFINE_ERROR(VerificationError, verification)

#undef SME_DEFINE_ERROR

}  // namespace sme
