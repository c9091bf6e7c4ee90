#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace htforge {

// Base of all typed domain errors. kind() is the stable machine-readable
// name a CLI or harness can match on; what() carries the human detail.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

private:
  std::string kind_;
};

#define HTFORGE_DEFINE_ERROR(NAME)                        \
  class NAME : public ::htforge::Error {                  \
  public:                                                 \
    explicit NAME(const std::string& what)                \
        : ::htforge::Error(#NAME, what) {}                \
  };

// Precondition violations that are programming errors rather than domain
// outcomes (bad arity to a library call, out-of-range pipeline id, ...).
HTFORGE_DEFINE_ERROR(InvalidArgument)

}  // namespace htforge
