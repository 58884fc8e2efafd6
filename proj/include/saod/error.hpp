#pragma once

#include <cstddef>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace saod {

// Precondition or argument-range violation.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A reference to an id that does not exist.
class IntegrityError : public DomainError {
 public:
  IntegrityError(const std::string& what, std::int64_t id)
      : DomainError(what), id_(id) {}
  std::int64_t id() const noexcept { return id_; }

 private:
  std::int64_t id_;
};

// Structurally parseable input whose values break a type invariant.
class ValidationError : public DomainError {
 public:
  ValidationError(const std::string& what, std::vector<std::int64_t> ids)
      : DomainError(what), ids_(std::move(ids)) {}
  const std::vector<std::int64_t>& ids() const noexcept { return ids_; }

 private:
  std::vector<std::int64_t> ids_;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : std::runtime_error(what), byte_offset_(byte_offset) {}
  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <typename Range>
std::string join_ids(const Range& ids) {
  std::ostringstream os;
  bool first = true;
  for (const auto& id : ids) {
    if (!first) os << ", ";
    os << id;
    first = false;
  }
  return os.str();
}

}  // namespace detail
}  // namespace saod
