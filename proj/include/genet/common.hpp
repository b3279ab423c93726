#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace genet {

// Error taxonomy:
//   InputError    - bad user-supplied data (files, CLI values, graph ids)
//   ShapeError    - incompatible tensor dimensions
//   ContractError - an API precondition was violated by calling code
//   NumericError  - non-finite values where finiteness is required
//   SizeError     - a combinatorial or allocation guard was exceeded
struct InputError : std::runtime_error {
  explicit InputError(const std::string& m) : std::runtime_error(m) {}
};
struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& m) : std::runtime_error(m) {}
};
struct ContractError : std::runtime_error {
  explicit ContractError(const std::string& m) : std::runtime_error(m) {}
};
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& m) : std::runtime_error(m) {}
};
struct SizeError : std::runtime_error {
  explicit SizeError(const std::string& m) : std::runtime_error(m) {}
};

namespace detail {
inline void format_into(std::ostringstream&) {}
template <class T, class... Rest>
void format_into(std::ostringstream& os, const T& v, const Rest&... rest) {
  os << v;
  format_into(os, rest...);
}
}  // namespace detail

template <class... Parts>
std::string cat(const Parts&... parts) {
  std::ostringstream os;
  detail::format_into(os, parts...);
  return os.str();
}

}  // namespace genet
