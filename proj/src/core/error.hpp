#pragma once

#include <stdexcept>
#include <string>

namespace fanet {

enum class ErrorKind { InvalidArgument, Io, Format, Runtime };

// Single exception type for the core library; the C API maps `kind` onto
// status codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

inline void require(bool condition, const std::string& what) {
    if (!condition) {
        throw Error(ErrorKind::InvalidArgument, what);
    }
}

}  // namespace fanet
