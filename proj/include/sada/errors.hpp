#pragma once

#include <stdexcept>
#include <string>

namespace sada {

// Error taxonomy shared across the library. Everything derives from
// std::runtime_error so callers can catch broadly or precisely.

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error("shape error: " + msg) {}
};

struct UnsupportedKernelError : std::runtime_error {
    explicit UnsupportedKernelError(const std::string& msg)
        : std::runtime_error("unsupported kernel: " + msg) {}
};

struct StaleHandleError : std::runtime_error {
    explicit StaleHandleError(const std::string& msg)
        : std::runtime_error("stale tape handle: " + msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error("config error: " + msg) {}
};

struct StateError : std::runtime_error {
    explicit StateError(const std::string& msg) : std::runtime_error("state error: " + msg) {}
};

struct IndexError : std::runtime_error {
    explicit IndexError(const std::string& msg) : std::runtime_error("index error: " + msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error("io error: " + msg) {}
};

struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& msg) : std::runtime_error("domain error: " + msg) {}
};

}  // namespace sada
