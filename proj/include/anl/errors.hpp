#pragma once

#include <stdexcept>
#include <string>

namespace anl {

// Error taxonomy used across the library. Everything derives from
// std::runtime_error so callers can catch coarsely or precisely.
struct InvalidArgument : std::runtime_error {
    explicit InvalidArgument(const std::string& what) : std::runtime_error(what) {}
};

struct OutOfBounds : std::runtime_error {
    explicit OutOfBounds(const std::string& what) : std::runtime_error(what) {}
};

struct InsufficientData : std::runtime_error {
    explicit InsufficientData(const std::string& what) : std::runtime_error(what) {}
};

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

struct CorruptCheckpoint : std::runtime_error {
    explicit CorruptCheckpoint(const std::string& what) : std::runtime_error(what) {}
};

struct AbortUpdate : std::runtime_error {
    explicit AbortUpdate(const std::string& what) : std::runtime_error(what) {}
};

struct CurriculumStalled : std::runtime_error {
    explicit CurriculumStalled(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace anl
