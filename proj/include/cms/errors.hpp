// Error types shared across the library.
#pragma once

#include <stdexcept>
#include <string>

namespace cms {

// Malformed system definition: bad file syntax, missing fields, inconsistent
// shapes.  The message names the offending field and, for files, the line.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A requested enumeration or allocation would exceed a hard safety cap.
struct CapacityError : std::runtime_error {
    explicit CapacityError(const std::string& msg) : std::runtime_error(msg) {}
};

// A trajectory point left the union of the vertex regions.  Under a valid
// system this cannot happen (each map sends its source region into its
// target region), so escapes indicate an invalid definition.
struct EscapeError : std::runtime_error {
    explicit EscapeError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace cms
