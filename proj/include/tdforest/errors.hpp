#pragma once

#include <stdexcept>
#include <string>

namespace tdforest {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input (bad JSON, schema violations, dangling edge endpoints, ...).
// `where` carries a human-readable location: byte offset, vertex id, field name.
struct ParseError : Error {
    ParseError(const std::string& what, const std::string& where)
        : Error(where.empty() ? what : what + " (" + where + ")"), location(where) {}
    std::string location;
};

// Graph admits no tree decomposition at the requested width.  Batch commands
// treat this as a skip, not a failure.
struct WidthExceededError : Error {
    explicit WidthExceededError(int width)
        : Error("width exceeded: no tree decomposition of width <= " + std::to_string(width)),
          width(width) {}
    int width;
};

// Derivation-forest machinery is limited to 64 vertices (bitmask sets).
struct GraphTooLargeError : Error {
    explicit GraphTooLargeError(int n)
        : Error("graph too large for decomposition: " + std::to_string(n) + " vertices (max 64)") {}
};

// An exhaustive enumeration (oracle or verify) outgrew its budget.
struct BudgetExceededError : Error {
    explicit BudgetExceededError(const std::string& what) : Error("budget exceeded: " + what) {}
};

}  // namespace tdforest
