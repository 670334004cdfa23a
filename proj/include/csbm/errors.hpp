#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace csbm {

/// Base of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameters or arguments (CsbmParams, OperatorSpec, configs).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A graph with an isolated node was handed to a propagation operator.
class DegenerateGraphError : public Error {
public:
    explicit DegenerateGraphError(std::size_t node)
        : Error("degenerate graph: node " + std::to_string(node)
                + " has degree 0, random-walk operator undefined"),
          node_(node) {}

    std::size_t node() const noexcept { return node_; }

private:
    std::size_t node_;
};

/// Malformed input file; line is 1-based, 0 when not line-specific.
class ParseError : public Error {
public:
    ParseError(const std::string &what, std::size_t line)
        : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class BoundsError : public Error {
public:
    using Error::Error;
};

/// Exact computation refused because it would exceed a configured size cap.
class ResourceError : public Error {
public:
    using Error::Error;
};

/// A mathematical precondition of an operation does not hold for this input.
class PreconditionError : public Error {
public:
    using Error::Error;
};

} // namespace csbm
