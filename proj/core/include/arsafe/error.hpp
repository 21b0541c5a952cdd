#pragma once

#include <stdexcept>
#include <string>

namespace arsafe {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Composition or application of transforms whose frame labels do not chain.
class FrameMismatch : public Error {
public:
    using Error::Error;
};

/// A frame graph lookup found no stored (or inverse) edge.
class MissingTransform : public Error {
public:
    using Error::Error;
};

/// Input violates a documented precondition (sizes, ranges, counts).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Geometric configuration is rank deficient (collinear, coplanar where not allowed, ...).
class DegenerateInput : public Error {
public:
    using Error::Error;
};

/// Robust estimator found no hypothesis with enough support.
class NoConsensus : public Error {
public:
    using Error::Error;
};

/// Iterative solver diverged or failed to make progress.
class SolverFailure : public Error {
public:
    using Error::Error;
};

/// Malformed or unreadable file; message names the file and, when known, the byte offset.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace arsafe
