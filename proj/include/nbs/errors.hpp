#pragma once

#include <stdexcept>
#include <string>

namespace nbs {

/// An operation was called on input outside its contract (e.g. a period
/// query on a tree, a closed-form inverse on a graph with leaves).
class PreconditionError : public std::runtime_error {
public:
    explicit PreconditionError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A numerical routine failed to deliver its advertised accuracy
/// (non-convergence, singular solve, defective input where a clean
/// decomposition was required).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace nbs
