#pragma once

#include <stdexcept>
#include <string>

namespace changeover {

class ChangeoverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Vector or matrix shapes disagree.
class DimensionError : public ChangeoverError {
public:
    using ChangeoverError::ChangeoverError;
};

/// A domain object was constructed with values that break its invariants.
class InvalidArgument : public ChangeoverError {
public:
    using ChangeoverError::ChangeoverError;
};

/// Executing a trade row would produce negative holdings or negative cash.
class InfeasibleTradeError : public ChangeoverError {
public:
    using ChangeoverError::ChangeoverError;
};

/// Malformed or insufficient input data (CSV, scenario files, history windows).
class DataError : public ChangeoverError {
public:
    using ChangeoverError::ChangeoverError;
};

/// A policy model has no feasible plan reaching the target portfolio.
class InfeasibleTargetError : public ChangeoverError {
public:
    using ChangeoverError::ChangeoverError;
};

/// A solver assignment does not decode into a valid trade plan.
class DecodeError : public ChangeoverError {
public:
    using ChangeoverError::ChangeoverError;
};

/// Joint pattern enumeration would exceed the configured cap.
class PatternCapError : public ChangeoverError {
public:
    using ChangeoverError::ChangeoverError;
};

/// The MILP backend failed or returned an unusable result.
class SolverError : public ChangeoverError {
public:
    using ChangeoverError::ChangeoverError;
};

}  // namespace changeover
