#pragma once

#include <stdexcept>
#include <string>

namespace pcollab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// build_mapping could not find an injective assignment within the resample budget.
struct PolicyExhausted : Error {
  using Error::Error;
};

/// Transport failure after the client's retry budget was spent.
struct TransportError : Error {
  using Error::Error;
};

/// A scripted mock ran out of fixtures for a role.
struct MockExhausted : Error {
  using Error::Error;
};

/// The remote response carried no fenced code block, even after the reminder.
struct MissingCode : Error {
  using Error::Error;
};

/// Context shortening produced nothing for a non-empty query.
struct EmptyContext : Error {
  using Error::Error;
};

/// Answer text without any numeric token.
struct NotNumeric : Error {
  using Error::Error;
};

struct SolverFailure : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace pcollab
