#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cpmhs {

/// One invariant violation found by network validation. Violations are data,
/// not exceptions: a full report is returned so callers can print all of them.
struct Violation {
    std::string entity_id;
    std::string message;

    bool operator==(const Violation&) const = default;
};

/// Thrown by loaders when an otherwise well-formed input fails validation.
/// Carries the full violation report.
class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string what, std::vector<Violation> report)
        : std::runtime_error(std::move(what)), report(std::move(report)) {}

    std::vector<Violation> report;
};

/// Malformed input file (JSON or CSV). The message carries line/field context.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bound time series disagree on length, step, or unit.
class SeriesError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Unknown or malformed `--set key=value` override.
class OverrideError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// No reservoir placement satisfies the plan constraints. The message names
/// the span where progress stops.
class PlanError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A water-balance step would take a reservoir below its minimum volume.
/// This signals a controller bug: dispatch must pre-clamp outflows.
class InfeasibilityError : public std::runtime_error {
public:
    InfeasibilityError(std::string what, std::string reservoir_id, long step_index = -1)
        : std::runtime_error(std::move(what)),
          reservoir_id(std::move(reservoir_id)),
          step_index(step_index) {}

    std::string reservoir_id;
    long step_index; ///< -1 when not yet attributed to a simulation step
};

} // namespace cpmhs
