#pragma once

#include <stdexcept>
#include <string>

namespace stonediag {

// Two exit-code families for the CLI: InputError maps to exit 2
// (bad files, bad flags, bad configuration), RunError maps to exit 3
// (model calls or their outputs went wrong at run time).
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Structured-text file could not be parsed. Message carries origin and line.
struct FileParseError : InputError {
    using InputError::InputError;
};

// An alias resolves to two different labels, or similar vocabulary clash.
struct DuplicateAliasError : InputError {
    using InputError::InputError;
};

struct ConfigError : InputError {
    using InputError::InputError;
};

// Vector dimension or normalization violation.
struct VectorError : InputError {
    using InputError::InputError;
};

// Store file failed its checksum or structural checks.
struct IntegrityError : InputError {
    using InputError::InputError;
};

// Transport-level failure after all retry attempts.
struct NetworkError : RunError {
    using RunError::RunError;
};

// Backend answered with a non-success status.
struct WireProtocolError : RunError {
    using RunError::RunError;
};

// Mock transcript has no entry for the requested key.
struct FixtureError : RunError {
    using RunError::RunError;
};

// Model reply did not contain a parseable output block.
struct MalformedOutputError : RunError {
    using RunError::RunError;
};

// A workflow phase failed; carries the responsible agent.
struct PhaseFailureError : RunError {
    PhaseFailureError(std::string agent, const std::string& what)
        : RunError(what), agent_id(std::move(agent)) {}
    std::string agent_id;
};

// Phases invoked out of order (e.g. consensus over an empty log).
struct PhaseOrderError : RunError {
    using RunError::RunError;
};

// Caller broke an API precondition; a bug, not an input problem.
struct MisuseError : std::logic_error {
    using std::logic_error::logic_error;
};

} // namespace stonediag
