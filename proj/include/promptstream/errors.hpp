#pragma once

#include <stdexcept>
#include <string>

namespace promptstream {

// Shape or rank violations in tensor ops. Message names the op and the
// offending shapes.
struct DimensionError : std::invalid_argument {
    explicit DimensionError(const std::string& msg) : std::invalid_argument(msg) {}
};

// API misuse: violated preconditions, broken freeze/routing contracts.
struct ContractError : std::logic_error {
    explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

// Bad configuration values or unknown config keys.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// File read/write/parse failures; message carries the path.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Inputs outside the mathematical domain of an operation
// (all-missing patterns, zero vectors fed to cosine similarity, ...).
struct DomainError : std::domain_error {
    explicit DomainError(const std::string& msg) : std::domain_error(msg) {}
};

// Process exit codes used by the CLI.
enum ExitCode {
    kExitOk = 0,
    kExitInternal = 1,
    kExitUsage = 2,
    kExitConfig = 3,
    kExitIo = 4,
    kExitContract = 5,
};

}  // namespace promptstream
