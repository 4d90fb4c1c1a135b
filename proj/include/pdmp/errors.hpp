#pragma once

#include <stdexcept>
#include <string>

namespace pdmp {

// config / input validation problems (CLI exit code 2)
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// numerical invariant breaches: residuals, irreducibility, conditioning,
// majorant violations (CLI exit code 3)
struct InvariantError : std::runtime_error {
    explicit InvariantError(const std::string& msg) : std::runtime_error(msg) {}
};

// trajectory H-norm exceeded 10x the configured a-priori bound (CLI exit code 4)
struct BlowUpError : std::runtime_error {
    explicit BlowUpError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace pdmp
