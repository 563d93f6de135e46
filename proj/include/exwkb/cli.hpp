#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "exwkb/potential.hpp"
#include "json.hpp"

namespace exwkb::cli {

enum ExitCode { ok = 0, input_error = 2, numerical_failure = 3 };

struct Params {
    int order = 16;        // K, also the WKB order for coeffs
    int grid = 512;        // M
    double phase = 0.0;    // alpha
    std::vector<cplx> hbar{0.1, 0.05, 0.02};
    double radius = 10.0;  // |xi| cut-off for predictions, ray length for borel-continue
    int depth = 3;
    double tau = 4.0;      // Laplace ray length
    int phases = 36;       // Stokes diagram scan
    int germ = 24;         // Pade germ length
    std::vector<cplx> path;  // resum polyline; default [x, x + 1]
    std::uint64_t seed = 0;  // recorded only: no command is stochastic
};

struct ProblemSpec {
    Potential potential;
    std::optional<cplx> x;
    int sheet = 1;
    Params params;
    bool hbar_given = false;  // jump falls back to its own hbar grid otherwise
};

/// Parses and validates a problem spec. Errors carry "name:line:col: message".
ProblemSpec parse_spec(const std::string& text, const std::string& name = "spec");

/// Resolved parameters as JSON (recorded in the manifest).
nlohmann::json to_json(const Params& p);

std::string sha256_hex(const std::string& bytes);

/// Entry point of the exwkb tool; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace exwkb::cli
