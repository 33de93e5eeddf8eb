#pragma once

#include "kamred/kam.hpp"
#include "kamred/normal_form.hpp"
#include "kamred/propagator.hpp"
#include "kamred/symbol.hpp"

#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>

namespace kamred {

inline constexpr int kConfigSchema = 1;

struct ForcingConfig {
    enum class Kind { Symbol, Random };
    Kind kind = Kind::Symbol;
    PhaseSymbol symbol;    // Symbol: W(x, xi, phi)
    int kmax = 1;          // Random: modes 0 < |k| <= kmax
    double decay = 2.0;    // Random: entries scaled by exp(-|i-j| / decay)
};

struct EvolveConfig {
    double T = 100.0;
    double dt = 0.05;
    Integrator integrator = Integrator::Magnus2;
    int psi0_index = 1; // basis vector, from 1
    int record_every = 20;
    bool step_halving = false;
};

struct NormalFormRequest {
    double target_kappa = 1.0;
    NormalFormConfig cfg;
};

struct RunConfig {
    int schema = kConfigSchema;
    int l = 1;
    int N = 64;
    int n = 2;
    double eps = 1e-3;
    std::vector<double> omega;
    std::uint64_t seed = 1;
    ForcingConfig forcing;
    KamConfig kam;
    int prediag_iters = 40;
    double prediag_tol = 1e-12;
    EvolveConfig evolve;
    std::optional<NormalFormRequest> normal_form;
    std::string output_dir = ".";

    // Range checks; throws validation errors.
    void validate() const;
    nlohmann::json to_json() const;
};

// Parses the TOML run file; unknown keys and schema mismatches are validation errors.
RunConfig parse_config(const std::string& text, const std::string& origin = "<string>");
RunConfig load_config(const std::string& path);

} // namespace kamred
