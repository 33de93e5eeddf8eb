#include "kamred/config.hpp"

#include "kamred/diophantine.hpp"
#include "kamred/error.hpp"

#include <nlohmann/json.hpp>

namespace kamred {

void RunConfig::validate() const {
    if (schema != kConfigSchema) throw validation_error("config", "unsupported schema " + std::to_string(schema));
    if (l < 1) throw validation_error("config", "l must be a positive integer");
    if (N < 4) throw validation_error("config", "N must be at least 4");
    if (n < 1) throw validation_error("config", "n must be positive");
    if (static_cast<int>(omega.size()) != n) throw validation_error("config", "omega must have n entries");
    check_frequency_box(omega);
    if (!(eps >= 0.0)) throw validation_error("config", "eps must be non-negative");
    if (!(kam.theta > 0.0 && kam.theta < 1.0)) throw validation_error("config", "theta must lie in (0, 1)");
    if (!(kam.r > 0.0)) throw validation_error("config", "r must be positive");
    if (!(kam.gamma0 > 0.0)) throw validation_error("config", "gamma0 must be positive");
    if (!(kam.tau > n - 1)) throw validation_error("config", "tau must exceed n - 1");
    if (kam.Kmax < 1) throw validation_error("config", "Kmax must be positive");
    if (kam.max_stages < 1) throw validation_error("config", "max_stages must be positive");
    if (forcing.kind == ForcingConfig::Kind::Symbol && forcing.symbol.n() != n)
        throw validation_error("config", "perturbation dimension differs from n");
    if (forcing.kind == ForcingConfig::Kind::Random && (forcing.kmax < 1 || !(forcing.decay >= 0.0)))
        throw validation_error("config", "random perturbation needs kmax >= 1 and decay >= 0");
    if (!(evolve.T > 0.0) || !(evolve.dt > 0.0)) throw validation_error("config", "evolve T and dt must be positive");
    if (evolve.psi0_index < 1 || evolve.psi0_index > N) throw validation_error("config", "psi0 index outside 1..N");
    if (evolve.record_every < 1) throw validation_error("config", "record_every must be positive");
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    j["schema"] = schema;
    j["model"] = {{"l", l}, {"N", N}, {"n", n}, {"eps", eps}, {"omega", omega}, {"seed", seed}};
    if (forcing.kind == ForcingConfig::Kind::Symbol)
        j["perturbation"] = {{"kind", "symbol"}, {"symbol", kamred::to_json(forcing.symbol)}};
    else
        j["perturbation"] = {{"kind", "random"}, {"kmax", forcing.kmax}, {"decay", forcing.decay}};
    j["kam"] = {{"r", kam.r},         {"theta", kam.theta}, {"gamma0", kam.gamma0},
                {"tau", kam.tau},     {"d2", kam.d2},       {"Kmax", kam.Kmax},
                {"max_stages", kam.max_stages}, {"tol", kam.tol}, {"floor", kam.floor}};
    j["prediag"] = {{"max_iters", prediag_iters}, {"tol", prediag_tol}};
    j["evolve"] = {{"T", evolve.T},
                   {"dt", evolve.dt},
                   {"integrator", evolve.integrator == Integrator::Magnus2 ? "magnus2" : "magnus4"},
                   {"psi0", evolve.psi0_index},
                   {"record_every", evolve.record_every},
                   {"step_halving", evolve.step_halving}};
    if (normal_form)
        j["normal_form"] = {{"target_kappa", normal_form->target_kappa},
                            {"gamma", normal_form->cfg.gamma},
                            {"tau", normal_form->cfg.tau},
                            {"Kmax", normal_form->cfg.Kmax},
                            {"max_steps", normal_form->cfg.max_steps}};
    j["output"] = {{"dir", output_dir}};
    return j;
}

} // namespace kamred
