#pragma once

#include "kamred/homological.hpp"

#include <nlohmann/json_fwd.hpp>
#include <string>

namespace kamred {

struct NormalFormConfig {
    double gamma = 0.05;
    double tau = 1.2;
    int Kmax = 8;
    int max_steps = 6;
    int series_terms = 40;        // cap on the Lie series length
    double chi_guard = 0.1;       // sup coefficient of each generator
    std::vector<double> energies; // profile grid; empty means 1..32
};

struct NormalFormStep {
    int step = 0;
    double generator_order = 0.0;
    double residual_order = 0.0;
    double sup_coeff = 0.0;         // sup coefficient of the remainder after the step
    double truncation_error = 0.0;  // last Lie series term kept
    double generator_sup = 0.0;
    double solver_residual = 0.0;
};

struct NormalForm {
    int l = 1;
    EnergyProfile z;      // first-order average
    EnergyProfile ztilde; // accumulated normal form
    std::vector<cplx> ztilde_h0; // l = 1: coefficients of h0^m in ztilde
    PhaseSymbol residual;        // l = 1 remainder symbol
    std::vector<PhaseSymbol> chain;   // l = 1 generators
    std::vector<GridSymbol> flow_chain; // l > 1 flow generators on the orbit lattice
    std::vector<EnergyProfile> torus_chain;
    std::vector<NormalFormStep> ledger;
    double achieved_order = 0.0;
    bool reached_target = false;

    std::string ledger_csv() const;
    nlohmann::json to_json() const;
};

// sum_{m>=1} L^m F / (m + shift)! with L F = moyal_bracket(F, chi), truncated once a term drops below 1e-17 of the
// first; returns the sum and the sup coefficient of the last term kept.
std::pair<PhaseSymbol, double> lie_series(const PhaseSymbol& F, const PhaseSymbol& chi, int max_terms, int shift = 0);

// max over terms of a + l b, the order of x^a xi^b in the weight (1 + xi^2 + x^{2l})^{1/(2l)}
double polynomial_order(const PhaseSymbol& p, int l);

// l = 1: iterate the mixed homological equation with exact Moyal Lie series; l > 1: one flow then torus cycle.
NormalForm smoothing_normal_form(const PotentialSpec& V, const PhaseSymbol& W, const std::vector<double>& omega,
                                 double eps, double target_kappa, const NormalFormConfig& cfg = {});

} // namespace kamred
