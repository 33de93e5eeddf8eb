#pragma once

#include "kamred/config.hpp"
#include "kamred/kam.hpp"

#include <nlohmann/json_fwd.hpp>
#include <string>

namespace kamred {

// Selfadjoint forcing with one random matrix per mode pair 0 < |k| <= kmax, each of spectral norm e^{-(|k|-1)}.
QPOperator random_forcing(int n, int N, int kmax, double decay, std::uint64_t seed);

struct Exponents {
    double beta = 0.0;
    double beta_tilde = 0.0;
    bool average_vanishes = false;
};
// beta from the polynomial order, beta-tilde = 2 beta - 2l when the flow average of W vanishes and beta otherwise.
Exponents perturbation_exponents(const PhaseSymbol& W, const PotentialSpec& V);

struct Model {
    RVector lambda_v;
    QPOperator W; // eigenbasis matrices, not scaled by eps
    Exponents exponents;
};
Model build_model(const RunConfig& cfg);

struct ReduceResult {
    Model model;
    PrediagResult prediag;
    KamRun kam;
    RVector deviation; // |lambda_inf - lambda_v|
    double delta = 0.0;

    std::string ledger_csv() const;
    nlohmann::json to_json() const;
};

// Prediagonalises the k = 0 part of eps W, then runs the KAM iteration on the conjugated remainder.
ReduceResult reduce(const RunConfig& cfg, const Model& model);
ReduceResult reduce(const RunConfig& cfg);

// Reference harmonic configuration: l = 1, N = 64, n = 2, omega = (sqrt 2, golden ratio), bounded random W.
RunConfig reference_config(double eps = 1e-3);

} // namespace kamred
