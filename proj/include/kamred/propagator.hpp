#pragma once

#include "kamred/kam.hpp"
#include "kamred/qp_operator.hpp"

#include <string>

namespace kamred {

enum class Integrator { Magnus2, Magnus4 };

// i psi' = (diag(lambda) + eps W(omega t)) psi on the truncated eigenbasis.
struct EvolutionRun {
    std::vector<double> omega;
    double eps = 0.0;
    double T_final = 1.0;
    double dt = 1e-2;
    Integrator integrator = Integrator::Magnus2;
    CVector psi0;
    int record_every = 1;            // trace row every this many steps
    std::vector<double> checkpoints; // times at which the full state is stored
    bool step_halving = false;
};

struct NormTrace {
    std::vector<double> t, l2, h1, h2, leakage, unitarity_defect;
    CVector final_state;
    std::vector<CVector> checkpoint_states;
    std::size_t steps = 0;
    double max_l2_drift = 0.0;
    double max_h1_ratio = 0.0;  // sup_t ||psi||_{H^1} / ||psi(0)||_{H^1}
    bool leakage_flag = false;  // top 10% of modes above 1e-6 mass
    double leakage_time = -1.0; // first time the flag was raised
    double halving_error = -1.0; // ||psi_dt(T) - psi_{dt/2}(T)||_2 when requested

    std::string csv() const;
};

// (sum_j j^{2s} |psi_j|^2)^{1/2}, j from 1
double sobolev_norm(const CVector& psi, double s);

// Interaction picture c = e^{i lambda t} psi with midpoint (order 2) or two-exponential Gauss (order 4)
// commutator-free Magnus steps; each exponential acts by a Taylor series on the state.
NormTrace evolve(const EvolutionRun& run, const RVector& lambda, const QPOperator& W);

struct ReducedComparison {
    std::vector<double> times;
    std::vector<double> discrepancy; // ||psi_full - Phi(omega t) phi(t)||_{H^s}
    double max_discrepancy = 0.0;
    double conjugation_residual = 0.0;
    double expected_bound = 0.0; // residual * T + integrator estimate
    double integrator_error = 0.0;
};

// phi(t) = e^{-i lambda_inf t} Phi(0)^dagger psi0, mapped back through the chain at each checkpoint.
ReducedComparison reduced_compare(const EvolutionRun& run, const RVector& lambda, const QPOperator& W,
                                  const RVector& lambda_inf, const TransformChain& chain, double s = 1.0,
                                  int grid_kmax = 0);

struct FloquetSpectrum {
    std::vector<double> phases; // eigenphase assigned to each basis index by maximal overlap
    double unitarity_defect = 0.0;
    double min_gap = 0.0;       // smallest circular gap between distinct assigned phases, j <= N/2
    bool collision_flag = false;
};

// Monodromy over 2 pi / omega for n = 1.
FloquetSpectrum floquet_eigenphases(double omega, double eps, const RVector& lambda, const QPOperator& W, double dt,
                                    Integrator integrator = Integrator::Magnus4, double collision_tol = 1e-6);

struct FloquetContinuation {
    std::vector<double> eps;
    std::vector<double> max_shift; // max_{j <= N/2} |phase_j(eps) - phase_j(0)| on the circle
    double lipschitz = 0.0;        // max of max_shift / eps
    bool any_collision = false;
};

FloquetContinuation floquet_continuation(double omega, const std::vector<double>& eps_values, const RVector& lambda,
                                         const QPOperator& W, double dt, Integrator integrator = Integrator::Magnus4);

} // namespace kamred
