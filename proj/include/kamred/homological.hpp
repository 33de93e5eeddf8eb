#pragma once

#include "kamred/classical.hpp"
#include "kamred/diophantine.hpp"
#include "kamred/symbol.hpp"

namespace kamred {

// Function of the energy with torus dependence: sum_k f_k(E) e^{ik.phi}, sampled on an energy grid.
struct EnergyProfile {
    int n = 0;
    std::vector<double> energies;
    std::map<MultiIndex, CVector> modes;
    double order = 0.0;

    cplx value(std::size_t e, const std::vector<double>& phi) const;
    double sup_abs() const;
};

struct FlowHomSolution {
    GridSymbol chi;      // samples on the orbit lattice
    EnergyProfile average; // <p>(E), per Fourier mode
    double residual = 0.0; // sup |{chi,h0} - (p - <p>)|
    double sup_p = 0.0;
    std::size_t worst_point = 0;
};

// chi = (1/T) int_0^T t (p - <p>)(Phi^t) dt per orbit, multiplied by eta(E) when apply_cutoff.
FlowHomSolution solve_hom_flow(const PhaseSymbol& p, const PotentialSpec& V, const std::vector<double>& E_grid,
                               int steps = 2048, bool apply_cutoff = true, double tol = 1e-4);

struct TorusHomSolution {
    EnergyProfile chi;
    EnergyProfile pbar;
    double residual = 0.0;   // sup over energies and a phi grid of |omega.d_phi chi - (p - pbar)|
    double tail_bound = 0.0; // sum over dropped modes of sup_E |p_k|
    double min_divisor = 0.0;
};

TorusHomSolution solve_hom_torus(const EnergyProfile& p, const std::vector<double>& omega, double gamma, double tau,
                                 int Kmax);

struct MixedHomSolution {
    PhaseSymbol chi;
    PhaseSymbol average;   // time average of the flow average, a polynomial in h0
    std::vector<cplx> average_h0; // coefficients of h0^m in `average`
    double residual = 0.0; // sup coefficient of {h0,chi} - omega.d_phi chi + p - average
    double min_divisor = 0.0;
};

// l = 1, h0 = xi^2 + x^2; solved on monomials z^a zbar^b e^{ik.phi}, z = x + i xi.
MixedHomSolution solve_hom_mixed(const PhaseSymbol& p, const std::vector<double>& omega, double gamma, double tau,
                                 int Kmax);

// Conversions between (x, xi) monomials and (z, zbar) monomials; the key's a/b hold the z/zbar powers.
PhaseSymbol to_complex_coordinates(const PhaseSymbol& p);
PhaseSymbol from_complex_coordinates(const PhaseSymbol& pz);

} // namespace kamred
