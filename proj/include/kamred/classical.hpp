#pragma once

#include "kamred/basis_spectra.hpp"
#include "kamred/symbol.hpp"

namespace kamred {

struct TurningPoints {
    double left = 0.0, right = 0.0;
};

TurningPoints turning_points(const PotentialSpec& V, double E);
// Area of {xi^2 + V(x) <= E} by Gauss-Legendre quadrature in x = c + h sin(theta).
double phase_area(const PotentialSpec& V, double E, int nodes = 96);
// Period from the quadrature T = int dx / sqrt(E - V).
double period_quadrature(const PotentialSpec& V, double E, int nodes = 96);

struct FlowSample {
    double t = 0.0, x = 0.0, xi = 0.0;
};

struct FlowTrace {
    double E = 0.0;
    double T = 0.0;
    std::vector<FlowSample> samples; // uniform in t over [0, T)
    double max_energy_drift = 0.0;   // relative
    double closure_gap = 0.0;
};

// One period of the flow of xi^2 + V(x) from the right turning point, fourth-order composed Stormer-Verlet.
FlowTrace classical_flow(const PotentialSpec& V, double E, int steps = 4096);

struct PeriodAction {
    double T = 0.0;    // from flow closure
    double A = 0.0;    // action, area / (2 pi)
    double area = 0.0;
    double dA_check = 0.0; // relative mismatch of 2 pi dA/dE against T
};

PeriodAction period_action(const PotentialSpec& V, double E);

double average_along_flow(const PhaseSymbol& p, const PotentialSpec& V, double E, const std::vector<double>& phi);
double average_along_flow(const PhaseSymbol& p, const FlowTrace& trace, const std::vector<double>& phi);

} // namespace kamred
