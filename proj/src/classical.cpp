#include "kamred/classical.hpp"

#include "kamred/error.hpp"
#include "kamred/quadrature.hpp"

#include <cmath>
#include <numbers>

namespace kamred {

namespace {

double solve_side(const PotentialSpec& V, double E, int side) {
    double lo = 0.0, hi = 1.0;
    int guard = 0;
    while (V.value(side * hi) < E) {
        hi *= 2.0;
        if (++guard > 200) throw numerical_error("turning-point", "no turning point found");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        (V.value(side * mid) < E ? lo : hi) = mid;
    }
    return side * 0.5 * (lo + hi);
}

struct State {
    double x, xi;
};

void verlet(const PotentialSpec& V, State& s, double dt) {
    s.xi -= 0.5 * dt * V.derivative(s.x);
    s.x += dt * 2.0 * s.xi;
    s.xi -= 0.5 * dt * V.derivative(s.x);
}

void yoshida(const PotentialSpec& V, State& s, double dt) {
    static const double cbrt2 = std::cbrt(2.0);
    static const double w1 = 1.0 / (2.0 - cbrt2);
    static const double w0 = -cbrt2 / (2.0 - cbrt2);
    verlet(V, s, w1 * dt);
    verlet(V, s, w0 * dt);
    verlet(V, s, w1 * dt);
}

} // namespace

TurningPoints turning_points(const PotentialSpec& V, double E) {
    if (!(E > 0.0)) throw validation_error("energy", "E must be positive");
    return {solve_side(V, E, -1), solve_side(V, E, 1)};
}

double phase_area(const PotentialSpec& V, double E, int nodes) {
    auto tp = turning_points(V, E);
    const double c = 0.5 * (tp.left + tp.right), h = 0.5 * (tp.right - tp.left);
    GaussRule rule = gauss_legendre(nodes);
    const double half_pi = 0.5 * std::numbers::pi;
    double s = integrate(rule, -half_pi, half_pi, [&](double th) {
        double x = c + h * std::sin(th);
        return std::sqrt(std::max(0.0, E - V.value(x))) * h * std::cos(th);
    });
    return 2.0 * s;
}

double period_quadrature(const PotentialSpec& V, double E, int nodes) {
    auto tp = turning_points(V, E);
    const double c = 0.5 * (tp.left + tp.right), h = 0.5 * (tp.right - tp.left);
    GaussRule rule = gauss_legendre(nodes);
    const double half_pi = 0.5 * std::numbers::pi;
    return integrate(rule, -half_pi, half_pi, [&](double th) {
        double x = c + h * std::sin(th);
        double gap = E - V.value(x);
        if (gap <= 0.0) {
            // endpoint limit: (x_t - x) ~ h (1 -+ sin) and E - V ~ |V'(x_t)| (x_t - x)
            double xt = th > 0 ? tp.right : tp.left;
            return std::sqrt(2.0 * h / std::abs(V.derivative(xt)));
        }
        return h * std::cos(th) / std::sqrt(gap);
    });
}

FlowTrace classical_flow(const PotentialSpec& V, double E, int steps) {
    if (!(E > 0.0)) throw validation_error("energy", "E must be positive");
    if (steps < 16) throw validation_error("flow", "need at least 16 steps");
    auto tp = turning_points(V, E);
    const double T_est = period_quadrature(V, E);
    const double dt = T_est / steps;
    const State start{tp.right, 0.0};

    // locate the return to the section xi = 0, x > 0 with xi decreasing through zero
    State s = start, prev = s;
    double t = 0.0;
    bool passed_left = false;
    int count = 0;
    const int max_steps = 4 * steps;
    while (true) {
        prev = s;
        yoshida(V, s, dt);
        t += dt;
        if (s.x < 0.0) passed_left = true;
        if (passed_left && s.x > 0.0 && prev.xi >= 0.0 && s.xi < 0.0) break;
        if (++count > max_steps) throw numerical_error("period-detection", "no return to the section");
    }
    double lo = 0.0, hi = dt;
    for (int it = 0; it < 80; ++it) {
        double mid = 0.5 * (lo + hi);
        State probe = prev;
        yoshida(V, probe, mid);
        (probe.xi >= 0.0 ? lo : hi) = mid;
    }
    const double T = t - dt + 0.5 * (lo + hi);

    FlowTrace trace;
    trace.E = E;
    trace.T = T;
    trace.samples.reserve(steps);
    const double h = T / steps;
    s = start;
    for (int i = 0; i < steps; ++i) {
        trace.samples.push_back({i * h, s.x, s.xi});
        double e = s.xi * s.xi + V.value(s.x);
        trace.max_energy_drift = std::max(trace.max_energy_drift, std::abs(e - E) / E);
        yoshida(V, s, h);
    }
    trace.closure_gap = std::hypot(s.x - start.x, s.xi - start.xi);
    if (trace.closure_gap > 1e-6 * std::sqrt(E))
        throw numerical_error("period-detection", "closure gap " + std::to_string(trace.closure_gap));
    return trace;
}

PeriodAction period_action(const PotentialSpec& V, double E) {
    PeriodAction out;
    out.T = classical_flow(V, E).T;
    out.area = phase_area(V, E, 96);
    double check = phase_area(V, E, 192);
    if (std::abs(check - out.area) > 1e-10 * std::abs(check))
        throw numerical_error("quadrature", "area quadrature not converged");
    out.A = out.area / (2.0 * std::numbers::pi);
    const double dE = 1e-3 * E;
    double dA = (phase_area(V, E + dE) - phase_area(V, E - dE)) / (2.0 * dE) / (2.0 * std::numbers::pi);
    out.dA_check = std::abs(2.0 * std::numbers::pi * dA - out.T) / out.T;
    if (out.dA_check > 1e-4) throw numerical_error("quadrature", "2 pi dA/dE does not match the period");
    return out;
}

double average_along_flow(const PhaseSymbol& p, const FlowTrace& trace, const std::vector<double>& phi) {
    double s = 0.0;
    for (const auto& smp : trace.samples) s += p.evaluate(smp.x, smp.xi, phi).real();
    return s / static_cast<double>(trace.samples.size());
}

double average_along_flow(const PhaseSymbol& p, const PotentialSpec& V, double E, const std::vector<double>& phi) {
    if (E < 1.0) throw validation_error("energy", "averages are taken on E >= 1");
    return average_along_flow(p, classical_flow(V, E), phi);
}

} // namespace kamred
