#include "kamred/homological.hpp"

#include "kamred/error.hpp"

#include <cmath>
#include <numbers>
#include <unsupported/Eigen/FFT>

namespace kamred {

cplx EnergyProfile::value(std::size_t e, const std::vector<double>& phi) const {
    cplx s = 0.0;
    for (const auto& [k, v] : modes) s += v(static_cast<Eigen::Index>(e)) * std::polar(1.0, n ? dot(k, phi) : 0.0);
    return s;
}

double EnergyProfile::sup_abs() const {
    double m = 0.0;
    for (const auto& [k, v] : modes)
        if (v.size()) m = std::max(m, v.cwiseAbs().maxCoeff());
    return m;
}

FlowHomSolution solve_hom_flow(const PhaseSymbol& p, const PotentialSpec& V, const std::vector<double>& E_grid,
                               int steps, bool apply_cutoff, double tol) {
    if (E_grid.empty()) throw validation_error("flow", "empty energy grid");
    if (steps < 64 || (steps & (steps - 1)) != 0) throw validation_error("flow", "steps must be a power of two >= 64");
    FlowHomSolution out;
    out.chi.n = p.n();
    out.chi.order = p.order - (V.l - 1);
    out.average.n = p.n();
    out.average.energies = E_grid;
    PhaseLattice& lat = out.chi.lattice;
    lat.per_orbit = steps;
    lat.energies = E_grid;

    std::vector<MultiIndex> ks;
    for (const auto& [key, c] : p.terms())
        if (std::find(ks.begin(), ks.end(), key.k) == ks.end()) ks.push_back(key.k);
    std::map<MultiIndex, PhaseSymbol> parts;
    for (const auto& k : ks) parts.emplace(k, p.mode(k));

    const std::size_t total = E_grid.size() * static_cast<std::size_t>(steps);
    for (const auto& k : ks) {
        out.chi.modes[k] = CVector::Zero(static_cast<Eigen::Index>(total));
        out.average.modes[k] = CVector::Zero(static_cast<Eigen::Index>(E_grid.size()));
    }
    lat.x.reserve(total);
    lat.xi.reserve(total);

    Eigen::FFT<double> fft;
    const std::vector<double> phi0(p.n(), 0.0);
    double resid = 0.0;
    for (std::size_t e = 0; e < E_grid.size(); ++e) {
        const double E = E_grid[e];
        const double cut = apply_cutoff ? eta(E) : 1.0;
        FlowTrace trace = classical_flow(V, E, steps);
        lat.periods.push_back(trace.T);
        for (const auto& s : trace.samples) {
            lat.x.push_back(s.x);
            lat.xi.push_back(s.xi);
        }
        const double T = trace.T, dt = T / steps;
        for (const auto& k : ks) {
            const PhaseSymbol& pk = parts.at(k);
            std::vector<cplx> g(steps);
            for (int i = 0; i < steps; ++i)
                g[i] = cut * pk.evaluate(trace.samples[i].x, trace.samples[i].xi, phi0);
            cplx mean = 0.0;
            for (auto v : g) mean += v;
            mean /= static_cast<double>(steps);
            out.average.modes[k](static_cast<Eigen::Index>(e)) = mean;
            for (auto& v : g) v -= mean;
            out.sup_p = std::max(out.sup_p, std::abs(mean));
            for (int i = 0; i < steps; ++i) out.sup_p = std::max(out.sup_p, std::abs(g[i] + mean));

            std::vector<cplx> ghat;
            fft.fwd(ghat, g);
            std::vector<cplx> chat(steps, 0.0);
            for (int m = 1; m < steps; ++m) {
                int freq = m <= steps / 2 ? m : m - steps;
                if (2 * std::abs(freq) == steps) continue;
                chat[m] = ghat[m] * T / (cplx(0.0, 2.0 * std::numbers::pi * freq));
            }
            std::vector<cplx> chi;
            fft.inv(chi, chat);
            CVector& dst = out.chi.modes[k];
            for (int i = 0; i < steps; ++i) dst(static_cast<Eigen::Index>(e * steps + i)) = chi[i];

            // fourth-order periodic difference along the orbit
            for (int i = 0; i < steps; ++i) {
                auto at = [&](int j) { return chi[static_cast<std::size_t>((j % steps + steps) % steps)]; };
                cplx d = (-at(i + 2) + 8.0 * at(i + 1) - 8.0 * at(i - 1) + at(i - 2)) / (12.0 * dt);
                double r = std::abs(d - g[i]);
                if (r > resid) {
                    resid = r;
                    out.worst_point = e * steps + i;
                }
            }
        }
    }
    out.residual = resid;
    if (out.residual > tol * std::max(out.sup_p, 1e-300) && out.sup_p > 0.0)
        throw numerical_error("residual-exceeds-tolerance",
                              "flow homological residual " + std::to_string(out.residual) + " at point " +
                                  std::to_string(out.worst_point));
    return out;
}

TorusHomSolution solve_hom_torus(const EnergyProfile& p, const std::vector<double>& omega, double gamma, double tau,
                                 int Kmax) {
    const int n = static_cast<int>(omega.size());
    if (p.n != n) throw validation_error("torus", "profile and frequency dimensions differ");
    DiophantineParams params{gamma, tau, Kmax};
    DivisorScan scan = scan_diophantine_0(omega, params);
    if (!scan.accepted)
        throw numerical_error("non-diophantine", "omega fails the Diophantine test at k = " + to_string(scan.k));

    TorusHomSolution out;
    out.chi.n = out.pbar.n = n;
    out.chi.energies = out.pbar.energies = p.energies;
    out.chi.order = out.pbar.order = p.order;
    out.min_divisor = std::numeric_limits<double>::infinity();
    const auto ne = static_cast<Eigen::Index>(p.energies.size());
    out.pbar.modes[MultiIndex(n, 0)] = CVector::Zero(ne);
    for (const auto& [k, v] : p.modes) {
        if (is_zero(k)) {
            out.pbar.modes[k] = v;
            continue;
        }
        if (l1(k) > Kmax) {
            out.tail_bound += v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
            continue;
        }
        double div = dot(k, omega);
        if (std::abs(div) < gamma * std::pow(l1(k), -tau))
            throw numerical_error("divisor", "divisor below threshold at k = " + to_string(k));
        out.min_divisor = std::min(out.min_divisor, std::abs(div));
        out.chi.modes[k] = v / cplx(0.0, div);
    }

    // residual on a phi grid
    int G = 2;
    for (const auto& [k, v] : p.modes)
        for (int c : k) G = std::max(G, 2 * std::abs(c) + 2);
    G = std::min(G, n == 1 ? 512 : (n == 2 ? 64 : 16));
    std::vector<int> idx(n, 0);
    std::vector<double> phi(n);
    long total = 1;
    for (int d = 0; d < n; ++d) total *= G;
    for (long t = 0; t < total; ++t) {
        long r = t;
        for (int d = 0; d < n; ++d) {
            phi[d] = 2.0 * std::numbers::pi * (r % G) / G;
            r /= G;
        }
        for (Eigen::Index e = 0; e < ne; ++e) {
            cplx val = 0.0;
            for (const auto& [k, v] : out.chi.modes) val += cplx(0.0, dot(k, omega)) * v(e) * std::polar(1.0, dot(k, phi));
            for (const auto& [k, v] : p.modes)
                if (!is_zero(k)) val -= v(e) * std::polar(1.0, dot(k, phi));
            out.residual = std::max(out.residual, std::abs(val));
        }
    }
    if (out.residual > out.tail_bound + 1e-12 * std::max(1.0, p.sup_abs()))
        throw numerical_error("residual-exceeds-tolerance", "torus residual above the truncation tail");
    return out;
}

namespace {

double binom(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// (u + s v)^m coefficients of u^{m-q} v^q
std::vector<cplx> binomial_row(int m, cplx s) {
    std::vector<cplx> c(m + 1);
    for (int q = 0; q <= m; ++q) c[q] = binom(m, q) * std::pow(s, q);
    return c;
}

} // namespace

PhaseSymbol to_complex_coordinates(const PhaseSymbol& p) {
    // x = (z + zb)/2, xi = (z - zb)/(2i)
    PhaseSymbol out(p.n());
    out.order = p.order;
    for (const auto& [key, c] : p.terms()) {
        auto rx = binomial_row(key.a, 1.0);
        auto rxi = binomial_row(key.b, -1.0);
        cplx pref = c * std::pow(0.5, key.a) * std::pow(cplx(0.0, -0.5), key.b);
        for (int q1 = 0; q1 <= key.a; ++q1)
            for (int q2 = 0; q2 <= key.b; ++q2)
                out.add(key.a - q1 + key.b - q2, q1 + q2, key.k, pref * rx[q1] * rxi[q2]);
    }
    out.prune(1e-300);
    return out;
}

PhaseSymbol from_complex_coordinates(const PhaseSymbol& pz) {
    // z = x + i xi, zb = x - i xi
    PhaseSymbol out(pz.n());
    out.order = pz.order;
    for (const auto& [key, c] : pz.terms()) {
        auto rz = binomial_row(key.a, cplx(0.0, 1.0));
        auto rzb = binomial_row(key.b, cplx(0.0, -1.0));
        for (int q1 = 0; q1 <= key.a; ++q1)
            for (int q2 = 0; q2 <= key.b; ++q2)
                out.add(key.a - q1 + key.b - q2, q1 + q2, key.k, c * rz[q1] * rzb[q2]);
    }
    out.prune(1e-300);
    return out;
}

MixedHomSolution solve_hom_mixed(const PhaseSymbol& p, const std::vector<double>& omega, double gamma, double tau,
                                 int Kmax) {
    const int n = static_cast<int>(omega.size());
    if (p.n() != n) throw validation_error("mixed", "symbol and frequency dimensions differ");
    DiophantineParams params{gamma, tau, Kmax};
    DivisorScan scan = scan_diophantine_1(omega, params);
    if (!scan.accepted)
        throw numerical_error("resonant-divisor", "omega fails the shifted Diophantine test at (k0,k) = (" +
                                                      std::to_string(scan.k0) + "," + to_string(scan.k) + ")");

    PhaseSymbol pz = to_complex_coordinates(p);
    PhaseSymbol chiz(n), avgz(n);
    MixedHomSolution out;
    out.min_divisor = std::numeric_limits<double>::infinity();
    const MultiIndex zero(n, 0);
    for (const auto& [key, c] : pz.terms()) {
        if (l1(key.k) > Kmax) throw validation_error("mixed", "symbol has modes beyond Kmax");
        if (key.a == key.b && is_zero(key.k)) {
            avgz.add(key.a, key.b, key.k, c);
            if (out.average_h0.size() <= static_cast<std::size_t>(key.a)) out.average_h0.resize(key.a + 1, 0.0);
            out.average_h0[key.a] += c;
            continue;
        }
        double div = dot(key.k, omega) + 2.0 * (key.b - key.a);
        double thr = gamma / (1.0 + std::pow(l1(key.k), tau));
        if (std::abs(div) < thr)
            throw numerical_error("resonant-divisor", "divisor " + std::to_string(div) + " at k = " + to_string(key.k) +
                                                          ", (a,b) = (" + std::to_string(key.a) + "," +
                                                          std::to_string(key.b) + ")");
        out.min_divisor = std::min(out.min_divisor, std::abs(div));
        chiz.add(key.a, key.b, key.k, c / cplx(0.0, div));
    }
    out.chi = from_complex_coordinates(chiz);
    out.average = from_complex_coordinates(avgz);
    out.chi.order = p.order;
    out.average.order = p.order;

    PotentialSpec harmonic = PotentialSpec::monomial(1);
    PhaseSymbol h0 = PhaseSymbol::h0(harmonic, n);
    PhaseSymbol r = poisson_bracket(h0, out.chi) - out.chi.phase_derivative(omega) + p - out.average;
    out.residual = r.sup_coeff();
    if (out.residual > 1e-10 * std::max(p.sup_coeff(), 1e-300) && p.sup_coeff() > 0.0)
        throw numerical_error("residual-exceeds-tolerance", "mixed homological residual " + std::to_string(out.residual));
    out.chi.prune(1e-15 * std::max(1.0, out.chi.sup_coeff()));
    out.average.prune(1e-15 * std::max(1.0, out.average.sup_coeff()));
    return out;
}

} // namespace kamred
