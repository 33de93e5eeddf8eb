#include "kamred/propagator.hpp"

#include "kamred/error.hpp"
#include "kamred/report.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>

namespace kamred {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Interaction-picture generator eps e^{i lambda t} W(omega t) e^{-i lambda t}.
class InteractionHamiltonian {
public:
    InteractionHamiltonian(const RVector& lambda, const QPOperator& W, const std::vector<double>& omega, double eps)
        : lambda_(lambda), W_(W), omega_(omega), eps_(eps) {
        if (W.N() != lambda.size()) throw validation_error("evolve", "W and lambda sizes differ");
        if (W.n() != static_cast<int>(omega.size())) throw validation_error("evolve", "W and omega dimensions differ");
        for (const auto& [k, m] : W.modes()) bound_ += m.operatorNorm();
        bound_ *= std::abs(eps);
    }

    double bound() const { return bound_; }

    CMatrix at(double t) const {
        const int N = static_cast<int>(lambda_.size());
        CMatrix H = CMatrix::Zero(N, N);
        if (eps_ == 0.0) return H;
        std::vector<double> phi(omega_.size());
        for (std::size_t i = 0; i < omega_.size(); ++i) phi[i] = omega_[i] * t;
        H = W_.evaluate(phi);
        CVector u(N);
        for (int j = 0; j < N; ++j) u(j) = std::polar(1.0, lambda_(j) * t);
        H = u.asDiagonal() * H * u.conjugate().asDiagonal();
        return H * cplx(eps_);
    }

private:
    RVector lambda_;
    QPOperator W_;
    std::vector<double> omega_;
    double eps_;
    double bound_ = 0.0;
};

// v <- exp(-i h H) v by a Taylor series on the state.
void apply_exp(const CMatrix& H, double h, CMatrix& v) {
    if (H.size() == 0) return;
    CMatrix term = v;
    const double scale = std::max(v.norm(), 1e-300);
    for (int m = 1; m <= 80; ++m) {
        term = (H * term) * cplx(0.0, -h / m);
        v += term;
        if (term.norm() <= 1e-17 * scale) return;
    }
    throw numerical_error("exp-failure", "Taylor exponential did not converge");
}

class Stepper {
public:
    Stepper(const InteractionHamiltonian& H, Integrator integ) : H_(H), integ_(integ) {}

    void step(double t, double dt, CMatrix& v) const {
        if (H_.bound() == 0.0) return;
        if (integ_ == Integrator::Magnus2) {
            apply_exp(H_.at(t + 0.5 * dt), dt, v);
            return;
        }
        const double c1 = 0.5 - std::sqrt(3.0) / 6.0, c2 = 0.5 + std::sqrt(3.0) / 6.0;
        const double a1 = (3.0 - 2.0 * std::sqrt(3.0)) / 12.0, a2 = (3.0 + 2.0 * std::sqrt(3.0)) / 12.0;
        CMatrix A1 = H_.at(t + c1 * dt), A2 = H_.at(t + c2 * dt);
        apply_exp(a2 * A1 + a1 * A2, dt, v);
        apply_exp(a1 * A1 + a2 * A2, dt, v);
    }

private:
    const InteractionHamiltonian& H_;
    Integrator integ_;
};

CVector to_schrodinger(const CVector& c, const RVector& lambda, double t) {
    CVector psi(c.size());
    for (Eigen::Index j = 0; j < c.size(); ++j) psi(j) = std::polar(1.0, -lambda(j) * t) * c(j);
    return psi;
}

double leakage_mass(const CVector& c) {
    const Eigen::Index N = c.size();
    const Eigen::Index start = static_cast<Eigen::Index>(std::floor(0.9 * static_cast<double>(N)));
    return c.tail(N - start).squaredNorm();
}

double wrap_phase(double a) {
    a = std::remainder(a, kTwoPi);
    if (a <= -std::numbers::pi) a += kTwoPi;
    return a;
}

std::size_t step_count(double T, double& dt) {
    if (!(T > 0.0) || !(dt > 0.0)) throw validation_error("evolve", "T_final and dt must be positive");
    auto n = static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
    n = std::max<std::size_t>(n, 1);
    dt = T / static_cast<double>(n);
    return n;
}

CVector final_state_only(const EvolutionRun& run, const InteractionHamiltonian& H, double dt) {
    double h = dt;
    std::size_t n = step_count(run.T_final, h);
    Stepper st(H, run.integrator);
    CMatrix v = run.psi0;
    for (std::size_t i = 0; i < n; ++i) st.step(static_cast<double>(i) * h, h, v);
    return v.col(0);
}

} // namespace

double sobolev_norm(const CVector& psi, double s) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < psi.size(); ++j) acc += std::pow(static_cast<double>(j + 1), 2.0 * s) * std::norm(psi(j));
    return std::sqrt(acc);
}

std::string NormTrace::csv() const {
    CsvTable tab({"t", "l2", "h1", "h2", "leakage", "unitarity_defect"});
    for (std::size_t i = 0; i < t.size(); ++i) tab.add_row({t[i], l2[i], h1[i], h2[i], leakage[i], unitarity_defect[i]});
    return tab.str();
}

NormTrace evolve(const EvolutionRun& run, const RVector& lambda, const QPOperator& W) {
    if (run.psi0.size() != lambda.size()) throw validation_error("evolve", "psi0 size does not match the basis");
    if (std::abs(run.psi0.norm() - 1.0) > 1e-12) throw validation_error("evolve", "psi0 must have unit norm");
    if (run.record_every < 1) throw validation_error("evolve", "record_every must be positive");
    InteractionHamiltonian H(lambda, W, run.omega, run.eps);
    double dt = run.dt;
    const std::size_t nsteps = step_count(run.T_final, dt);
    if (dt * H.bound() > 0.5)
        throw validation_error("stability", "dt * eps * sum_k ||W_k|| = " + std::to_string(dt * H.bound()) + " exceeds 0.5");

    std::vector<std::size_t> cp_steps;
    for (double tc : run.checkpoints) {
        if (tc < 0.0 || tc > run.T_final * (1.0 + 1e-12)) throw validation_error("evolve", "checkpoint outside [0, T]");
        cp_steps.push_back(static_cast<std::size_t>(std::llround(tc / dt)));
    }

    NormTrace tr;
    const double h1_0 = sobolev_norm(run.psi0, 1.0);
    CMatrix v = run.psi0;
    Stepper st(H, run.integrator);
    auto record = [&](std::size_t i) {
        const double t = static_cast<double>(i) * dt;
        CVector c = v.col(0);
        const double l2 = c.norm();
        const double h1 = sobolev_norm(c, 1.0);
        const double leak = leakage_mass(c);
        tr.t.push_back(t);
        tr.l2.push_back(l2);
        tr.h1.push_back(h1);
        tr.h2.push_back(sobolev_norm(c, 2.0));
        tr.leakage.push_back(leak);
        tr.unitarity_defect.push_back(std::abs(l2 - 1.0));
        tr.max_l2_drift = std::max(tr.max_l2_drift, std::abs(l2 - 1.0));
        tr.max_h1_ratio = std::max(tr.max_h1_ratio, h1 / h1_0);
        if (leak > 1e-6 && !tr.leakage_flag) {
            tr.leakage_flag = true;
            tr.leakage_time = t;
        }
    };
    auto store_checkpoints = [&](std::size_t i) {
        for (std::size_t q = 0; q < cp_steps.size(); ++q)
            if (cp_steps[q] == i) {
                if (tr.checkpoint_states.size() < cp_steps.size()) tr.checkpoint_states.resize(cp_steps.size());
                tr.checkpoint_states[q] = to_schrodinger(v.col(0), lambda, static_cast<double>(i) * dt);
            }
    };

    record(0);
    store_checkpoints(0);
    for (std::size_t i = 0; i < nsteps; ++i) {
        st.step(static_cast<double>(i) * dt, dt, v);
        const std::size_t done = i + 1;
        if (done % static_cast<std::size_t>(run.record_every) == 0 || done == nsteps) record(done);
        else {
            const double leak = leakage_mass(v.col(0));
            if (leak > 1e-6 && !tr.leakage_flag) {
                tr.leakage_flag = true;
                tr.leakage_time = static_cast<double>(done) * dt;
            }
        }
        store_checkpoints(done);
    }
    tr.steps = nsteps;
    tr.final_state = to_schrodinger(v.col(0), lambda, run.T_final);
    if (run.step_halving) {
        CVector fine = final_state_only(run, H, dt / 2.0);
        tr.halving_error = (fine - v.col(0)).norm();
    }
    return tr;
}

ReducedComparison reduced_compare(const EvolutionRun& run, const RVector& lambda, const QPOperator& W,
                                  const RVector& lambda_inf, const TransformChain& chain, double s, int grid_kmax) {
    const int n = static_cast<int>(run.omega.size());
    if (chain.n != n) throw validation_error("chain-mismatch", "chain and frequency dimensions differ");
    if (lambda_inf.size() != lambda.size()) throw validation_error("chain-mismatch", "lambda_inf size differs");
    if (chain.U1.size() && chain.U1.rows() != lambda.size())
        throw validation_error("chain-mismatch", "chain matrix size differs from the basis");

    EvolutionRun r = run;
    if (r.checkpoints.empty())
        for (int q = 0; q <= 10; ++q) r.checkpoints.push_back(run.T_final * q / 10.0);
    r.step_halving = true;
    NormTrace tr = evolve(r, lambda, W);

    double dt = run.dt;
    step_count(run.T_final, dt);
    const CVector phi0 = chain.evaluate(std::vector<double>(n, 0.0)).adjoint() * run.psi0;
    ReducedComparison out;
    out.integrator_error = tr.halving_error;
    for (std::size_t q = 0; q < r.checkpoints.size(); ++q) {
        const double t = static_cast<double>(std::llround(r.checkpoints[q] / dt)) * dt;
        std::vector<double> ang(n);
        for (int d = 0; d < n; ++d) ang[d] = run.omega[d] * t;
        CVector red = chain.evaluate(ang) * to_schrodinger(phi0, lambda_inf, t);
        const double disc = sobolev_norm(tr.checkpoint_states[q] - red, s);
        out.times.push_back(t);
        out.discrepancy.push_back(disc);
        out.max_discrepancy = std::max(out.max_discrepancy, disc);
    }

    int K = grid_kmax;
    if (K <= 0) {
        K = std::max(2, W.kmax());
        for (const auto& X : chain.generators) K = std::max(K, X.kmax());
    }
    TorusGrid grid = TorusGrid::for_kmax(n, K);
    QPOperator P = W * cplx(run.eps);
    out.conjugation_residual = conjugation_residual(lambda, P, chain.samples(grid), run.omega, lambda_inf, grid);
    out.expected_bound = out.conjugation_residual * run.T_final + out.integrator_error;
    return out;
}

FloquetSpectrum floquet_eigenphases(double omega, double eps, const RVector& lambda, const QPOperator& W, double dt,
                                    Integrator integrator, double collision_tol) {
    if (W.n() != 1) throw validation_error("floquet", "the monodromy needs n = 1");
    const int N = static_cast<int>(lambda.size());
    const double T = kTwoPi / omega;
    InteractionHamiltonian H(lambda, W, {omega}, eps);
    double h = dt;
    const std::size_t nsteps = step_count(T, h);
    if (h * H.bound() > 0.5) throw validation_error("stability", "dt too large for the forcing");
    Stepper st(H, integrator);
    CMatrix U = CMatrix::Identity(N, N);
    for (std::size_t i = 0; i < nsteps; ++i) st.step(static_cast<double>(i) * h, h, U);
    CVector ph(N);
    for (int j = 0; j < N; ++j) ph(j) = std::polar(1.0, -lambda(j) * T);
    U = ph.asDiagonal() * U;

    FloquetSpectrum out;
    out.unitarity_defect = (U.adjoint() * U - CMatrix::Identity(N, N)).norm();
    if (out.unitarity_defect > 1e-8)
        throw numerical_error("non-unitary", "monodromy unitarity defect " + std::to_string(out.unitarity_defect));
    Eigen::ComplexEigenSolver<CMatrix> es(U);
    const CVector& ev = es.eigenvalues();
    const CMatrix& V = es.eigenvectors();

    std::vector<std::tuple<double, int, int>> pairs;
    pairs.reserve(static_cast<std::size_t>(N) * N);
    for (int m = 0; m < N; ++m)
        for (int j = 0; j < N; ++j) pairs.emplace_back(std::norm(V(j, m)), j, m);
    std::stable_sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return std::get<0>(a) > std::get<0>(b); });
    std::vector<int> assigned(N, -1);
    std::vector<bool> used(N, false);
    for (const auto& [w, j, m] : pairs)
        if (assigned[j] < 0 && !used[m]) {
            assigned[j] = m;
            used[m] = true;
        }
    out.phases.resize(N);
    for (int j = 0; j < N; ++j) out.phases[j] = std::arg(ev(assigned[j]));

    std::vector<double> low(out.phases.begin(), out.phases.begin() + N / 2);
    std::sort(low.begin(), low.end());
    out.min_gap = kTwoPi;
    for (std::size_t q = 0; q + 1 < low.size(); ++q) out.min_gap = std::min(out.min_gap, low[q + 1] - low[q]);
    if (low.size() > 1) out.min_gap = std::min(out.min_gap, low.front() + kTwoPi - low.back());
    out.collision_flag = out.min_gap < collision_tol;
    return out;
}

FloquetContinuation floquet_continuation(double omega, const std::vector<double>& eps_values, const RVector& lambda,
                                         const QPOperator& W, double dt, Integrator integrator) {
    FloquetSpectrum base = floquet_eigenphases(omega, 0.0, lambda, W, dt, integrator);
    FloquetContinuation out;
    out.any_collision = base.collision_flag;
    const int half = static_cast<int>(lambda.size()) / 2;
    for (double e : eps_values) {
        FloquetSpectrum fs = floquet_eigenphases(omega, e, lambda, W, dt, integrator);
        double shift = 0.0;
        for (int j = 0; j < half; ++j) shift = std::max(shift, std::abs(wrap_phase(fs.phases[j] - base.phases[j])));
        out.eps.push_back(e);
        out.max_shift.push_back(shift);
        if (e != 0.0) out.lipschitz = std::max(out.lipschitz, shift / std::abs(e));
        out.any_collision = out.any_collision || fs.collision_flag;
    }
    return out;
}

} // namespace kamred
