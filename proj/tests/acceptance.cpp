#include "kamred/basis_spectra.hpp"
#include "kamred/config.hpp"
#include "kamred/diophantine.hpp"
#include "kamred/error.hpp"
#include "kamred/homological.hpp"
#include "kamred/kam.hpp"
#include "kamred/lemmas.hpp"
#include "kamred/parallel.hpp"
#include "kamred/pipeline.hpp"
#include "kamred/propagator.hpp"
#include "kamred/weyl.hpp"

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>

using namespace kamred;

namespace {

const double kGolden = 1.6180339887498949;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

CMatrix sum_modes(const QPOperator& P, const std::vector<double>& phi) {
    CMatrix M = CMatrix::Zero(P.N(), P.N());
    for (const auto& [k, m] : P.modes()) {
        double a = 0.0;
        for (std::size_t i = 0; i < k.size(); ++i) a += k[i] * phi[i];
        M += std::exp(cplx(0.0, a)) * m;
    }
    return M;
}

Outcome c1_asymptotics() {
    auto t0 = std::chrono::steady_clock::now();
    EigenBasis b = solve_h0(PotentialSpec::monomial(2), 128);
    AsymptoticFit fit = check_asymptotics(b, 2, 20, 60);
    const double secs = seconds_since(t0);
    const double target = 4.0 / 3.0;
    const double rel = std::abs(fit.free_exponent - target) / target;
    return {rel <= 0.02 && secs < 10.0,
            fmt("l=2 N=128 j in [20,60]: exponent %.5f (target %.5f, rel dev %.2e <= 2e-2), %.1f s < 10 s",
                fit.free_exponent, target, rel, secs)};
}

Outcome c2_harmonic() {
    EigenBasis b = solve_h0(PotentialSpec::monomial(1), 10);
    double dev = 0.0;
    for (int j = 1; j <= 10; ++j) dev = std::max(dev, std::abs(b.lambda(j) / 2.0 - (j - 1 + 0.5)));
    return {dev <= 1e-8, fmt("max_j<=10 |lambda_j/2 - (j-1/2)| = %.2e <= 1e-8 (lambda_j = 2j-1)", dev)};
}

Outcome c3_homological() {
    const int N = 16;
    RVector lam(N);
    for (int j = 0; j < N; ++j) lam(j) = j + 0.5;
    double worst = 0.0;
    int solved = 0, rejected = 0;
    for (std::uint64_t t = 0; solved < 100; ++t) {
        std::vector<double> om = sample_frequency(2, 101, t);
        QPOperator P = random_selfadjoint(2, N, 3, 1000 + t);
        QuantumHomSolution s;
        try {
            s = quantum_homological(lam, P, om, {1e-3, 2.5, 1.0}, 3);
        } catch (const Error&) {
            ++rejected;
            continue;
        }
        ++solved;
        QPOperator Xd = s.X.phase_derivative(om);
        const double pn = analytic_norm(P, 0.0);
        CMatrix A = lam.cast<cplx>().asDiagonal();
        for (int a = 0; a < 16; ++a) {
            std::vector<double> phi{counter_uniform(7, t * 16 + a, 0) * 2 * M_PI, counter_uniform(7, t * 16 + a, 1) * 2 * M_PI};
            CMatrix X = sum_modes(s.X, phi);
            CMatrix R = cplx(0, -1) * (A * X - X * A) - sum_modes(Xd, phi) + sum_modes(P, phi);
            R.diagonal() -= P.average_diagonal().cast<cplx>();
            worst = std::max(worst, R.cwiseAbs().maxCoeff() / pn);
        }
    }
    std::vector<double> Es;
    for (int e = 1; e <= 32; ++e) Es.push_back(e);
    double flow_worst = 0.0;
    bool flow_ok = true;
    for (int l : {1, 2})
        for (const PhaseSymbol& p : {PhaseSymbol::monomial(0, 2, 0), PhaseSymbol::monomial(0, 2, 2)}) {
            try {
                FlowHomSolution s = solve_hom_flow(p, PotentialSpec::monomial(l), Es);
                flow_worst = std::max(flow_worst, s.residual / s.sup_p);
            } catch (const Error&) {
                flow_ok = false;
            }
        }
    return {worst <= 1e-10 && flow_ok && flow_worst <= 1e-4,
            fmt("quantum: 100 random N=16 n=2 instances (%d non-Diophantine draws skipped), max residual/||P|| = "
                "%.2e <= 1e-10; flow: V in {x^2, x^4}, E in [1,32], max residual/sup|p| = %.2e <= 1e-4",
                rejected, worst, flow_worst)};
}

Outcome c4_lemmas() {
    LemmaCheck pos = check_pos96(1, 100);
    LemmaCheck lie = check_relie(1, 100);
    LemmaCheck rico = check_rico(1, 20);
    std::vector<double> s = rico_iterate(1.0, 0.0, 0.125, 2);
    const bool rico_example = std::abs(s[1] - 1.0 / 64.0) <= 1e-15;
    const bool ok = pos.violations == 0 && lie.violations == 0 && rico.violations == 0 && rico_example;
    return {ok, fmt("divided matrix: 100 matrices, %d violations (max ratio %.3f); Lie: 100 trials, %d violations "
                    "(max ratio %.3f); recursion: 20 sets (%d checks), %d violations; (c1,a,s0)=(1,0,1/8) gives s1=%.17g",
                    pos.violations, pos.max_ratio, lie.violations, lie.max_ratio, rico.trials, rico.violations, s[1])};
}

Outcome c5_quadratic() {
    auto t0 = std::chrono::steady_clock::now();
    ReduceResult r1 = reduce(reference_config(1e-3));
    const double secs = seconds_since(t0);
    ReduceResult r2 = reduce(reference_config(2e-3));
    const auto& L = r1.kam.ledger;
    int above = 0;
    for (const auto& row : L) above += row.above_floor;
    // C from the first transition, then every later transition above the floor must respect it
    double C = 0.0, Cmax = 0.0;
    std::ostringstream cs;
    for (std::size_t i = 0; i + 1 < L.size(); ++i) {
        if (!L[i + 1].above_floor) break;
        const double c = L[i + 1].eps1_measured / (L[i].eps1_measured * L[i].eps1_measured);
        if (i == 0) C = c;
        Cmax = std::max(Cmax, c);
        cs << (i ? "," : "") << fmt("%.3g", c);
    }
    const bool bounded = Cmax <= 10.0 * C;
    const double ratio = r2.kam.ledger.at(1).eps1_measured / r1.kam.ledger.at(1).eps1_measured;
    const bool ok = above >= 4 && bounded && std::abs(ratio - 4.0) <= 0.5 && secs < 60.0;
    return {ok, fmt("stages above 1e-13 floor: %d (need >= 4); eps1(l+1)/eps1(l)^2 = [%s]; stage-1 remainder ratio at "
                    "2 eps = %.3f (4 +- 0.5); %.1f s < 60 s",
                    above, cs.str().c_str(), ratio, secs)};
}

Outcome c6_deviation() {
    RunConfig cfg = load_config(KAMRED_CONFIG_DIR "/harmonic_xcos.toml");
    const double w = cfg.omega.at(0);
    const int jmax = cfg.N / 2;
    double C[2], oracle_rel = 0.0, fit_eps2[2];
    const double eps_values[2] = {1e-3, 5e-4};
    double beta_tilde = 0.0;
    for (int e = 0; e < 2; ++e) {
        cfg.eps = eps_values[e];
        ReduceResult r = reduce(cfg);
        beta_tilde = r.model.exponents.beta_tilde;
        C[e] = 0.0;
        fit_eps2[e] = 0.0;
        for (int j = 1; j <= jmax; ++j) {
            const double dev = r.deviation(j - 1);
            C[e] = std::max(C[e], dev / (cfg.eps * std::pow(j, beta_tilde / (cfg.l + 1))));
            fit_eps2[e] = std::max(fit_eps2[e], dev / (cfg.eps * cfg.eps));
            // second-order shift of x cos(omega t) on lambda = 2j-1 is eps^2 / (2 (4 - omega^2)) in these units
            const double oracle = cfg.eps * cfg.eps / (2.0 * (4.0 - w * w));
            oracle_rel = std::max(oracle_rel, std::abs(dev - oracle) / oracle);
        }
    }
    const double cratio = C[0] / C[1];
    const bool ok = std::abs(cratio - 1.0) <= 0.2;
    return {ok, fmt("beta~=%.0f; C(1e-3)=%.4e C(5e-4)=%.4e ratio %.3f (need 1 +- 0.2); deviation/eps^2 = %.4e, %.4e; "
                    "max rel dev from eps^2/(2(4-omega^2)) = %.2e",
                    beta_tilde, C[0], C[1], cratio, fit_eps2[0], fit_eps2[1], oracle_rel)};
}

Outcome c7_measure() {
    auto t0 = std::chrono::steady_clock::now();
    MeasureEstimate a = excluded_measure(2, {1e-3, 2.5, 50}, DiophantineSet::Omega0, 1000000, 1);
    MeasureEstimate b = excluded_measure(2, {2e-3, 2.5, 50}, DiophantineSet::Omega0, 1000000, 1);
    const double secs = seconds_since(t0);
    const double ratio = b.fraction / a.fraction;
    return {ratio >= 1.5 && ratio <= 2.5 && secs < 30.0,
            fmt("excluded fraction %.4e (gamma 1e-3), %.4e (gamma 2e-3), ratio %.3f in [1.5, 2.5]; %.1f s < 30 s",
                a.fraction, b.fraction, ratio, secs)};
}

Outcome c8_resonance() {
    const double eps = 0.01;
    LambdaFamily lam = [eps](int j, const std::vector<double>& w) {
        double a = counter_uniform(17, j, 0) - 0.5, b = counter_uniform(17, j, 1) - 0.5, c = 6.0 * counter_uniform(17, j, 2);
        return j + 0.5 + eps * std::sin(a * w[0] + b * w[1] + c);
    };
    int violations = 0, hyp_fail = 0, nonempty = 0;
    double worst = 0.0;
    for (std::uint64_t t = 0; t < 100; ++t) {
        ResonanceQuery q;
        q.i = 1 + static_cast<int>(10 * counter_uniform(31, t, 0));
        q.j = 1 + static_cast<int>(10 * counter_uniform(31, t, 1));
        if (q.i == q.j) q.j = q.i + 1;
        q.k = {static_cast<int>(9 * counter_uniform(31, t, 2)) - 4, static_cast<int>(9 * counter_uniform(31, t, 3)) - 4};
        if (is_zero(q.k)) q.k = {1, 0};
        q.alpha = 0.01 + 0.24 * counter_uniform(31, t, 4);
        ResonanceWidth w = resonance_width(lam, q, 0.5, 0.05, sample_frequency(2, 37, t), 4000);
        hyp_fail += !w.hypothesis_ok;
        violations += w.measured > w.bound * (1.0 + 1e-9);
        if (w.bound > 0) worst = std::max(worst, w.measured / w.bound);
        nonempty += w.nonempty;
    }
    return {violations == 0 && hyp_fail == 0,
            fmt("100 queries: %d bound violations, %d hypothesis failures, %d non-empty, max width/bound %.3f",
                violations, hyp_fail, nonempty, worst)};
}

Outcome c9_dynamics() {
    RunConfig cfg = reference_config(1e-3);
    ReduceResult r = reduce(cfg);
    EvolutionRun run;
    run.omega = cfg.omega;
    run.eps = cfg.eps;
    run.T_final = 100.0;
    run.dt = 0.05;
    run.integrator = Integrator::Magnus4;
    run.psi0 = CVector::Zero(cfg.N);
    run.psi0(0) = 1.0;
    run.record_every = 1000000;
    ReducedComparison rc = reduced_compare(run, r.model.lambda_v, r.model.W, r.kam.A_inf, r.kam.chain);

    const int N = 64;
    EigenBasis basis = solve_h0(PotentialSpec::monomial(1), N);
    RVector lam = Eigen::Map<RVector>(basis.lambda_v.data(), N);
    PhaseSymbol Ws(1);
    Ws.add_real(1, 0, {1}, 0.5);
    QPOperator W(1, N);
    for (const auto& [k, m] : quantize(Ws, basis)) W.set(k, m);
    NormTrace tr[2];
    const double omegas[2] = {kGolden, 2.0};
    double t5 = -1.0;
    for (int i = 0; i < 2; ++i) {
        EvolutionRun e;
        e.omega = {omegas[i]};
        e.eps = 1e-2;
        e.T_final = 1000 * 2 * M_PI / omegas[i];
        e.dt = 0.1;
        e.integrator = Integrator::Magnus4;
        e.psi0 = CVector::Zero(N);
        e.psi0(0) = 1.0;
        e.record_every = 10;
        tr[i] = evolve(e, lam, W);
    }
    const double h0 = tr[1].h1.front();
    for (std::size_t i = 0; i < tr[1].t.size(); ++i)
        if (tr[1].h1[i] >= 5.0 * h0) {
            t5 = tr[1].t[i];
            break;
        }
    const bool growth_clean = t5 >= 0 && (!tr[1].leakage_flag || t5 <= tr[1].leakage_time);
    const bool ok = rc.max_discrepancy <= 1e-6 && tr[0].max_h1_ratio <= 2.0 && tr[1].max_h1_ratio >= 5.0 && growth_clean &&
                    !tr[0].leakage_flag;
    return {ok, fmt("reduced vs full, t <= 100: %.2e <= 1e-6; 1000 periods, N=64, eps=1e-2: H1 ratio %.4f <= 2 at "
                    "golden omega, %.2f >= 5 at omega=2 (5x reached at t=%.0f, truncation leakage from t=%.0f)",
                    rc.max_discrepancy, tr[0].max_h1_ratio, tr[1].max_h1_ratio, t5, tr[1].leakage_time)};
}

Outcome c10_finite_smoothness() {
    const int N = 16;
    const double ell = 8.0;
    RVector A0(N);
    for (int j = 0; j < N; ++j) A0(j) = 2 * j + 1;
    QPOperator R0(1, N);
    for (int k = 0; k <= 8; ++k) {
        CMatrix B = random_matrix(N, 11, k, 2.0);
        B /= B.operatorNorm();
        const double a = std::pow(1.0 + k, -(ell + 2));
        if (k == 0)
            R0.set({0}, 0.5 * a * (B + B.adjoint()));
        else
            R0.set_pair({k}, a * B);
    }
    SmoothnessConfig sc;
    sc.eps = 1e-3;
    sc.ell = ell;
    sc.m = 1;
    sc.kam.Kmax = 8;
    sc.kam.tau = 1.5;
    sc.kam.gamma0 = 0.1;
    sc.kam.floor = 1e-13;
    SmoothnessRun run = finite_smoothness_loop(A0, R0, {kGolden}, sc);
    bool inc_ok = true, chain_ok = true, geometric = true;
    double max_q = 0.0, max_res = 0.0;
    for (std::size_t i = 0; i < run.stages.size(); ++i) {
        const auto& s = run.stages[i];
        inc_ok = inc_ok && s.increment_ok;
        chain_ok = chain_ok && s.chain_ok;
        max_res = std::max(max_res, s.residual);
        if (i > 0 && run.stages[i - 1].increment_norm > 0 && s.increment_norm > 0) {
            const double q = s.increment_norm / run.stages[i - 1].increment_norm;
            max_q = std::max(max_q, q);
            geometric = geometric && q < 1.0;
        }
    }
    const int n = static_cast<int>(run.stages.size());
    const bool ok = run.converged && n <= 8 && inc_ok && chain_ok && geometric;
    return {ok, fmt("%d stages (<= 8), converged %d; increments within bound %d, chain within bound %d; max increment "
                    "ratio %.3e < 1; max residual %.2e",
                    n, run.converged, inc_ok, chain_ok, max_q, max_res)};
}

} // namespace

int main(int argc, char** argv) {
    const std::function<Outcome()> criteria[] = {c1_asymptotics, c2_harmonic, c3_homological,   c4_lemmas,
                                                 c5_quadratic,   c6_deviation, c7_measure,      c8_resonance,
                                                 c9_dynamics,    c10_finite_smoothness};
    int only = argc > 1 ? std::atoi(argv[1]) : 0;
    int failures = 0;
    for (int i = 1; i <= 10; ++i) {
        if (only && i != only) continue;
        Outcome o;
        auto t0 = std::chrono::steady_clock::now();
        try {
            o = criteria[i - 1]();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        std::printf("criterion %2d: %s  %s [%.1f s]\n", i, o.pass ? "PASS" : "FAIL", o.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
        failures += !o.pass;
    }
    return failures ? 1 : 0;
}
