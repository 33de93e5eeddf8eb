#include "kamred/diophantine.hpp"
#include "kamred/error.hpp"
#include "kamred/kam.hpp"
#include "kamred/lemmas.hpp"
#include "kamred/parallel.hpp"
#include "oracles.hpp"

#include <Eigen/Eigenvalues>
#include <doctest.h>

using namespace kamred;

namespace {

const double kPi = 3.14159265358979323846;
const double kGolden = 1.6180339887498949;

RVector harmonic(int N) {
    RVector A(N);
    for (int j = 0; j < N; ++j) A(j) = j + 0.5;
    return A;
}

CMatrix hermitian_random(int N, std::uint64_t seed) {
    CMatrix B = random_matrix(N, seed, 0);
    CMatrix H = 0.5 * (B + B.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(H);
    return H / es.eigenvalues().cwiseAbs().maxCoeff();
}

// exp(i s X) for Hermitian X through its eigendecomposition.
CMatrix exp_herm(const CMatrix& X, double s) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(X);
    CVector ph(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) ph(i) = std::polar(1.0, s * es.eigenvalues()(i));
    return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

std::vector<double> shift(const std::vector<double>& phi, const std::vector<double>& w, double h) {
    std::vector<double> out(phi);
    for (std::size_t m = 0; m < phi.size(); ++m) out[m] += h * w[m];
    return out;
}

} // namespace

TEST_SUITE("kamcore") {

TEST_CASE("analytic norms") {
    SUBCASE("single k = 0 mode") {
        QPOperator P(2, 6);
        CMatrix H = hermitian_random(6, 1);
        P.set({0, 0}, H);
        CHECK(analytic_norm(P, 0.7, {1.0, 0.5}) == doctest::Approx(weighted_operator_norm(H, {1.0, 0.5})).epsilon(1e-14));
    }
    SUBCASE("r = 0 and the grid variant") {
        QPOperator P = random_selfadjoint(2, 8, 2, 3);
        double sum = 0.0;
        for (const auto& [k, m] : P.modes()) sum += weighted_operator_norm(m, {});
        CHECK(analytic_norm(P, 0.0) == doctest::Approx(sum).epsilon(1e-14));
        CHECK(analytic_norm_grid(P, 0.0, 16) <= analytic_norm(P, 0.0) * (1 + 1e-12));
    }
    SUBCASE("random two-mode operator against a 65-angle grid") {
        for (std::uint64_t s = 0; s < 5; ++s) {
            QPOperator P(1, 8);
            P.set({0}, hermitian_random(8, 40 + s));
            P.set_pair({1}, random_matrix(8, 50 + s, 0));
            double grid = 0.0;
            for (int a = 0; a < 65; ++a)
                for (double sg : {-1.0, 1.0}) {
                    // P(theta + i sg r) through the Fourier modes
                    const double r = 0.3, th = 2 * kPi * a / 65;
                    CMatrix M = CMatrix::Zero(8, 8);
                    for (const auto& [k, m] : P.modes()) M += std::exp(cplx(-sg * r * k[0], th * k[0])) * m;
                    grid = std::max(grid, weighted_operator_norm(M, {}));
                }
            const double sur = analytic_norm(P, 0.3);
            CHECK(sur >= grid * (1 - 1e-12));
            CHECK(sur / grid <= static_cast<double>(P.modes().size()));
            CHECK(analytic_norm_grid(P, 0.3, 64) == doctest::Approx(grid).epsilon(1e-10));
        }
    }
}

TEST_CASE("Lipschitz norms") {
    QPOperator B = random_selfadjoint(2, 6, 1, 4);
    SUBCASE("frequency independent") {
        std::vector<std::pair<std::vector<double>, QPOperator>> fam{{{1.2, 1.3}, B}, {{1.5, 1.7}, B}, {{1.9, 1.1}, B}};
        CHECK(lipschitz_norm(fam, 0.2) == 0.0);
    }
    SUBCASE("linear in omega_1") {
        std::vector<std::pair<std::vector<double>, QPOperator>> fam;
        for (double w : {1.1, 1.4, 1.9}) fam.push_back({{w, 1.5}, B * cplx(w, 0.0)});
        CHECK(lipschitz_norm(fam, 0.2) == doctest::Approx(analytic_norm(B, 0.2)).epsilon(1e-12));
    }
    SUBCASE("smooth random family, exhaustive pair scan") {
        QPOperator C = random_selfadjoint(2, 6, 1, 5);
        std::vector<std::pair<std::vector<double>, QPOperator>> fam;
        for (std::uint64_t i = 0; i < 5; ++i) {
            auto w = sample_frequency(2, 8, i);
            fam.push_back({w, B * cplx(std::sin(w[0]), 0.0) + C * cplx(w[0] * w[1], 0.0)});
        }
        double best = 0.0;
        for (std::size_t a = 0; a < fam.size(); ++a)
            for (std::size_t b = a + 1; b < fam.size(); ++b) {
                const double dw = std::hypot(fam[a].first[0] - fam[b].first[0], fam[a].first[1] - fam[b].first[1]);
                best = std::max(best, analytic_norm(fam[a].second - fam[b].second, 0.2) / dw);
            }
        CHECK(lipschitz_norm(fam, 0.2) == doctest::Approx(best).epsilon(1e-12));
    }
    SUBCASE("degenerate samples") {
        std::vector<std::pair<std::vector<double>, QPOperator>> fam{{{1.2, 1.3}, B}, {{1.2, 1.3}, B}};
        CHECK_THROWS_AS(lipschitz_norm(fam, 0.2), Error);
    }
}

TEST_CASE("diagonal Hamiltonian constants") {
    auto st = frequency_stencil({1.5, 1.5}, 0.01);
    CHECK(st.size() == 5);
    DiagonalHamiltonian D;
    D.d = 1.0;
    D.omegas = st;
    for (const auto& w : st) {
        RVector l = harmonic(6);
        for (int j = 0; j < 6; ++j) l(j) += 0.01 * std::sin((j + 1) * w[0]);
        D.lambdas.push_back(l);
    }
    CHECK(D.measured_gap() >= 0.98);
    CHECK(D.measured_lipschitz() <= 0.1);
    D.K0 = 2.0;
    CHECK_THROWS_AS(D.validate(), Error);
}

TEST_CASE("prediagonalization") {
    const int N = 32;
    DiagonalHamiltonian L = DiagonalHamiltonian::single(harmonic(N), {kGolden}, 1.0);
    SUBCASE("diagonal Ra") {
        CMatrix Ra = CMatrix::Zero(N, N);
        for (int j = 0; j < N; ++j) Ra(j, j) = std::cos(j);
        PrediagResult r = prediagonalize(L, Ra, 1e-2, 0.0);
        CHECK((r.U1[0] - CMatrix::Identity(N, N)).cwiseAbs().maxCoeff() == 0.0);
        for (int j = 0; j < N; ++j) CHECK(r.lambda0.lambdas[0](j) == doctest::Approx(j + 0.5 + 1e-2 * std::cos(j)).epsilon(1e-15));
    }
    SUBCASE("Ra = 0") {
        PrediagResult r = prediagonalize(L, CMatrix::Zero(N, N), 1e-2, 0.0);
        CHECK((r.U1[0] - CMatrix::Identity(N, N)).cwiseAbs().maxCoeff() == 0.0);
        CHECK((r.lambda0.lambdas[0] - harmonic(N)).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("random Ra against a dense eigensolver") {
        CMatrix Ra = hermitian_random(N, 7);
        const double eps = 1e-2;
        PrediagResult r = prediagonalize(L, Ra, eps, 0.0);
        const auto& h = r.offdiag_history;
        REQUIRE(h.size() >= 3);
        // quadratic contraction: log h_{l+1} / log h_l slope about 2 while above the tolerance
        for (std::size_t i = 1; i + 1 < h.size(); ++i) {
            if (h[i + 1] <= 1e-12) continue;
            const double slope = (std::log(h[i + 1]) - std::log(h[i])) / (std::log(h[i]) - std::log(h[i - 1]));
            MESSAGE("prediag slope " << slope);
            CHECK(slope >= 1.8);
            CHECK(slope <= 2.2);
        }
        CMatrix H = harmonic(N).cast<cplx>().asDiagonal();
        H += eps * Ra;
        Eigen::SelfAdjointEigenSolver<CMatrix> es(H);
        RVector mine = r.lambda0.lambdas[0];
        std::sort(mine.data(), mine.data() + N);
        CHECK((mine - es.eigenvalues()).cwiseAbs().maxCoeff() <= 1e-10);
        CMatrix U = r.U1[0];
        CHECK((U.adjoint() * U - CMatrix::Identity(N, N)).cwiseAbs().maxCoeff() <= 1e-12);
        CMatrix D = U.adjoint() * H * U;
        D.diagonal().setZero();
        CHECK(D.cwiseAbs().maxCoeff() <= 1e-11);
    }
    SUBCASE("guard") {
        CHECK_THROWS_AS(prediagonalize(L, hermitian_random(N, 2), 0.5, 0.0), Error);
    }
}

TEST_CASE("quantum homological equation") {
    SUBCASE("diagonal phi-independent P") {
        QPOperator P(1, 4);
        CMatrix D = CMatrix::Zero(4, 4);
        D.diagonal() << 1.0, 2.0, 3.0, 4.0;
        P.set({0}, D);
        QuantumHomSolution s = quantum_homological(harmonic(4), P, {kGolden}, {}, 4);
        CHECK(s.X.max_abs() == 0.0);
        CHECK(s.average(2) == 3.0);
    }
    SUBCASE("two-level example") {
        RVector lam(2);
        lam << 1.0, 2.5;
        QPOperator P(1, 2);
        CMatrix P1 = CMatrix::Zero(2, 2);
        P1(0, 1) = 1.0;
        P.set_pair({1}, P1);
        QuantumHomSolution s = quantum_homological(lam, P, {1.3}, {}, 1);
        CHECK(std::abs(s.X.mode({1})(0, 1) - cplx(0.0, 5.0)) <= 1e-12);
        CHECK(s.residual <= 1e-12);
    }
    SUBCASE("random N = 16, n = 2 residual at 16 angles") {
        const std::vector<double> om{std::sqrt(2.0), kGolden};
        QPOperator P = random_selfadjoint(2, 16, 3, 21);
        RVector lam = harmonic(16);
        QuantumHomSolution s = quantum_homological(lam, P, om, {1e-3, 2.5, 1.0}, 3);
        QPOperator Xd = s.X.phase_derivative(om);
        const double pn = analytic_norm(P, 0.0);
        for (int a = 0; a < 16; ++a) {
            std::vector<double> phi{counter_uniform(5, a, 0) * 2 * kPi, counter_uniform(5, a, 1) * 2 * kPi};
            CMatrix X = oracle::sum_modes(s.X, phi), Pv = oracle::sum_modes(P, phi);
            // finite-difference derivative along the flow as an independent check of phase_derivative
            const double h = 1e-5;
            CMatrix Xdot = (oracle::sum_modes(s.X, shift(phi, om, h)) - oracle::sum_modes(s.X, shift(phi, om, -h))) / (2 * h);
            CHECK((Xdot - oracle::sum_modes(Xd, phi)).cwiseAbs().maxCoeff() <= 1e-6);
            CMatrix A = lam.cast<cplx>().asDiagonal();
            CMatrix R = cplx(0, -1) * (A * X - X * A) - oracle::sum_modes(Xd, phi) + Pv;
            R.diagonal() -= P.average_diagonal().cast<cplx>();
            CHECK(R.cwiseAbs().maxCoeff() <= 1e-10 * pn);
        }
        for (const auto& [k, m] : s.X.modes())
            if (is_zero(k)) CHECK(m.diagonal().cwiseAbs().maxCoeff() == 0.0);
        CHECK(s.X.selfadjoint_defect() <= 1e-14);
    }
    SUBCASE("divisor violation names the triple") {
        QPOperator P = random_selfadjoint(1, 4, 1, 2);
        RVector lam(4);
        lam << 1.0, 3.0, 5.0, 7.0;
        try {
            quantum_homological(lam, P, {2.0}, {0.01, 1.5, 1.0}, 1);
            FAIL("expected a resonance");
        } catch (const Error& e) {
            CHECK(e.code() == "resonance");
            CHECK(std::string(e.what()).find("(i,j,k)") != std::string::npos);
        }
    }
}

TEST_CASE("Y_X correction") {
    const std::vector<double> om{kGolden};
    TorusGrid grid = TorusGrid::for_kmax(1, 2);
    SUBCASE("phi-independent X") {
        QPOperator X(1, 4);
        X.set({0}, 0.1 * hermitian_random(4, 3));
        YCorrection y = y_correction(X, om, grid);
        for (const auto& m : y.samples) CHECK(m.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("commuting family") {
        CMatrix B = 0.1 * hermitian_random(4, 4);
        QPOperator X(1, 4);
        X.set({0}, B);
        X.set_pair({1}, 0.3 * B);
        YCorrection y = y_correction(X, om, grid);
        QPOperator Xd = X.phase_derivative(om);
        for (std::size_t i = 0; i < grid.size(); ++i)
            CHECK((y.samples[i] - Xd.evaluate(grid.angle(i))).cwiseAbs().maxCoeff() <= 1e-13);
    }
    SUBCASE("finite-difference Duhamel oracle") {
        // d/dt e^{iX(phi + omega t)} = i Y_X e^{iX}
        QPOperator X = random_selfadjoint(1, 6, 2, 9);
        X *= cplx(0.1 / analytic_norm(X, 0.0), 0.0);
        YCorrection y = y_correction(X, om, grid);
        CHECK(y.change <= 1e-10);
        const double h = 1e-5;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const auto& phi = grid.angle(i);
            CMatrix dU = (exp_herm(X.evaluate(shift(phi, om, h)), 1.0) - exp_herm(X.evaluate(shift(phi, om, -h)), 1.0)) / (2 * h);
            CMatrix Y = cplx(0, -1) * dU * exp_herm(X.evaluate(phi), -1.0);
            CHECK((Y - y.samples[i]).cwiseAbs().maxCoeff() <= 1e-8);
        }
    }
}

TEST_CASE("Lie transform") {
    TorusGrid grid = TorusGrid::for_kmax(1, 3);
    QPOperator F = random_selfadjoint(1, 8, 1, 31);
    SUBCASE("X = 0") {
        LieResult r = lie_transform(F, QPOperator(1, 8), grid, 3);
        CHECK((r.projected - F).max_abs() <= 1e-14);
    }
    SUBCASE("scalar F") {
        QPOperator S(1, 8);
        S.set({0}, 2.5 * CMatrix::Identity(8, 8));
        QPOperator X = random_selfadjoint(1, 8, 1, 32);
        X *= cplx(0.1 / analytic_norm(X, 0.0), 0.0);
        LieResult r = lie_transform(S, X, grid, 3);
        CHECK((r.projected - S).max_abs() <= 1e-13);
    }
    SUBCASE("random pairs: bound, unitarity and spectra") {
        for (std::uint64_t s = 0; s < 5; ++s) {
            QPOperator X = random_selfadjoint(1, 8, 1, 60 + s);
            X *= cplx(0.3 / analytic_norm(X, 0.0), 0.0);
            LieResult r = lie_transform(F, X, grid, 3);
            CHECK(r.unitarity_defect <= 1e-12);
            for (std::size_t i = 0; i < grid.size(); ++i) {
                CMatrix Fv = F.evaluate(grid.angle(i));
                CHECK(weighted_operator_norm(CMatrix(r.samples[i] - Fv), {}) <=
                      4.0 * weighted_operator_norm(X.evaluate(grid.angle(i)), {}) * weighted_operator_norm(Fv, {}));
                Eigen::SelfAdjointEigenSolver<CMatrix> e1(Fv), e2(CMatrix(0.5 * (r.samples[i] + r.samples[i].adjoint())));
                CHECK((e1.eigenvalues() - e2.eigenvalues()).cwiseAbs().maxCoeff() <= 1e-9);
            }
        }
    }
    SUBCASE("unitary exponential") {
        double defect = 1.0;
        CMatrix U = unitary_exp(hermitian_random(12, 5), 0.7, &defect);
        CHECK(defect <= 1e-12);
        CHECK((U - exp_herm(hermitian_random(12, 5), 0.7)).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SUBCASE("guard") {
        QPOperator X = random_selfadjoint(1, 8, 1, 3);
        X *= cplx(1.0 / analytic_norm(X, 0.0), 0.0);
        CHECK_THROWS_AS(check_lie_guard(X, "test"), Error);
    }
}

TEST_CASE("squaring step") {
    const std::vector<double> om{std::sqrt(2.0), kGolden};
    const int N = 32;
    StepParams sp;
    sp.r = 0.5;
    sp.sigma = 0.1;
    sp.K = 3;
    sp.Kmax = 3;
    TorusGrid grid = TorusGrid::for_kmax(2, sp.Kmax);
    SUBCASE("diagonal phi-independent P is a fixed point") {
        QPOperator P(2, N);
        CMatrix D = CMatrix::Zero(N, N);
        for (int j = 0; j < N; ++j) D(j, j) = 1e-3 * std::sin(j);
        P.set({0, 0}, D);
        StepResult r = kam_step(harmonic(N), P, om, sp, grid);
        CHECK(r.P_plus.max_abs() <= 1e-15);
        for (int j = 0; j < N; ++j) CHECK(r.A_plus(j) == j + 0.5 + 1e-3 * std::sin(j));
    }
    SUBCASE("quadratic law and eigenvalue shift") {
        QPOperator P = random_selfadjoint(2, N, 2, 77, true, 2.0);
        P *= cplx(1e-3 / analytic_norm(P, 0.0), 0.0);
        StepResult r1 = kam_step(harmonic(N), P, om, sp, grid);
        StepResult r2 = kam_step(harmonic(N), P * cplx(2.0, 0.0), om, sp, grid);
        const double ratio = r2.diag.eps_out / r1.diag.eps_out;
        CHECK(ratio >= 3.5);
        CHECK(ratio <= 4.5);
        RVector shift = r1.A_plus - harmonic(N);
        CHECK((shift - P.mode({0, 0}).diagonal().real()).cwiseAbs().maxCoeff() <= 1e-14);
        CHECK(r1.diag.hom_residual <= 1e-10 * analytic_norm(P, 0.0));
        CHECK(r1.P_plus.selfadjoint_defect() <= 1e-12);
    }
}

TEST_CASE("iterative scheme") {
    const std::vector<double> om{std::sqrt(2.0), kGolden};
    KamConfig cfg;
    cfg.gamma0 = 0.5;
    cfg.tau = 2.5;
    cfg.Kmax = 3;
    cfg.floor = 1e-13;
    auto odd = [](int N) {
        RVector A(N);
        for (int j = 0; j < N; ++j) A(j) = 2.0 * j + 1.0;
        return A;
    };
    SUBCASE("P0 = 0 converges immediately") {
        KamRun run = run_kam(odd(16), QPOperator(2, 16), om, cfg);
        CHECK(run.converged);
        CHECK((run.A_inf - odd(16)).cwiseAbs().maxCoeff() == 0.0);
        CHECK(run.chain.generators.empty());
    }
    SUBCASE("small P0: superexponential ledger, divisor bookkeeping and conjugation") {
        const int N = 16;
        QPOperator P = random_selfadjoint(2, N, 1, 5, true, 2.0);
        P *= cplx(2e-2 / analytic_norm(P, 0.0), 0.0);
        KamRun run = run_kam(odd(N), P, om, cfg);
        CHECK(run.converged);
        std::vector<double> e;
        for (const auto& row : run.ledger) {
            if (row.above_floor) e.push_back(row.eps1_measured);
            CHECK(row.min_divisor >= 0.0);
            CHECK(row.sigma_l > 0.0);
        }
        for (std::size_t i = 1; i < run.ledger.size(); ++i) {
            CHECK(run.ledger[i].r_l < run.ledger[i - 1].r_l);
            CHECK(run.ledger[i].r_l >= cfg.theta * cfg.r);
            CHECK(run.ledger[i].gamma_l <= run.ledger[i - 1].gamma_l);
        }
        REQUIRE(e.size() >= 3);
        for (std::size_t i = 1; i < e.size(); ++i) CHECK(e[i] < e[i - 1]);
        // -log eps grows by at least a factor 1.7 per stage
        for (std::size_t i = 1; i < e.size(); ++i) {
            CHECK(-std::log(e[i]) >= 1.7 * -std::log(e[i - 1]));
        }
        TorusGrid grid = TorusGrid::for_kmax(2, cfg.Kmax);
        double res = conjugation_residual(odd(N), P, run.chain.samples(grid), om, run.A_inf, grid);
        // the only loss is the Fourier projection of the nonlinear terms
        double tails = 0.0;
        for (const auto& row : run.ledger) tails += row.projection_tail;
        CHECK(res <= tails + 1e-12);
    }
    SUBCASE("planted resonance yields a certificate") {
        RVector A = odd(8);
        QPOperator P = random_selfadjoint(1, 8, 1, 3);
        P *= cplx(1e-3 / analytic_norm(P, 0.0), 0.0);
        KamConfig c = cfg;
        c.tau = 1.5;
        c.gamma0 = 0.1;
        try {
            run_kam(A, P, {2.0}, c);
            FAIL("expected a resonance certificate");
        } catch (const Error& e) {
            CHECK(e.code() == "resonance");
            CHECK(std::string(e.what()).find("(i,j,k)") != std::string::npos);
        }
    }
}

TEST_CASE("smoothing operator") {
    CHECK(smoothing_multiplier(0.0) == 1.0);
    CHECK(smoothing_multiplier(0.5) == 1.0);
    CHECK(smoothing_multiplier(1.0) == 0.0);
    CHECK(smoothing_multiplier(0.75) > 0.0);
    CHECK(smoothing_multiplier(0.75) < 1.0);
    QPOperator P0(1, 4);
    P0.set({0}, hermitian_random(4, 1));
    for (double r : {0.01, 0.3, 1.0}) CHECK((smoothing_operator(P0, r) - P0).max_abs() == 0.0);
    QPOperator P10(1, 4);
    P10.set_pair({10}, random_matrix(4, 2, 0));
    CHECK(smoothing_operator(P10, 1.0).max_abs() == 0.0);
    CHECK((smoothing_operator(P10, 0.01) - P10).max_abs() == 0.0);
    QPOperator R = random_selfadjoint(1, 4, 6, 9);
    CHECK((smoothing_operator(R, 1e-4) - R).max_abs() == 0.0);
    CHECK_THROWS_AS(smoothing_operator(R, 0.0), Error);
    CHECK_THROWS_AS(smoothing_operator(R, 1.5), Error);
}

TEST_CASE("finite smoothness loop") {
    const int N = 16;
    RVector A0(N);
    for (int j = 0; j < N; ++j) A0(j) = 2.0 * j + 1.0;
    SmoothnessConfig sc;
    sc.eps = 1e-3;
    sc.ell = 8.0;
    sc.m = 1.0;
    sc.kam.Kmax = 8;
    sc.kam.tau = 1.5;
    sc.kam.gamma0 = 0.1;
    sc.kam.floor = 1e-13;
    const std::vector<double> om{kGolden};
    SUBCASE("phi-independent R0") {
        QPOperator R0(1, N);
        R0.set({0}, hermitian_random(N, 3));
        SmoothnessRun run = finite_smoothness_loop(A0, R0, om, sc);
        REQUIRE(!run.stages.empty());
        for (std::size_t i = 1; i < run.stages.size(); ++i) CHECK(run.stages[i].increment_norm == 0.0);
        CHECK(run.converged);
    }
    SUBCASE("synthetic finite-smoothness data") {
        QPOperator R0(1, N);
        for (int k = 0; k <= 8; ++k) {
            CMatrix B = random_matrix(N, 11, k, 2.0);
            B /= B.operatorNorm();
            const double a = std::pow(1.0 + k, -(sc.ell + 2));
            if (k == 0) R0.set({0}, 0.5 * a * (B + B.adjoint()));
            else R0.set_pair({k}, a * B);
        }
        SmoothnessRun run = finite_smoothness_loop(A0, R0, om, sc);
        CHECK(run.converged);
        double prev = 0.0;
        for (const auto& st : run.stages) {
            CHECK(st.increment_ok);
            CHECK(st.chain_ok);
            CHECK(st.residual <= 1e-10);
            if (st.nu >= 1) {
                // two-resolution oracle for the increment
                QPOperator inc = (smoothing_operator(R0, st.r_nu) - smoothing_operator(R0, 2.0 * st.r_nu)) * cplx(sc.eps, 0.0);
                CHECK(st.increment_norm == doctest::Approx(analytic_norm(inc, st.r_nu)).epsilon(1e-9));
            }
            if (st.nu >= 2 && prev > 0.0 && st.increment_norm > 0.0) CHECK(st.increment_norm / prev <= std::pow(2.0, -6.0));
            prev = st.increment_norm;
        }
        CHECK(ck_norm(R0, 0.0) <= ck_norm(R0, sc.ell));
    }
}

TEST_CASE("appendix estimates") {
    SUBCASE("rico iteration") {
        auto it = rico_iterate(1.0, 0.0, 0.125, 5);
        CHECK(it[1] == doctest::Approx(1.0 / 64.0).epsilon(1e-15));
        for (int nu = 0; nu <= 4; ++nu) CHECK(it[nu] == doctest::Approx(std::pow(0.125, std::pow(2.0, nu))).epsilon(1e-12));
        const double s0 = 0.5 / (16.0 * 3.0);
        auto it2 = rico_iterate(3.0, 2.0, s0, 9);
        for (int nu = 0; nu <= 8; ++nu) {
            CHECK(std::abs(rico_closed(3.0, 2.0, s0, nu) - it2[nu]) <= 1e-12 * it2[nu]);
            CHECK(rico_closed_printed(1.0, 0.0, 0.125, nu) == doctest::Approx(rico_closed(1.0, 0.0, 0.125, nu)).epsilon(1e-14));
        }
        CHECK(rico_closed_printed(3.0, 2.0, s0, 2) != doctest::Approx(it2[2]));
    }
    SUBCASE("divided matrix on random 32 x 32 matrices") {
        const double bound = kPi / std::sqrt(3.0);
        for (std::uint64_t t = 0; t < 100; ++t) {
            CMatrix P = random_matrix(32, 1234, t, t % 2 ? 3.0 : 0.0);
            CMatrix X = divided_matrix(P);
            for (int i = 0; i < 32; ++i)
                for (int j = 0; j < 32; ++j)
                    CHECK(std::abs(X(i, j)) == doctest::Approx(i == j ? 0.0 : std::abs(P(i, j)) / std::abs(i - j)));
            CHECK(oracle::weighted_norm_svd(X, 1.0, 0.5) <= bound * oracle::weighted_norm_svd(P, 1.0, 0.5));
        }
    }
    SUBCASE("randomized suite") {
        LemmaReport rep = lemma_suite(3, 4);
        CHECK(rep.violations() == 0);
        CHECK(rep.checks.size() >= 7);
        for (const auto& c : rep.checks) CHECK(c.counterexample.is_null());
    }
}

}
