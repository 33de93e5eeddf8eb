#include "kamred/lemmas.hpp"

#include "kamred/error.hpp"
#include "kamred/kam.hpp"
#include "kamred/parallel.hpp"

#include <cmath>

namespace kamred {

namespace {

constexpr double kLieGuard = 0.6931471805599453 / 2.0;

void record(LemmaCheck& c, double lhs, double rhs, const nlohmann::json& detail) {
    ++c.trials;
    const double ratio = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? INFINITY : 0.0);
    c.max_ratio = std::max(c.max_ratio, ratio);
    if (!(lhs <= rhs)) {
        ++c.violations;
        if (c.counterexample.is_null()) {
            c.counterexample = detail;
            c.counterexample["lhs"] = lhs;
            c.counterexample["rhs"] = rhs;
        }
    }
}

double uni(std::uint64_t seed, std::uint64_t trial, std::uint64_t lane) { return counter_uniform(seed, trial, lane); }

// Scales P so that its surrogate norm at radius r equals target.
QPOperator scaled_to(QPOperator P, double r, double target) {
    const double n = analytic_norm(P, r);
    if (n > 0.0) P *= cplx(target / n);
    return P;
}

// Projection of grid samples onto every grid mode.
QPOperator full_projection(const TorusGrid& grid, const std::vector<CMatrix>& samples) {
    return grid.project(samples, grid.n() * (grid.G() / 2)).op;
}

std::vector<double> random_omega(std::uint64_t seed, std::uint64_t trial, int n) {
    std::vector<double> w(n);
    for (int d = 0; d < n; ++d) w[d] = 1.0 + uni(seed, trial, 100 + d);
    return w;
}

std::vector<CMatrix> lie_minus_identity(const QPOperator& F, const QPOperator& X, const TorusGrid& grid) {
    const auto Fs = grid.synthesize(F);
    const auto Xs = grid.synthesize(X);
    std::vector<CMatrix> out(grid.size());
    for (std::size_t a = 0; a < grid.size(); ++a) {
        CMatrix U = unitary_exp(Xs[a], 1.0);
        out[a] = U * Fs[a] * U.adjoint() - Fs[a];
    }
    return out;
}

} // namespace

int LemmaReport::violations() const {
    int v = 0;
    for (const auto& c : checks) v += c.violations;
    return v;
}

nlohmann::json LemmaReport::to_json() const {
    nlohmann::json j;
    j["seed"] = seed;
    j["violations"] = violations();
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : checks) {
        nlohmann::json e;
        e["name"] = c.name;
        e["trials"] = c.trials;
        e["violations"] = c.violations;
        e["max_ratio"] = c.max_ratio;
        e["counterexample"] = c.counterexample;
        arr.push_back(e);
    }
    j["checks"] = arr;
    return j;
}

std::vector<double> rico_iterate(double c1, double a, double s0, int count) {
    std::vector<double> s{s0};
    for (int nu = 0; nu + 1 < count; ++nu) s.push_back(c1 * std::pow(2.0, a * nu) * s.back() * s.back());
    return s;
}

double rico_closed(double c1, double a, double s0, int nu) {
    return std::pow(std::pow(2.0, a) * c1 * s0, std::pow(2.0, nu)) / (c1 * std::pow(2.0, a * (nu + 1)));
}

double rico_closed_printed(double c1, double a, double s0, int nu) {
    return std::pow(std::pow(2.0, 2.0 * a) * c1 * s0, std::pow(2.0, nu)) / (c1 * std::pow(2.0, a * nu));
}

double rico_cb(double b) {
    double s = 0.0;
    for (int nu = 1; nu < 12; ++nu) s += std::pow(nu, b) * std::pow(0.5, std::pow(2.0, nu) - 1.0);
    return s;
}

CMatrix divided_matrix(const CMatrix& P) {
    CMatrix X = CMatrix::Zero(P.rows(), P.cols());
    for (Eigen::Index i = 0; i < P.rows(); ++i)
        for (Eigen::Index j = 0; j < P.cols(); ++j)
            if (i != j) X(i, j) = std::abs(P(i, j)) / std::abs(static_cast<double>(i - j));
    return X;
}

LemmaCheck check_relie(std::uint64_t seed, int trials) {
    LemmaCheck c{"reLie", 0, 0, 0.0, nullptr};
    const int n = 2, N = 10;
    const TorusGrid grid(n, 25);
    for (int t = 0; t < trials; ++t) {
        const double r = 0.2 + 0.3 * uni(seed, t, 0), sigma = r * (0.1 + 0.4 * uni(seed, t, 1));
        const double target = kLieGuard * (0.05 + 0.93 * uni(seed, t, 2));
        QPOperator X = scaled_to(random_selfadjoint(n, N, 2, seed ^ (1000 + t)), r - sigma, target);
        QPOperator F = random_selfadjoint(n, N, 2, seed ^ (5000 + t));
        const double lhs = analytic_norm(full_projection(grid, lie_minus_identity(F, X, grid)), r - sigma);
        const double rhs = 4.0 * analytic_norm(X, r - sigma) * analytic_norm(F, r);
        record(c, lhs, rhs, {{"trial", t}, {"r", r}, {"sigma", sigma}, {"x_norm", target}});
    }
    return c;
}

LemmaCheck check_relie_lipschitz(std::uint64_t seed, int trials) {
    LemmaCheck c{"reLie.lipschitz", 0, 0, 0.0, nullptr};
    const int n = 2, N = 8;
    const TorusGrid grid(n, 25);
    for (int t = 0; t < trials; ++t) {
        const double r = 0.2 + 0.3 * uni(seed, t, 0), sigma = r * (0.1 + 0.4 * uni(seed, t, 1));
        const auto w0 = random_omega(seed, t, n);
        auto w1 = w0;
        w1[0] += 1e-3;
        const double target = kLieGuard * (0.05 + 0.8 * uni(seed, t, 2));
        QPOperator X0 = scaled_to(random_selfadjoint(n, N, 2, seed ^ (1000 + t)), r - sigma, target);
        QPOperator X1 = scaled_to(random_selfadjoint(n, N, 2, seed ^ (2000 + t)), r - sigma, target * uni(seed, t, 3));
        QPOperator F0 = random_selfadjoint(n, N, 2, seed ^ (5000 + t));
        QPOperator F1 = random_selfadjoint(n, N, 2, seed ^ (6000 + t));
        // affine families in omega_1 over an interval of length 1e-3
        QPOperator Xa = X0, Xb = X0 + X1 * cplx(1e-3), Fa = F0, Fb = F0 + F1 * cplx(1e-3);
        const double xs = std::max(analytic_norm(Xa, r - sigma), analytic_norm(Xb, r - sigma));
        if (xs >= kLieGuard) continue;
        const auto La = lie_minus_identity(Fa, Xa, grid), Lb = lie_minus_identity(Fb, Xb, grid);
        std::vector<CMatrix> d(grid.size());
        for (std::size_t a = 0; a < grid.size(); ++a) d[a] = (Lb[a] - La[a]) / 1e-3;
        const double lhs = analytic_norm(full_projection(grid, d), r - sigma);
        const double fs = std::max(analytic_norm(Fa, r), analytic_norm(Fb, r));
        const double rhs = 4.0 * xs * analytic_norm(F1, r) + 2.0 * analytic_norm(X1, r - sigma) * fs;
        record(c, lhs, rhs, {{"trial", t}, {"r", r}, {"sigma", sigma}});
    }
    return c;
}

LemmaCheck check_estia(std::uint64_t seed, int trials) {
    LemmaCheck c{"estia", 0, 0, 0.0, nullptr};
    const int n = 2, N = 12;
    const TorusGrid grid(n, 25);
    RVector A(N);
    for (int j = 0; j < N; ++j) A(j) = 2.0 * j + 1.0;
    for (int t = 0; t < trials; ++t) {
        const double r = 0.3 + 0.3 * uni(seed, t, 0), sigma = r * (0.05 + 0.2 * uni(seed, t, 1));
        const auto omega = random_omega(seed, t, n);
        QPOperator P = random_selfadjoint(n, N, 2, seed ^ (3000 + t));
        QuantumHomSolution hom;
        try {
            hom = quantum_homological(A, P, omega, DivisorBounds{0.0, 2.5, 1.0}, 2);
        } catch (const Error&) {
            continue;
        }
        const double target = kLieGuard * (0.02 + 0.5 * uni(seed, t, 2));
        const double scale = target / analytic_norm(hom.X, r - sigma);
        P *= cplx(scale);
        QPOperator X = hom.X * cplx(scale);
        const auto Xs = grid.synthesize(X);
        std::vector<CMatrix> rem(grid.size());
        for (std::size_t a = 0; a < grid.size(); ++a) {
            CMatrix U = unitary_exp(Xs[a], 1.0);
            CMatrix Ad = A.cast<cplx>().asDiagonal();
            CMatrix comm = cplx(0.0, 1.0) * (Xs[a] * Ad - Ad * Xs[a]);
            rem[a] = U * Ad * U.adjoint() - Ad - comm;
        }
        const double lhs = analytic_norm(full_projection(grid, rem), r - 2.0 * sigma);
        const double xn = analytic_norm(X, r - sigma);
        const double rhs = 4.0 * xn * (xn / sigma + 2.0 * analytic_norm(P, r - 2.0 * sigma));
        record(c, lhs, rhs, {{"trial", t}, {"r", r}, {"sigma", sigma}, {"omega", omega}});
    }
    return c;
}

LemmaCheck check_estiy(std::uint64_t seed, int trials) {
    LemmaCheck c{"estiy", 0, 0, 0.0, nullptr};
    const int n = 2, N = 8;
    const TorusGrid grid(n, 25);
    for (int t = 0; t < trials; ++t) {
        const double r = 0.3 + 0.3 * uni(seed, t, 0), sigma = r * (0.05 + 0.3 * uni(seed, t, 1));
        const auto omega = random_omega(seed, t, n);
        const double target = kLieGuard * (0.05 + 0.9 * uni(seed, t, 2));
        QPOperator X = scaled_to(random_selfadjoint(n, N, 2, seed ^ (4000 + t)), r - sigma, target);
        const auto Y = y_correction(X, omega, grid, 8, 1e-12);
        const auto Xd = grid.synthesize(X.phase_derivative(omega));
        std::vector<CMatrix> d(grid.size());
        for (std::size_t a = 0; a < grid.size(); ++a) d[a] = Y.samples[a] - Xd[a];
        const double lhs = analytic_norm(full_projection(grid, d), r - 2.0 * sigma);
        const double rhs = 4.0 / sigma * target * target;
        record(c, lhs, rhs, {{"trial", t}, {"r", r}, {"sigma", sigma}, {"omega", omega}});
    }
    return c;
}

LemmaCheck check_estiy_lipschitz(std::uint64_t seed, int trials) {
    LemmaCheck c{"estiy.lipschitz", 0, 0, 0.0, nullptr};
    const int n = 2, N = 8;
    const TorusGrid grid(n, 25);
    const double h = 1e-3;
    for (int t = 0; t < trials; ++t) {
        const double r = 0.3 + 0.3 * uni(seed, t, 0), sigma = r * (0.05 + 0.3 * uni(seed, t, 1));
        const auto w0 = random_omega(seed, t, n);
        auto w1 = w0;
        w1[1] += h;
        const double target = kLieGuard * (0.05 + 0.8 * uni(seed, t, 2));
        QPOperator X0 = scaled_to(random_selfadjoint(n, N, 2, seed ^ (7000 + t)), r - sigma, target);
        QPOperator X1 = scaled_to(random_selfadjoint(n, N, 2, seed ^ (8000 + t)), r - sigma, target * uni(seed, t, 3));
        QPOperator Xb = X0 + X1 * cplx(h);
        const double xs = std::max(analytic_norm(X0, r - sigma), analytic_norm(Xb, r - sigma));
        if (xs >= kLieGuard) continue;
        const auto Ya = y_correction(X0, w0, grid, 8, 1e-13), Yb = y_correction(Xb, w1, grid, 8, 1e-13);
        const auto Da = grid.synthesize(X0.phase_derivative(w0)), Db = grid.synthesize(Xb.phase_derivative(w1));
        std::vector<CMatrix> d(grid.size());
        for (std::size_t a = 0; a < grid.size(); ++a) d[a] = ((Yb.samples[a] - Db[a]) - (Ya.samples[a] - Da[a])) / h;
        const double lhs = analytic_norm(full_projection(grid, d), r - 2.0 * sigma);
        const double xl = analytic_norm(X1, r - sigma);
        const double rhs = 6.0 / sigma * xs * xl + 4.0 / sigma * xs * xs;
        record(c, lhs, rhs, {{"trial", t}, {"r", r}, {"sigma", sigma}});
    }
    return c;
}

LemmaCheck check_pos96(std::uint64_t seed, int trials, int N, double s, double kappa) {
    LemmaCheck c{"pos96", 0, 0, 0.0, nullptr};
    const SobolevFrame frame{s, kappa};
    const double bound = 3.14159265358979323846 / std::sqrt(3.0);
    for (int t = 0; t < trials; ++t) {
        // alternate dense, banded and power-law decaying samples
        const double decay = t % 3 == 0 ? 0.0 : (t % 3 == 1 ? 1.5 : 6.0);
        CMatrix P = random_matrix(N, seed ^ 0x9e96ULL, static_cast<std::uint64_t>(t), decay);
        const double pn = weighted_operator_norm(P, frame);
        const double xn = weighted_operator_norm(divided_matrix(P), frame);
        record(c, xn, bound * pn, {{"trial", t}, {"N", N}, {"s", s}, {"kappa", kappa}});
    }
    return c;
}

LemmaCheck check_rico(std::uint64_t seed, int sets) {
    LemmaCheck c{"rico", 0, 0, 0.0, nullptr};
    for (int t = 0; t < sets; ++t) {
        double c1, a, s0;
        if (t == 0) {
            c1 = 1.0, a = 0.0, s0 = 0.125;
        } else if (t == 1) {
            c1 = 3.0, a = 2.0, s0 = 0.5 / (16.0 * 3.0);
        } else {
            c1 = 0.5 + 3.5 * uni(seed, t, 0);
            a = std::floor(4.0 * uni(seed, t, 1));
            const double q = 0.05 + 0.45 * uni(seed, t, 2); // 2^{2a} c1 s0
            s0 = q / (std::pow(4.0, a) * c1);
        }
        const int count = 9;
        const auto it = rico_iterate(c1, a, s0, count);
        nlohmann::json detail = {{"set", t}, {"c1", c1}, {"a", a}, {"s0", s0}};
        double worst = 0.0;
        for (int nu = 0; nu < count; ++nu) {
            if (it[nu] < 1e-280) continue;
            worst = std::max(worst, std::abs(rico_closed(c1, a, s0, nu) - it[nu]) / it[nu]);
        }
        record(c, worst, 1e-12, detail);
        const double q = std::pow(4.0, a) * c1 * s0;
        if (q <= 0.5) {
            std::vector<double> tail(count + 1, 0.0);
            const auto longer = rico_iterate(c1, a, s0, 40);
            for (int k = 0; k < count; ++k) {
                double sum = 0.0;
                for (std::size_t nu = k; nu < longer.size(); ++nu) sum += longer[nu];
                if (longer[k] < 1e-280) continue;
                record(c, sum, 2.0 * longer[k] * (1.0 + 1e-14), detail);
                record(c, sum, 2.0 * std::pow(q, std::pow(2.0, k)) / (c1 * std::pow(2.0, a * k)) * (1.0 + 1e-14), detail);
            }
            for (double b : {0.5, 1.0, 2.0, 3.0}) {
                double sum = 0.0;
                for (std::size_t nu = 0; nu < longer.size(); ++nu) sum += std::pow(static_cast<double>(nu), b) * longer[nu];
                record(c, sum, rico_cb(b) * s0 * (1.0 + 1e-14), detail);
            }
        }
    }
    return c;
}

LemmaReport lemma_suite(std::uint64_t seed, int trials) {
    if (trials < 1) throw validation_error("verify", "trials must be positive");
    LemmaReport rep;
    rep.seed = seed;
    rep.checks.push_back(check_relie(seed, trials));
    rep.checks.push_back(check_relie_lipschitz(seed, std::max(1, trials / 4)));
    rep.checks.push_back(check_estia(seed, std::max(1, trials / 2)));
    rep.checks.push_back(check_estiy(seed, std::max(1, trials / 4)));
    rep.checks.push_back(check_estiy_lipschitz(seed, std::max(1, trials / 4)));
    rep.checks.push_back(check_pos96(seed, trials));
    rep.checks.push_back(check_rico(seed, 20));
    return rep;
}

} // namespace kamred
