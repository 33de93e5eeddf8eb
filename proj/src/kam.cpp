#include "kamred/kam.hpp"

#include "kamred/error.hpp"
#include "kamred/parallel.hpp"
#include "kamred/quadrature.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace kamred {

namespace {

double pow_d(int j, double d) { return std::pow(static_cast<double>(j), d); }

double freq_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

CMatrix hermitian_part(const CMatrix& X) { return 0.5 * (X + X.adjoint()); }

// i[X, F]
CMatrix ad(const CMatrix& X, const CMatrix& F) { return cplx(0.0, 1.0) * (X * F - F * X); }

std::vector<double> residual_angle(int a, int n) {
    std::vector<double> phi(n);
    for (int d = 0; d < n; ++d) phi[d] = 2.0 * std::numbers::pi * counter_uniform(0x51a7e, static_cast<std::uint64_t>(a), static_cast<std::uint64_t>(d));
    return phi;
}

Error annotate(const Error& e, const std::string& prefix) {
    std::string what = e.what();
    const std::string head = e.code() + ": ";
    if (what.rfind(head, 0) == 0) what = what.substr(head.size());
    return Error(e.kind(), e.code(), prefix + what);
}

} // namespace

DiagonalHamiltonian DiagonalHamiltonian::single(const RVector& lambda, const std::vector<double>& omega, double d) {
    DiagonalHamiltonian h;
    h.d = d;
    h.omegas.push_back(omega);
    h.lambdas.push_back(lambda);
    return h;
}

double DiagonalHamiltonian::measured_gap() const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& lam : lambdas)
        for (Eigen::Index i = 0; i < lam.size(); ++i)
            for (Eigen::Index j = i + 1; j < lam.size(); ++j) {
                double w = std::abs(pow_d(static_cast<int>(i + 1), d) - pow_d(static_cast<int>(j + 1), d));
                best = std::min(best, std::abs(lam(i) - lam(j)) / w);
            }
    return best;
}

double DiagonalHamiltonian::measured_lipschitz() const {
    double best = 0.0;
    for (std::size_t a = 0; a < samples(); ++a)
        for (std::size_t b = a + 1; b < samples(); ++b) {
            double dw = freq_distance(omegas[a], omegas[b]);
            if (dw == 0.0) throw validation_error("lipschitz", "degenerate frequency samples");
            const RVector diff = lambdas[a] - lambdas[b];
            for (Eigen::Index i = 0; i < diff.size(); ++i)
                for (Eigen::Index j = i + 1; j < diff.size(); ++j) {
                    double w = std::abs(pow_d(static_cast<int>(i + 1), d) - pow_d(static_cast<int>(j + 1), d));
                    best = std::max(best, std::abs(diff(i) - diff(j)) / dw / w);
                }
        }
    return best;
}

void DiagonalHamiltonian::validate() const {
    if (lambdas.empty() || lambdas.size() != omegas.size()) throw validation_error("diagonal", "sample count mismatch");
    for (const auto& l : lambdas)
        if (l.size() != lambdas.front().size()) throw validation_error("diagonal", "ragged eigenvalue samples");
    if (K0 > 0.0 && measured_gap() < K0) throw numerical_error("gap-bound", "measured gap below K0");
    if (K1 > 0.0 && samples() > 1 && measured_lipschitz() > K1)
        throw numerical_error("lipschitz-bound", "measured Lipschitz quotient above K1");
}

std::vector<std::vector<double>> frequency_stencil(const std::vector<double>& center, double h) {
    std::vector<std::vector<double>> out{center};
    const int n = static_cast<int>(center.size());
    for (int mask = 0; mask < (1 << n); ++mask) {
        std::vector<double> w = center;
        for (int d = 0; d < n; ++d) w[d] += ((mask >> d) & 1) ? h : -h;
        out.push_back(w);
    }
    return out;
}

CMatrix unitary_exp(const CMatrix& X, double s, double* defect) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(X));
    if (es.info() != Eigen::Success) throw numerical_error("exp", "eigendecomposition failed");
    const CMatrix& V = es.eigenvectors();
    CVector ph(V.cols());
    for (Eigen::Index i = 0; i < ph.size(); ++i) ph(i) = std::polar(1.0, s * es.eigenvalues()(i));
    CMatrix U = V * ph.asDiagonal() * V.adjoint();
    if (defect) {
        *defect = (U.adjoint() * U - CMatrix::Identity(U.rows(), U.cols())).cwiseAbs().maxCoeff();
        if (*defect > 1e-12) throw numerical_error("unitarity", "exponential unitarity defect " + std::to_string(*defect));
    }
    return U;
}

PrediagResult prediagonalize(const DiagonalHamiltonian& Lambda, const CMatrix& Ra, double eps, double delta,
                             int max_iters, double tol) {
    Lambda.validate();
    const int N = Lambda.N();
    if (Ra.rows() != N || Ra.cols() != N) throw validation_error("prediag", "Ra size mismatch");
    if ((Ra - Ra.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, Ra.cwiseAbs().maxCoeff()))
        throw validation_error("prediag", "Ra is not selfadjoint");
    const double gap = N > 1 ? Lambda.measured_gap() : std::numeric_limits<double>::infinity();
    const double size = std::abs(eps) * weighted_operator_norm(Ra, SobolevFrame{});
    if (size > 0.1 * gap) throw validation_error("prediag", "eps ||Ra|| exceeds 0.1 of the gap constant");

    PrediagResult out;
    out.lambda0 = Lambda;
    for (std::size_t s = 0; s < Lambda.samples(); ++s) {
        const RVector& lp = Lambda.lambdas[s];
        CMatrix H = lp.cast<cplx>().asDiagonal();
        H += eps * Ra;
        CMatrix U = CMatrix::Identity(N, N);
        std::vector<double> hist;
        bool done = false;
        for (int it = 0; it <= max_iters; ++it) {
            RVector D = H.diagonal().real();
            CMatrix O = H;
            O.diagonal().setZero();
            double off = weighted_operator_norm(O, SobolevFrame{});
            hist.push_back(off);
            if (off <= tol) {
                done = true;
                break;
            }
            if (it == max_iters) break;
            CMatrix X = CMatrix::Zero(N, N);
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < N; ++j) {
                    if (i == j) continue;
                    double den = D(i) - D(j);
                    if (std::abs(den) < 1e-300) throw numerical_error("prediag", "degenerate diagonal");
                    X(i, j) = cplx(0.0, -1.0) * O(i, j) / den;
                }
            CMatrix E = unitary_exp(X, 1.0);
            H = E * H * E.adjoint();
            H = hermitian_part(H);
            U = U * E.adjoint();
            if (s == 0) ++out.iterations;
        }
        if (!done) {
            std::ostringstream os;
            os << "off-diagonal history:";
            for (double h : hist) os << ' ' << h;
            throw numerical_error("no-contraction", os.str());
        }
        if (s == 0) out.offdiag_history = hist;
        RVector l0 = H.diagonal().real();
        RVector nu = RVector::Zero(N);
        if (eps != 0.0)
            for (int j = 0; j < N; ++j) nu(j) = (l0(j) - lp(j)) * std::pow(j + 1.0, delta) / eps;
        out.U1.push_back(U);
        out.lambda0.lambdas[s] = l0;
        out.nu.push_back(nu);
        out.nu_sup = std::max(out.nu_sup, nu.cwiseAbs().maxCoeff());
    }
    for (std::size_t a = 0; a < out.nu.size(); ++a)
        for (std::size_t b = a + 1; b < out.nu.size(); ++b) {
            double dw = freq_distance(Lambda.omegas[a], Lambda.omegas[b]);
            if (dw > 0.0) out.nu_lipschitz = std::max(out.nu_lipschitz, (out.nu[a] - out.nu[b]).cwiseAbs().maxCoeff() / dw);
        }
    return out;
}

QuantumHomSolution quantum_homological(const RVector& lambda, const QPOperator& P, const std::vector<double>& omega,
                                       const DivisorBounds& bounds, int K) {
    const int N = P.N();
    const int n = P.n();
    if (lambda.size() != N) throw validation_error("homological", "eigenvalue count does not match P");
    if (static_cast<int>(omega.size()) != n) throw validation_error("homological", "omega dimension mismatch");
    QuantumHomSolution out;
    out.X = QPOperator(n, N);
    out.average = P.average_diagonal();
    out.p_norm = analytic_norm(P, 0.0);
    out.min_divisor = std::numeric_limits<double>::infinity();
    out.min_ratio = std::numeric_limits<double>::infinity();

    for (const auto& k : diamond(n, K)) {
        const double wk = dot(k, omega);
        const double kt = 1.0 + std::pow(static_cast<double>(l1(k)), bounds.tau);
        const bool zero = is_zero(k);
        // divisor condition over every (i, j) at this k, whether or not P_k is stored
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) {
                if (zero && i == j) continue;
                const double div = lambda(i) - lambda(j) + wk;
                const double thr = bounds.gamma * ceil_bracket(pow_d(i + 1, bounds.d) - pow_d(j + 1, bounds.d)) / kt;
                out.min_divisor = std::min(out.min_divisor, std::abs(div));
                if (thr > 0.0) out.min_ratio = std::min(out.min_ratio, std::abs(div) / thr);
                if (std::abs(div) < thr || div == 0.0) {
                    std::ostringstream os;
                    os << "divisor |lambda_i - lambda_j + omega.k| = " << std::abs(div) << " below " << thr
                       << " at (i,j,k) = (" << i + 1 << "," << j + 1 << "," << to_string(k) << ")";
                    throw numerical_error("resonance", os.str());
                }
            }
        if (!P.has(k)) continue;
        const CMatrix& Pk = P.modes().at(k);
        CMatrix Xk(N, N);
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) {
                if (zero && i == j) {
                    Xk(i, j) = 0.0;
                    continue;
                }
                Xk(i, j) = Pk(i, j) / cplx(0.0, lambda(i) - lambda(j) + wk);
            }
        out.X.set(k, Xk);
    }

    const QPOperator Pk = P.truncate(K);
    const QPOperator Xd = out.X.phase_derivative(omega);
    for (int a = 0; a < 16; ++a) {
        const auto phi = residual_angle(a, n);
        CMatrix X = out.X.evaluate(phi);
        CMatrix R = Pk.evaluate(phi) - Xd.evaluate(phi);
        R.diagonal() -= out.average.cast<cplx>();
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) R(i, j) += cplx(0.0, -1.0) * (lambda(i) - lambda(j)) * X(i, j);
        out.residual = std::max(out.residual, weighted_operator_norm(R, SobolevFrame{}));
    }
    if (out.residual > 1e-10 * out.p_norm)
        throw numerical_error("hom-residual", "quantum homological residual " + std::to_string(out.residual));
    if (!std::isfinite(out.min_ratio)) out.min_ratio = 0.0;
    return out;
}

void check_lie_guard(const QPOperator& X, const std::string& where) {
    const double x = analytic_norm(X, 0.0);
    if (x >= std::log(2.0) / 2.0)
        throw numerical_error("lie-guard", where + ": generator norm " + std::to_string(x) + " >= ln2/2");
}

YCorrection y_correction(const QPOperator& X, const std::vector<double>& omega, const TorusGrid& grid, int quad_nodes,
                         double tol) {
    check_lie_guard(X, "y_correction");
    const auto Xs = grid.synthesize(X);
    const auto Xd = grid.synthesize(X.phase_derivative(omega));
    const std::size_t A = grid.size();
    std::vector<CMatrix> V(A), B(A);
    std::vector<RVector> lam(A);
    parallel_chunks(static_cast<std::int64_t>(A), [&](std::int64_t b, std::int64_t e, int) {
        for (std::int64_t a = b; a < e; ++a) {
            Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(Xs[a]));
            V[a] = es.eigenvectors();
            lam[a] = es.eigenvalues();
            B[a] = V[a].adjoint() * Xd[a] * V[a];
        }
    });
    auto evaluate = [&](int q) {
        const GaussRule& rule = gauss_legendre(q);
        std::vector<CMatrix> out(A);
        parallel_chunks(static_cast<std::int64_t>(A), [&](std::int64_t b, std::int64_t e, int) {
            for (std::int64_t a = b; a < e; ++a) {
                const Eigen::Index N = B[a].rows();
                CMatrix W = CMatrix::Zero(N, N);
                for (std::size_t t = 0; t < rule.nodes.size(); ++t) {
                    const double s = 0.5 * (rule.nodes[t] + 1.0), w = 0.5 * rule.weights[t];
                    for (Eigen::Index i = 0; i < N; ++i)
                        for (Eigen::Index j = 0; j < N; ++j)
                            W(i, j) += w * std::polar(1.0, (1.0 - s) * (lam[a](i) - lam[a](j)));
                }
                out[a] = V[a] * B[a].cwiseProduct(W) * V[a].adjoint();
            }
        });
        return out;
    };
    YCorrection y;
    int q = std::max(2, quad_nodes);
    auto cur = evaluate(q);
    while (true) {
        auto fine = evaluate(2 * q);
        double change = 0.0;
        for (std::size_t a = 0; a < A; ++a) change = std::max(change, (fine[a] - cur[a]).cwiseAbs().maxCoeff());
        y.change = change;
        y.nodes = 2 * q;
        y.samples = std::move(fine);
        if (change <= tol) break;
        q *= 2;
        if (q > 1024) throw numerical_error("quadrature", "Y_X quadrature did not converge");
        cur = y.samples;
    }
    return y;
}

LieResult lie_transform(const QPOperator& F, const QPOperator& X, const TorusGrid& grid, int K) {
    check_lie_guard(X, "lie_transform");
    const auto Fs = grid.synthesize(F);
    const auto Xs = grid.synthesize(X);
    LieResult out;
    out.samples.resize(grid.size());
    std::vector<double> defects(grid.size(), 0.0);
    parallel_chunks(static_cast<std::int64_t>(grid.size()), [&](std::int64_t b, std::int64_t e, int) {
        for (std::int64_t a = b; a < e; ++a) {
            CMatrix U = unitary_exp(Xs[a], 1.0, &defects[a]);
            out.samples[a] = U * Fs[a] * U.adjoint();
        }
    });
    for (double d : defects) out.unitarity_defect = std::max(out.unitarity_defect, d);
    auto proj = grid.project(out.samples, K);
    out.projected = std::move(proj.op);
    out.tail = proj.tail;
    return out;
}

StepResult kam_step(const RVector& A, const QPOperator& P, const std::vector<double>& omega, const StepParams& sp,
                    const TorusGrid& grid) {
    const int n = P.n();
    const int N = P.N();
    if (sp.sigma <= 0.0 || sp.sigma >= sp.r) throw validation_error("step", "sigma must lie in (0, r)");
    StepResult out;
    QuantumHomSolution hom = quantum_homological(A, P, omega, sp.bounds, sp.K);
    out.X = hom.X;
    check_lie_guard(out.X, "kam_step");
    out.A_plus = A + hom.average;

    QPOperator Q = P.truncate(sp.K);
    {
        CMatrix q0 = Q.mode(MultiIndex(n, 0));
        q0.diagonal().setZero();
        Q.set(MultiIndex(n, 0), q0);
    }
    const auto Xs = grid.synthesize(out.X);
    const auto Ps = grid.synthesize(P);
    const auto Qs = grid.synthesize(Q);
    std::vector<CMatrix> S(grid.size());
    std::vector<int> terms(grid.size(), 0);
    parallel_chunks(static_cast<std::int64_t>(grid.size()), [&](std::int64_t b, std::int64_t e, int) {
        for (std::int64_t a = b; a < e; ++a) {
            const CMatrix& X = Xs[a];
            CMatrix acc = CMatrix::Zero(N, N);
            const double scale = std::max(Ps[a].norm(), 1e-300);
            CMatrix t = Ps[a];
            int used = 0;
            for (int j = 1; j <= 80; ++j) {
                t = ad(X, t) / static_cast<double>(j);
                acc += t;
                used = j;
                if (t.norm() <= 1e-18 * scale) break;
            }
            CMatrix u = Qs[a];
            for (int j = 1; j <= 80; ++j) {
                u = ad(X, u) / static_cast<double>(j + 1);
                acc -= u;
                used = std::max(used, j);
                if (u.norm() <= 1e-18 * scale) break;
            }
            S[a] = acc;
            terms[a] = used;
        }
    });
    auto proj = grid.project(S, sp.Kmax);
    out.P_plus = std::move(proj.op);
    out.P_plus += P.tail(sp.K);

    auto& dg = out.diag;
    const double b = 2.0 * n + 2.0 * sp.bounds.tau + 1.0;
    dg.eps_in = analytic_norm(P, sp.r, sp.frame);
    dg.eps_out = analytic_norm(out.P_plus, sp.r - sp.sigma, sp.frame);
    dg.x_norm = analytic_norm(out.X, sp.r - sp.sigma, sp.frame);
    dg.c_star = dg.eps_in > 0.0 ? dg.eps_out * std::pow(sp.sigma, b) / (dg.eps_in * dg.eps_in) : 0.0;
    dg.projection_tail = proj.tail;
    dg.min_divisor = hom.min_divisor;
    dg.hom_residual = hom.residual;
    for (int t : terms) dg.series_terms = std::max(dg.series_terms, t);
    return out;
}

CMatrix TransformChain::evaluate(const std::vector<double>& phi) const {
    int N = static_cast<int>(U1.rows());
    if (N == 0 && !generators.empty()) N = generators.front().N();
    CMatrix U = U1.size() ? U1 : CMatrix::Identity(N, N);
    for (const auto& X : generators) U = U * unitary_exp(X.evaluate(phi), -1.0);
    return U;
}

std::vector<CMatrix> TransformChain::samples(const TorusGrid& grid) const {
    int N = static_cast<int>(U1.rows());
    if (N == 0 && !generators.empty()) N = generators.front().N();
    std::vector<CMatrix> out(grid.size(), U1.size() ? U1 : CMatrix::Identity(N, N));
    for (const auto& X : generators) {
        const auto Xs = grid.synthesize(X);
        parallel_chunks(static_cast<std::int64_t>(grid.size()), [&](std::int64_t b, std::int64_t e, int) {
            for (std::int64_t a = b; a < e; ++a) out[a] = out[a] * unitary_exp(Xs[a], -1.0);
        });
    }
    return out;
}

TransformChain TransformChain::truncated(std::size_t count) const {
    TransformChain c = *this;
    if (c.generators.size() > count) c.generators.resize(count);
    return c;
}

KamRun run_kam(const RVector& A0, const QPOperator& P0, const std::vector<double>& omega, const KamConfig& cfg,
               const CMatrix& U1) {
    const int n = P0.n();
    const int N = P0.N();
    if (A0.size() != N) throw validation_error("kam", "A0 size does not match P0");
    if (static_cast<int>(omega.size()) != n) throw validation_error("kam", "omega dimension mismatch");
    if (!(cfg.theta > 0.0 && cfg.theta < 1.0)) throw validation_error("kam", "theta must lie in (0,1)");
    if (!(cfg.r > 0.0)) throw validation_error("kam", "r must be positive");
    if (cfg.Kmax < 1) throw validation_error("kam", "Kmax must be positive");
    if (P0.kmax() > cfg.Kmax) throw validation_error("kam", "P0 has modes beyond Kmax");
    if (P0.selfadjoint_defect() > 1e-12 * std::max(1.0, P0.max_abs()))
        throw validation_error("kam", "P0 is not a selfadjoint family");

    KamRun run;
    run.b = 2.0 * n + 2.0 * cfg.tau + 1.0;
    run.floor = cfg.floor >= 0.0 ? cfg.floor : 100.0 * std::numeric_limits<double>::epsilon() * A0.cwiseAbs().maxCoeff();
    run.chain.n = n;
    run.chain.U1 = U1.size() ? U1 : CMatrix::Identity(N, N);
    run.initial_smallness = analytic_norm(P0, cfg.r, cfg.frame) / std::pow(cfg.r, run.b);
    const TorusGrid grid = TorusGrid::for_kmax(n, cfg.Kmax);

    RVector A = A0;
    QPOperator P = P0;
    double gamma = cfg.gamma0;
    double r_l = cfg.r;
    double prev = std::numeric_limits<double>::infinity();
    std::vector<double> sigmas;
    for (int l = 0;; ++l) {
        LedgerRow row;
        row.stage = l;
        row.r_l = r_l;
        row.sigma_l = (1.0 - cfg.theta) * cfg.r / std::pow(2.0, l + 1);
        row.gamma_l = gamma;
        row.eps1_measured = analytic_norm(P, r_l, cfg.frame);
        {
            QPOperator off = P;
            if (off.has(MultiIndex(n, 0))) {
                CMatrix m = off.mode(MultiIndex(n, 0));
                m.diagonal().setZero();
                off.set(MultiIndex(n, 0), m);
            }
            row.offdiag_norm = analytic_norm(off, 0.0, cfg.frame);
        }
        const double eps1 = row.eps1_measured;
        row.K_l = eps1 >= 1.0 ? 0 : static_cast<int>(std::min<double>(cfg.Kmax, std::floor(std::pow(eps1, -1.0 / (2.0 * cfg.tau)))));
        if (eps1 <= std::max(run.floor, cfg.tol)) {
            row.above_floor = false;
            run.ledger.push_back(row);
            run.converged = true;
            run.stop_reason = eps1 <= run.floor ? "floor reached" : "tolerance reached";
            break;
        }
        if (eps1 >= prev) {
            run.ledger.push_back(row);
            throw numerical_error("schedule-violation", "stage " + std::to_string(l) + ": eps1 did not decrease (" +
                                                            std::to_string(eps1) + " >= " + std::to_string(prev) + ")");
        }
        if (l == cfg.max_stages) {
            run.ledger.push_back(row);
            run.stop_reason = "max stages";
            break;
        }
        if (gamma <= 0.0)
            throw numerical_error("schedule-violation", "stage " + std::to_string(l) + ": gamma exhausted");
        StepParams sp;
        sp.r = r_l;
        sp.sigma = row.sigma_l;
        sp.K = row.K_l;
        sp.Kmax = cfg.Kmax;
        sp.bounds = DivisorBounds{gamma, cfg.tau, cfg.d};
        sp.frame = cfg.frame;
        StepResult step;
        try {
            step = kam_step(A, P, omega, sp, grid);
        } catch (const Error& e) {
            throw annotate(e, "stage " + std::to_string(l) + ": ");
        }
        row.min_divisor = step.diag.min_divisor;
        row.x_norm = step.diag.x_norm;
        row.c_star = step.diag.c_star;
        row.projection_tail = step.diag.projection_tail;
        run.ledger.push_back(row);
        sigmas.push_back(row.sigma_l);
        run.chain.generators.push_back(step.X);
        A = step.A_plus;
        P = step.P_plus;
        gamma -= std::pow(eps1, cfg.d2);
        r_l -= row.sigma_l;
        prev = eps1;
    }
    // scheduled eps1: eps^(l+1) = c3 (eps^(l))^2 / sigma^b with c3 from the first transition
    if (!run.ledger.empty()) {
        run.ledger[0].eps1_scheduled = run.ledger[0].eps1_measured;
        if (run.ledger.size() > 1) {
            const double c3 = run.ledger[0].c_star;
            for (std::size_t l = 1; l < run.ledger.size(); ++l) {
                const double e = run.ledger[l - 1].eps1_scheduled;
                run.ledger[l].eps1_scheduled = c3 * e * e / std::pow(sigmas[l - 1], run.b);
            }
        }
    }
    run.A_inf = A;
    run.P_final = P;
    return run;
}

double conjugation_residual(const RVector& A, const QPOperator& P, const std::vector<CMatrix>& phi_samples,
                            const std::vector<double>& omega, const RVector& lambda, const TorusGrid& grid) {
    const int n = grid.n();
    const auto proj = grid.project(phi_samples, n * (grid.G() / 2));
    const auto dphi = grid.synthesize(proj.op.phase_derivative(omega));
    const auto Ps = grid.synthesize(P);
    std::vector<double> worst(grid.size(), 0.0);
    parallel_chunks(static_cast<std::int64_t>(grid.size()), [&](std::int64_t b, std::int64_t e, int) {
        for (std::int64_t a = b; a < e; ++a) {
            CMatrix H = Ps[a];
            H.diagonal() += A.cast<cplx>();
            const CMatrix& F = phi_samples[a];
            CMatrix R = F.adjoint() * H * F - cplx(0.0, 1.0) * (F.adjoint() * dphi[a]);
            R.diagonal() -= lambda.cast<cplx>();
            worst[a] = weighted_operator_norm(R, SobolevFrame{});
        }
    });
    double m = 0.0;
    for (double w : worst) m = std::max(m, w);
    return m;
}

double smoothing_multiplier(double y) {
    y = std::abs(y);
    if (y <= 0.5) return 1.0;
    if (y >= 1.0) return 0.0;
    auto g = [](double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; };
    const double a = g(1.0 - y), c = g(y - 0.5);
    return a / (a + c);
}

QPOperator smoothing_operator(const QPOperator& P, double r) {
    if (!(r > 0.0 && r <= 1.0)) throw validation_error("smoothing", "r must lie in (0,1]");
    QPOperator out(P.n(), P.N());
    for (const auto& [k, m] : P.modes()) {
        const double mult = smoothing_multiplier(r * l1(k));
        if (mult != 0.0) out.set(k, mult * m);
    }
    return out;
}

double ck_norm(const QPOperator& P, double ell) {
    double s0 = 0.0, s1 = 0.0;
    for (const auto& [k, m] : P.modes()) {
        const double w = weighted_operator_norm(m, SobolevFrame{});
        s0 += w;
        s1 += std::pow(static_cast<double>(l1(k)), ell) * w;
    }
    return std::max(s0, s1);
}

SmoothnessRun finite_smoothness_loop(const RVector& A0, const QPOperator& R0, const std::vector<double>& omega,
                                     const SmoothnessConfig& cfg) {
    const int n = R0.n();
    const double b = 2.0 * n + 2.0 * cfg.kam.tau + 1.0;
    if (!(cfg.ell > cfg.m + b)) throw validation_error("smoothness", "need ell > m + b");
    if (!(cfg.eps > 0.0 && cfg.eps < 1.0)) throw validation_error("smoothness", "eps must lie in (0,1)");
    if (cfg.max_stages < 1) throw validation_error("smoothness", "max_stages must be positive");
    SmoothnessRun run;
    run.M = ck_norm(R0, cfg.ell);
    run.c1 = std::numbers::e;
    run.b1 = cfg.m + n + cfg.kam.tau;
    const double r0 = std::pow(cfg.eps, 1.0 / cfg.ell);
    const TorusGrid grid = TorusGrid::for_kmax(n, cfg.kam.Kmax);
    const int all_modes = n * (grid.G() / 2);
    const int N = R0.N();

    RVector A = A0;
    QPOperator prevR(n, N);
    std::vector<CMatrix> Phi(grid.size(), CMatrix::Identity(N, N));
    double d0 = 0.0;
    for (int nu = 0; nu < cfg.max_stages; ++nu) {
        SmoothnessStage st;
        st.nu = nu;
        st.r_nu = r0 * std::pow(2.0, -nu);
        QPOperator R = smoothing_operator(R0, st.r_nu) * cplx(cfg.eps);
        QPOperator inc = R - prevR;
        st.increment_norm = analytic_norm(inc, st.r_nu, cfg.kam.frame);
        st.increment_bound = run.c1 * cfg.eps * run.M * std::pow(st.r_nu, cfg.ell) * (1.0 + std::pow(2.0, 2.0 * cfg.ell));
        st.increment_ok = nu == 0 || st.increment_norm <= st.increment_bound;
        std::vector<CMatrix> next = Phi;
        if (nu == 0 || st.increment_norm > cfg.increment_tol) {
            QPOperator P = inc;
            if (nu > 0) {
                const auto incs = grid.synthesize(inc);
                std::vector<CMatrix> conj(grid.size());
                for (std::size_t a = 0; a < grid.size(); ++a) conj[a] = Phi[a].adjoint() * incs[a] * Phi[a];
                auto proj = grid.project(conj, cfg.kam.Kmax);
                P = std::move(proj.op);
                P.set(MultiIndex(n, 0), hermitian_part(P.mode(MultiIndex(n, 0))));
            }
            st.conjugated_norm = analytic_norm(P, st.r_nu, cfg.kam.frame);
            KamConfig kc = cfg.kam;
            kc.r = st.r_nu;
            KamRun kr;
            try {
                kr = run_kam(A, P, omega, kc);
            } catch (const Error& e) {
                throw annotate(e, "smoothing stage " + std::to_string(nu) + ": ");
            }
            st.kam_stages = static_cast<int>(kr.chain.generators.size());
            const auto U = kr.chain.samples(grid);
            for (std::size_t a = 0; a < grid.size(); ++a) next[a] = Phi[a] * U[a];
            A = kr.A_inf;
        }
        std::vector<CMatrix> diff(grid.size());
        for (std::size_t a = 0; a < grid.size(); ++a) diff[a] = next[a] - Phi[a];
        st.chain_difference = analytic_norm(grid.project(diff, all_modes).op, st.r_nu, cfg.kam.frame);
        if (nu == 0) {
            d0 = st.chain_difference;
            run.C_U = d0 / (2.0 * std::pow(r0, run.b1));
        }
        st.chain_bound = 2.0 * run.C_U * std::pow(st.r_nu, run.b1);
        st.chain_ok = nu == 0 || st.chain_difference <= st.chain_bound;
        Phi = std::move(next);
        st.residual = conjugation_residual(A0, R, Phi, omega, A, grid);
        run.stages.push_back(st);
        prevR = R;
        if (nu > 0 && st.increment_norm <= cfg.increment_tol) {
            run.converged = true;
            break;
        }
    }
    run.A_inf = A;
    run.phi_samples = std::move(Phi);
    return run;
}

} // namespace kamred
