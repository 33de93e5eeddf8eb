#include "kamred/pipeline.hpp"

#include "kamred/classical.hpp"
#include "kamred/error.hpp"
#include "kamred/homological.hpp"
#include "kamred/normal_form.hpp"
#include "kamred/report.hpp"
#include "kamred/weyl.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>

namespace kamred {

QPOperator random_forcing(int n, int N, int kmax, double decay, std::uint64_t seed) {
    QPOperator W(n, N);
    std::uint64_t stream = 0;
    for (const MultiIndex& k : diamond(n, kmax)) {
        if (is_zero(k) || k < negate(k)) continue;
        CMatrix B = random_matrix(N, seed, stream++, decay);
        B /= weighted_operator_norm(B, SobolevFrame{});
        W.set_pair(k, std::exp(-(l1(k) - 1.0)) * B);
    }
    return W;
}

Exponents perturbation_exponents(const PhaseSymbol& W, const PotentialSpec& V) {
    Exponents e;
    if (W.empty()) return e;
    e.beta = polynomial_order(W, V.l);
    if (V.l == 1) {
        e.average_vanishes = true;
        const PhaseSymbol wz = to_complex_coordinates(W);
        for (const auto& [key, c] : wz.terms())
            if (key.a == key.b && std::abs(c) > 1e-14 * W.sup_coeff()) e.average_vanishes = false;
    } else {
        const double scale = W.sup_coeff();
        e.average_vanishes = true;
        for (double E : {1.0, 3.0, 9.0, 27.0})
            for (int q = 0; q < 3 && e.average_vanishes; ++q) {
                std::vector<double> phi(W.n(), 2.0 * std::numbers::pi * q / 3.0 + 0.3);
                if (std::abs(average_along_flow(W, V, E, phi)) > 1e-8 * scale * std::pow(E, e.beta)) e.average_vanishes = false;
            }
    }
    e.beta_tilde = e.average_vanishes ? 2.0 * e.beta - 2.0 * V.l : e.beta;
    return e;
}

Model build_model(const RunConfig& cfg) {
    cfg.validate();
    PotentialSpec V = PotentialSpec::monomial(cfg.l);
    EigenBasis basis = solve_h0(V, cfg.N);
    Model m;
    m.lambda_v = Eigen::Map<const RVector>(basis.lambda_v.data(), cfg.N);
    if (cfg.forcing.kind == ForcingConfig::Kind::Random) {
        m.W = random_forcing(cfg.n, cfg.N, cfg.forcing.kmax, cfg.forcing.decay, cfg.seed);
        m.exponents = Exponents{0.0, 0.0, false};
    } else {
        m.W = QPOperator(cfg.n, cfg.N);
        for (auto& [k, mat] : quantize(cfg.forcing.symbol, basis)) m.W.set(k, mat);
        m.exponents = perturbation_exponents(cfg.forcing.symbol, V);
    }
    return m;
}

ReduceResult reduce(const RunConfig& cfg, const Model& model) {
    cfg.validate();
    ReduceResult out;
    out.model = model;
    const int N = cfg.N;
    const double d = 2.0 * cfg.l / (cfg.l + 1.0);
    out.delta = model.exponents.beta_tilde - (cfg.l + 1.0);

    DiagonalHamiltonian Lambda = DiagonalHamiltonian::single(model.lambda_v, cfg.omega, d);
    const MultiIndex zero(cfg.n, 0);
    CMatrix Ra = model.W.mode(zero);
    Ra = 0.5 * (Ra + Ra.adjoint()).eval();
    out.prediag = prediagonalize(Lambda, Ra, cfg.eps, out.delta, cfg.prediag_iters, cfg.prediag_tol);
    const CMatrix& U1 = out.prediag.U1.front();
    const RVector& lambda0 = out.prediag.lambda0.lambdas.front();

    QPOperator P0(cfg.n, N);
    for (const auto& [k, m] : model.W.modes())
        if (!is_zero(k)) P0.set(k, U1.adjoint() * (cfg.eps * m) * U1);

    KamConfig kc = cfg.kam;
    kc.d = d;
    out.kam = run_kam(lambda0, P0, cfg.omega, kc, U1);
    out.deviation = (out.kam.A_inf - model.lambda_v).cwiseAbs();
    return out;
}

ReduceResult reduce(const RunConfig& cfg) { return reduce(cfg, build_model(cfg)); }

std::string ReduceResult::ledger_csv() const {
    CsvTable t({"stage", "r_l", "sigma_l", "eps1_measured", "eps1_scheduled", "gamma_l", "K_l", "min_divisor", "offdiag_norm"});
    for (const auto& r : kam.ledger)
        t.add_row({static_cast<long long>(r.stage), r.r_l, r.sigma_l, r.eps1_measured, r.eps1_scheduled, r.gamma_l,
                   static_cast<long long>(r.K_l), r.min_divisor, r.offdiag_norm});
    return t.str();
}

nlohmann::json ReduceResult::to_json() const {
    auto vec = [](const RVector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    nlohmann::json j;
    j["lambda_v"] = vec(model.lambda_v);
    j["lambda_inf"] = vec(kam.A_inf);
    j["deviations"] = vec(deviation);
    j["exponents"] = {{"beta", model.exponents.beta},
                      {"beta_tilde", model.exponents.beta_tilde},
                      {"average_vanishes", model.exponents.average_vanishes},
                      {"delta", delta}};
    j["prediag"] = {{"iterations", prediag.iterations},
                    {"offdiag_history", prediag.offdiag_history},
                    {"nu_sup", prediag.nu_sup},
                    {"nu_lipschitz", prediag.nu_lipschitz}};
    nlohmann::json ledger = nlohmann::json::array();
    for (const auto& r : kam.ledger)
        ledger.push_back({{"stage", r.stage},
                          {"r_l", r.r_l},
                          {"sigma_l", r.sigma_l},
                          {"eps1_measured", r.eps1_measured},
                          {"eps1_scheduled", r.eps1_scheduled},
                          {"gamma_l", r.gamma_l},
                          {"K_l", r.K_l},
                          {"min_divisor", r.min_divisor},
                          {"offdiag_norm", r.offdiag_norm},
                          {"x_norm", r.x_norm},
                          {"c_star", r.c_star},
                          {"projection_tail", r.projection_tail},
                          {"above_floor", r.above_floor}});
    j["ledger"] = ledger;
    nlohmann::json gens = nlohmann::json::array();
    for (std::size_t i = 0; i < kam.chain.generators.size(); ++i) {
        const QPOperator& X = kam.chain.generators[i];
        gens.push_back({{"index", i + 1}, {"modes", X.modes().size()}, {"kmax", X.kmax()}, {"norm", analytic_norm(X, 0.0)}});
    }
    const CMatrix& U1 = kam.chain.U1;
    const double u_defect = U1.size() ? (U1.adjoint() * U1 - CMatrix::Identity(U1.rows(), U1.cols())).norm() : 0.0;
    j["chain"] = {{"n", kam.chain.n}, {"U1_unitarity_defect", u_defect}, {"generators", gens}};
    j["kam"] = {{"b", kam.b},
                {"initial_smallness", kam.initial_smallness},
                {"floor", kam.floor},
                {"converged", kam.converged},
                {"stop_reason", kam.stop_reason},
                {"final_remainder", analytic_norm(kam.P_final, 0.0)}};
    return j;
}

RunConfig reference_config(double eps) {
    RunConfig c;
    c.l = 1;
    c.N = 64;
    c.n = 2;
    c.eps = eps;
    c.omega = {std::sqrt(2.0), (1.0 + std::sqrt(5.0)) / 2.0};
    c.seed = 7;
    c.forcing.kind = ForcingConfig::Kind::Random;
    c.forcing.kmax = 1;
    c.forcing.decay = 2.0;
    c.kam.gamma0 = 0.5;
    c.kam.tau = 2.5;
    c.kam.Kmax = 4;
    c.kam.r = 0.5;
    c.kam.theta = 0.5;
    c.kam.floor = 1e-13;
    c.kam.d = 1.0;
    return c;
}

} // namespace kamred
