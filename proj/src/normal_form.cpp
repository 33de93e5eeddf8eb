#include "kamred/normal_form.hpp"

#include "kamred/error.hpp"
#include "kamred/report.hpp"

#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>

namespace kamred {

namespace {

double factorial(int m) {
    double f = 1.0;
    for (int i = 2; i <= m; ++i) f *= i;
    return f;
}

EnergyProfile h0_profile(const std::vector<cplx>& coeffs, const std::vector<double>& energies, int n) {
    EnergyProfile p;
    p.n = n;
    p.energies = energies;
    CVector v = CVector::Zero(static_cast<Eigen::Index>(energies.size()));
    for (std::size_t e = 0; e < energies.size(); ++e) {
        cplx s = 0.0, pw = 1.0;
        for (cplx c : coeffs) {
            s += c * pw;
            pw *= energies[e];
        }
        v(static_cast<Eigen::Index>(e)) = s;
    }
    p.modes[MultiIndex(n, 0)] = v;
    return p;
}

void split_by_kmax(const PhaseSymbol& p, int K, PhaseSymbol& inside, PhaseSymbol& outside) {
    inside = PhaseSymbol(p.n());
    outside = PhaseSymbol(p.n());
    for (const auto& [key, c] : p.terms())
        (l1(key.k) <= K ? inside : outside).add(key.a, key.b, key.k, c);
}

} // namespace

double polynomial_order(const PhaseSymbol& p, int l) {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& [key, c] : p.terms())
        if (c != cplx(0.0)) m = std::max(m, static_cast<double>(key.a + l * key.b));
    return m;
}

std::pair<PhaseSymbol, double> lie_series(const PhaseSymbol& F, const PhaseSymbol& chi, int max_terms, int shift) {
    PhaseSymbol sum(F.n());
    PhaseSymbol term = F;
    double first = 0.0, last = 0.0;
    for (int m = 1; m <= max_terms; ++m) {
        term = moyal_bracket(term, chi);
        term.prune();
        if (term.empty()) {
            last = 0.0;
            break;
        }
        PhaseSymbol scaled = term * cplx(1.0 / factorial(m + shift));
        last = scaled.sup_coeff();
        if (m == 1) first = last;
        sum += scaled;
        if (last <= 1e-17 * first) break;
        if (m == max_terms) throw numerical_error("non-contraction", "Lie series did not settle in " + std::to_string(max_terms) + " terms");
    }
    return {sum, last};
}

std::string NormalForm::ledger_csv() const {
    CsvTable t({"step", "generator_order", "residual_order", "sup_coeff"});
    for (const auto& s : ledger) t.add_row({static_cast<long long>(s.step), s.generator_order, s.residual_order, s.sup_coeff});
    return t.str();
}

nlohmann::json NormalForm::to_json() const {
    auto profile = [](const EnergyProfile& p) {
        nlohmann::json j;
        j["energies"] = p.energies;
        nlohmann::json modes = nlohmann::json::array();
        for (const auto& [k, v] : p.modes) {
            std::vector<double> re(v.size()), im(v.size());
            for (Eigen::Index i = 0; i < v.size(); ++i) {
                re[i] = v(i).real();
                im[i] = v(i).imag();
            }
            modes.push_back({{"k", k}, {"re", re}, {"im", im}});
        }
        j["modes"] = modes;
        return j;
    };
    nlohmann::json j;
    j["l"] = l;
    j["z"] = profile(z);
    j["ztilde"] = profile(ztilde);
    std::vector<double> zr;
    for (cplx c : ztilde_h0) zr.push_back(c.real());
    j["ztilde_h0"] = zr;
    j["residual"] = kamred::to_json(residual);
    nlohmann::json ch = nlohmann::json::array();
    for (const auto& c : chain) ch.push_back(kamred::to_json(c));
    j["chain"] = ch;
    j["flow_generators"] = flow_chain.size();
    j["torus_generators"] = torus_chain.size();
    nlohmann::json led = nlohmann::json::array();
    for (const auto& s : ledger)
        led.push_back({{"step", s.step},
                       {"generator_order", s.generator_order},
                       {"residual_order", s.residual_order},
                       {"sup_coeff", s.sup_coeff},
                       {"truncation_error", s.truncation_error},
                       {"generator_sup", s.generator_sup},
                       {"solver_residual", s.solver_residual}});
    j["ledger"] = led;
    j["achieved_order"] = achieved_order;
    j["reached_target"] = reached_target;
    return j;
}

NormalForm smoothing_normal_form(const PotentialSpec& V, const PhaseSymbol& W, const std::vector<double>& omega,
                                 double eps, double target_kappa, const NormalFormConfig& cfg) {
    const int n = static_cast<int>(omega.size());
    if (W.n() != n) throw validation_error("normal-form", "symbol and frequency dimensions differ");
    if (cfg.max_steps < 1) throw validation_error("normal-form", "max_steps must be positive");
    const int l = V.l;
    std::vector<double> energies = cfg.energies;
    if (energies.empty())
        for (int e = 1; e <= 32; ++e) energies.push_back(e);

    NormalForm out;
    out.l = l;
    out.residual = PhaseSymbol(n);
    const double m0 = W.empty() ? 0.0 : polynomial_order(W, l);
    out.achieved_order = m0;
    out.z = h0_profile({}, energies, n);
    out.ztilde = out.z;

    if (W.empty() || eps == 0.0) {
        out.reached_target = true;
        return out;
    }

    if (l == 1) {
        if (V.coeffs.size() != 3 || V.coeffs[0] != 0.0 || V.coeffs[1] != 0.0 || V.coeffs[2] != 1.0)
            throw validation_error("normal-form", "the l = 1 branch is written for V = x^2");
        PhaseSymbol R = W * cplx(eps);
        R.order = m0;
        PhaseSymbol Z(n);
        Z.order = 2.0;
        for (int step = 1; step <= cfg.max_steps; ++step) {
            PhaseSymbol Rs(n), Rtail(n);
            split_by_kmax(R, cfg.Kmax, Rs, Rtail);
            MixedHomSolution sol = solve_hom_mixed(Rs, omega, cfg.gamma, cfg.tau, cfg.Kmax);
            const double chi_sup = sol.chi.sup_coeff();
            if (chi_sup > cfg.chi_guard)
                throw numerical_error("non-contraction", "step " + std::to_string(step) + ": generator sup " +
                                                              std::to_string(chi_sup) + " above the guard");
            auto [sR, eR] = lie_series(R, sol.chi, cfg.series_terms, 0);
            auto [sZ, eZ] = lie_series(Z, sol.chi, cfg.series_terms, 0);
            auto [sH, eH] = lie_series(sol.average - Rs, sol.chi, cfg.series_terms, 1);
            PhaseSymbol Rn = Rtail + sR + sZ + sH;
            Rn.prune(1e-300);

            if (step == 1) out.z = h0_profile(sol.average_h0, energies, n);
            Z += sol.average;
            if (out.ztilde_h0.size() < sol.average_h0.size()) out.ztilde_h0.resize(sol.average_h0.size(), 0.0);
            for (std::size_t q = 0; q < sol.average_h0.size(); ++q) out.ztilde_h0[q] += sol.average_h0[q];

            const double gen_order = R.order;
            double res_order = -std::numeric_limits<double>::infinity();
            if (!Rs.empty()) res_order = 2.0 * R.order - 2.0;
            if (!Z.terms().empty() && !Rs.empty()) res_order = std::max(res_order, Z.order + R.order - 2.0);
            if (!Rtail.empty()) res_order = std::max(res_order, R.order);
            if (Rn.empty()) res_order = -std::numeric_limits<double>::infinity();

            NormalFormStep row;
            row.step = step;
            row.generator_order = gen_order;
            row.residual_order = res_order;
            row.sup_coeff = Rn.sup_coeff();
            row.truncation_error = std::max({eR, eZ, eH});
            row.generator_sup = chi_sup;
            row.solver_residual = sol.residual;
            out.ledger.push_back(row);
            out.chain.push_back(sol.chi);

            R = Rn;
            R.order = res_order;
            out.achieved_order = res_order;
            if (res_order <= -target_kappa) {
                out.reached_target = true;
                break;
            }
        }
        out.residual = R;
        out.ztilde = h0_profile(out.ztilde_h0, energies, n);
        return out;
    }

    // l > 1: one flow cycle on the cut-off perturbation, then the torus equation on its flow average.
    PhaseSymbol p = W * cplx(eps);
    FlowHomSolution fl = solve_hom_flow(p, V, energies, 2048, true);
    TorusHomSolution tr = solve_hom_torus(fl.average, omega, cfg.gamma, cfg.tau, cfg.Kmax);
    const double chi_sup = std::max(fl.chi.sup_abs(), tr.chi.sup_abs());
    if (chi_sup > cfg.chi_guard)
        throw numerical_error("non-contraction", "generator sup " + std::to_string(chi_sup) + " above the guard");
    out.z = tr.pbar;
    out.ztilde = tr.pbar;
    out.flow_chain.push_back(fl.chi);
    out.torus_chain.push_back(tr.chi);
    NormalFormStep row;
    row.step = 1;
    row.generator_order = m0 - l + 1;
    row.residual_order = std::max(m0 - l + 1, 2.0 * m0 - 2.0 * l);
    row.sup_coeff = std::max(fl.residual, tr.residual + tr.tail_bound);
    row.generator_sup = chi_sup;
    row.solver_residual = std::max(fl.residual, tr.residual);
    out.ledger.push_back(row);
    out.achieved_order = row.residual_order;
    out.reached_target = row.residual_order <= -target_kappa;
    return out;
}

} // namespace kamred
