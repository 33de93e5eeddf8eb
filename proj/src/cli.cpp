#include "kamred/cli.hpp"

#include "kamred/config.hpp"
#include "kamred/diophantine.hpp"
#include "kamred/error.hpp"
#include "kamred/lemmas.hpp"
#include "kamred/normal_form.hpp"
#include "kamred/parallel.hpp"
#include "kamred/pipeline.hpp"
#include "kamred/propagator.hpp"
#include "kamred/report.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace kamred {

namespace {

std::string manifest_path(const std::string& out) {
    fs::path p(out);
    return (p.parent_path() / (p.stem().string() + ".manifest.json")).string();
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw io_error("io", "cannot create directory " + dir + ": " + ec.message());
}

void ensure_parent(const std::string& file) {
    fs::path parent = fs::path(file).parent_path();
    if (!parent.empty()) ensure_dir(parent.string());
}

nlohmann::json with_threads(nlohmann::json m) {
    m["threads"] = worker_count();
    return m;
}

int run_spectrum(int l, int N, const std::string& out) {
    if (l < 1) throw validation_error("spectrum", "--l must be positive");
    if (N < 2) throw validation_error("spectrum", "--n must be at least 2");
    EigenBasis basis = solve_h0(PotentialSpec::monomial(l), N);
    ensure_parent(out);
    write_json(out, to_json(basis));
    const std::string man = manifest_path(out);
    write_json(man, with_threads(make_manifest("spectrum", {{"l", l}, {"N", N}}, 0, {out})));
    std::cout << "spectrum: wrote " << out << " and " << man << "\n";
    return 0;
}

int run_measure(const std::string& set, std::vector<double> gammas, double tau, int n, std::int64_t samples,
                std::uint64_t seed, int kmax, const std::string& out) {
    DiophantineSet which;
    if (set == "omega0")
        which = DiophantineSet::Omega0;
    else if (set == "omega1")
        which = DiophantineSet::Omega1;
    else
        throw validation_error("measure", "--set must be omega0 or omega1");
    if (gammas.empty()) throw validation_error("measure", "--gamma is required");
    CsvTable t({"gamma", "tau", "n", "samples", "excluded_fraction", "ci95"});
    for (double g : gammas) {
        DiophantineParams p{g, tau, kmax};
        MeasureEstimate est = excluded_measure(n, p, which, samples, seed);
        t.add_row({g, tau, static_cast<long long>(n), static_cast<long long>(samples), est.fraction, est.ci95});
    }
    ensure_parent(out);
    t.write(out);
    const std::string man = manifest_path(out);
    write_json(man, with_threads(make_manifest(
                        "measure",
                        {{"set", set}, {"gamma", gammas}, {"tau", tau}, {"n", n}, {"samples", samples}, {"kmax", kmax}},
                        seed, {out})));
    std::cout << t.str();
    return 0;
}

int run_reduce(const std::string& config_path, const std::string& out_dir_flag) {
    RunConfig cfg = load_config(config_path);
    const std::string dir = out_dir_flag.empty() ? cfg.output_dir : out_dir_flag;
    ensure_dir(dir);
    std::vector<std::string> outputs;

    if (cfg.normal_form) {
        if (cfg.forcing.kind != ForcingConfig::Kind::Symbol)
            throw validation_error("config", "normal_form needs a symbol perturbation");
        NormalForm nf = smoothing_normal_form(PotentialSpec::monomial(cfg.l), cfg.forcing.symbol, cfg.omega, cfg.eps,
                                              cfg.normal_form->target_kappa, cfg.normal_form->cfg);
        const std::string csv = (fs::path(dir) / "normal_form.csv").string();
        const std::string js = (fs::path(dir) / "normal_form.json").string();
        write_text(csv, nf.ledger_csv());
        write_json(js, nf.to_json());
        outputs.push_back(csv);
        outputs.push_back(js);
        if (!nf.reached_target)
            std::cerr << "normal form: target order not reached, achieved " << nf.achieved_order << "\n";
    }

    const std::string ledger = (fs::path(dir) / "ledger.csv").string();
    const std::string state = (fs::path(dir) / "reduce.json").string();
    const std::string man = (fs::path(dir) / "manifest.json").string();
    outputs.push_back(ledger);
    outputs.push_back(state);
    try {
        ReduceResult res = reduce(cfg);
        write_text(ledger, res.ledger_csv());
        write_json(state, res.to_json());
        write_json(man, with_threads(make_manifest("reduce", cfg.to_json(), cfg.seed, outputs)));
        std::cout << res.ledger_csv() << "stop: " << res.kam.stop_reason << "\n";
    } catch (const Error& e) {
        nlohmann::json m = make_manifest("reduce", cfg.to_json(), cfg.seed, {man});
        m["failure"] = {{"code", e.code()}, {"message", e.what()}};
        write_json(man, with_threads(m));
        throw;
    }
    return 0;
}

int run_evolve(const std::string& config_path, const std::string& out) {
    RunConfig cfg = load_config(config_path);
    Model model = build_model(cfg);
    EvolutionRun run;
    run.omega = cfg.omega;
    run.eps = cfg.eps;
    run.T_final = cfg.evolve.T;
    run.dt = cfg.evolve.dt;
    run.integrator = cfg.evolve.integrator;
    run.psi0 = CVector::Zero(cfg.N);
    run.psi0(cfg.evolve.psi0_index - 1) = 1.0;
    run.record_every = cfg.evolve.record_every;
    run.step_halving = cfg.evolve.step_halving;
    NormTrace tr = evolve(run, model.lambda_v, model.W);
    ensure_parent(out);
    write_text(out, tr.csv());
    const std::string man = manifest_path(out);
    nlohmann::json m = make_manifest("evolve", cfg.to_json(), cfg.seed, {out});
    m["summary"] = {{"steps", tr.steps},
                    {"max_l2_drift", tr.max_l2_drift},
                    {"max_h1_ratio", tr.max_h1_ratio},
                    {"leakage_flag", tr.leakage_flag},
                    {"leakage_time", tr.leakage_time},
                    {"halving_error", tr.halving_error}};
    write_json(man, with_threads(m));
    std::cout << "evolve: " << tr.steps << " steps, max H1 ratio " << fmt17(tr.max_h1_ratio)
              << (tr.leakage_flag ? ", truncation leakage flagged" : "") << "\n";
    return 0;
}

int run_verify(std::uint64_t seed, int trials, const std::string& out) {
    if (trials < 1) throw validation_error("verify", "--trials must be positive");
    LemmaReport rep = lemma_suite(seed, trials);
    nlohmann::json j = rep.to_json();
    for (const auto& c : rep.checks)
        std::cout << c.name << ": trials " << c.trials << ", violations " << c.violations << ", max ratio "
                  << fmt17(c.max_ratio) << "\n";
    if (!out.empty()) {
        ensure_parent(out);
        write_json(out, j);
        write_json(manifest_path(out), with_threads(make_manifest("verify", {{"trials", trials}}, seed, {out})));
    }
    if (rep.violations() > 0) throw numerical_error("bound-violation", std::to_string(rep.violations()) + " lemma bound violations");
    return 0;
}

} // namespace

int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"kamred: reducibility laboratory for forced anharmonic oscillators"};
    app.name("kamred");
    app.require_subcommand(1);

    int sp_l = 1, sp_n = 64;
    std::string sp_out;
    auto* spectrum = app.add_subcommand("spectrum", "eigenpairs of -d^2/dx^2 + x^{2l}");
    spectrum->add_option("--l", sp_l, "potential degree parameter")->required();
    spectrum->add_option("--n", sp_n, "number of eigenpairs")->required();
    spectrum->add_option("--out", sp_out, "output JSON")->required();

    std::string ms_set = "omega0", ms_out;
    std::vector<double> ms_gamma;
    double ms_tau = 2.5;
    int ms_n = 2, ms_kmax = 50;
    std::int64_t ms_samples = 1000000;
    std::uint64_t ms_seed = 1;
    auto* measure = app.add_subcommand("measure", "Monte-Carlo excluded measure of a Diophantine set");
    measure->add_option("--set", ms_set, "omega0 or omega1");
    measure->add_option("--gamma", ms_gamma, "gamma values")->required();
    measure->add_option("--tau", ms_tau);
    measure->add_option("--n", ms_n);
    measure->add_option("--samples", ms_samples);
    measure->add_option("--seed", ms_seed);
    measure->add_option("--kmax", ms_kmax);
    measure->add_option("--out", ms_out)->required();

    std::string rd_config, rd_dir;
    auto* reduce_cmd = app.add_subcommand("reduce", "prediagonalisation and KAM reduction");
    reduce_cmd->add_option("--config", rd_config, "run TOML")->required();
    reduce_cmd->add_option("--out-dir", rd_dir, "overrides output.dir");

    std::string ev_config, ev_out;
    auto* evolve_cmd = app.add_subcommand("evolve", "Sobolev-norm trace of the forced evolution");
    evolve_cmd->add_option("--config", ev_config, "run TOML")->required();
    evolve_cmd->add_option("--out", ev_out, "trace CSV")->required();

    std::uint64_t vf_seed = 1;
    int vf_trials = 100;
    std::string vf_out;
    auto* verify = app.add_subcommand("verify", "randomized checks of the Lie, divided-matrix and recursion bounds");
    verify->add_option("--seed", vf_seed);
    verify->add_option("--trials", vf_trials);
    verify->add_option("--out", vf_out, "report JSON");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n" << app.help();
        return 2;
    }

    try {
        if (*spectrum) return run_spectrum(sp_l, sp_n, sp_out);
        if (*measure) return run_measure(ms_set, ms_gamma, ms_tau, ms_n, ms_samples, ms_seed, ms_kmax, ms_out);
        if (*reduce_cmd) return run_reduce(rd_config, rd_dir);
        if (*evolve_cmd) return run_evolve(ev_config, ev_out);
        if (*verify) return run_verify(vf_seed, vf_trials, vf_out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    }
    return 2;
}

} // namespace kamred
