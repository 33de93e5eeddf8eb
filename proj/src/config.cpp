#include "kamred/config.hpp"

#include "kamred/diophantine.hpp"
#include "kamred/error.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <toml.hpp>

namespace kamred {

namespace {

class Section {
public:
    Section(const toml::table* t, std::string name, std::set<std::string> allowed)
        : t_(t), name_(std::move(name)), allowed_(std::move(allowed)) {
        if (!t_) return;
        for (auto&& [k, v] : *t_) {
            std::string key(k.str());
            if (!allowed_.count(key)) throw validation_error("config", "unknown key '" + qualified(key) + "'");
        }
    }

    bool present() const { return t_ != nullptr; }
    bool has(const std::string& key) const { return t_ && t_->contains(key); }
    const toml::node* node(const std::string& key) const { return t_ ? t_->get(key) : nullptr; }

    template <class T>
    void get(const std::string& key, T& out) const {
        const toml::node* n = node(key);
        if (!n) return;
        if constexpr (std::is_same_v<T, bool>) {
            auto v = n->value<bool>();
            if (!v) fail(key, "a boolean");
            out = *v;
        } else if constexpr (std::is_integral_v<T>) {
            auto v = n->value<std::int64_t>();
            if (!v || !n->is_integer()) fail(key, "an integer");
            if constexpr (std::is_unsigned_v<T>)
                if (*v < 0) fail(key, "a non-negative integer");
            out = static_cast<T>(*v);
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!n->is_number()) fail(key, "a number");
            out = *n->value<double>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            auto v = n->value<std::string>();
            if (!v) fail(key, "a string");
            out = *v;
        }
    }

    std::vector<double> numbers(const std::string& key) const {
        const toml::node* n = node(key);
        std::vector<double> out;
        if (!n) return out;
        const toml::array* a = n->as_array();
        if (!a) fail(key, "an array of numbers");
        for (const auto& e : *a) {
            if (!e.is_number()) fail(key, "an array of numbers");
            out.push_back(*e.value<double>());
        }
        return out;
    }

    std::vector<int> integers(const std::string& key) const {
        std::vector<int> out;
        const toml::node* n = node(key);
        if (!n) return out;
        const toml::array* a = n->as_array();
        if (!a) fail(key, "an array of integers");
        for (const auto& e : *a) {
            if (!e.is_integer()) fail(key, "an array of integers");
            out.push_back(static_cast<int>(*e.value<std::int64_t>()));
        }
        return out;
    }

    std::string qualified(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        throw validation_error("config", "'" + qualified(key) + "' must be " + what);
    }

private:
    const toml::table* t_;
    std::string name_;
    std::set<std::string> allowed_;
};

const toml::table* subtable(const toml::table& root, const std::string& key) {
    const toml::node* n = root.get(key);
    if (!n) return nullptr;
    const toml::table* t = n->as_table();
    if (!t) throw validation_error("config", "'" + key + "' must be a table");
    return t;
}

PhaseSymbol parse_terms(const toml::node* node, int n) {
    PhaseSymbol p(n);
    const toml::array* arr = node ? node->as_array() : nullptr;
    if (!arr) throw validation_error("config", "'perturbation.terms' must be an array of tables");
    for (std::size_t i = 0; i < arr->size(); ++i) {
        const toml::table* t = arr->get(i)->as_table();
        if (!t) throw validation_error("config", "'perturbation.terms' entries must be tables");
        Section s(t, "perturbation.terms[" + std::to_string(i) + "]", {"a", "b", "k", "re", "im", "mirror"});
        int a = -1, b = -1;
        double re = 0.0, im = 0.0;
        bool mirror = false;
        s.get("a", a);
        s.get("b", b);
        s.get("re", re);
        s.get("im", im);
        s.get("mirror", mirror);
        std::vector<int> k = s.integers("k");
        if (!s.has("k")) k.assign(n, 0);
        if (a < 0 || b < 0) throw validation_error("config", "term powers a, b must be given and non-negative");
        if (static_cast<int>(k.size()) != n) throw validation_error("config", "term k must have n entries");
        if (mirror)
            p.add_real(a, b, k, cplx(re, im));
        else
            p.add(a, b, k, cplx(re, im));
    }
    if (!p.is_real(1e-14)) throw validation_error("config", "perturbation terms violate coefficient(a,b,-k) = conj(coefficient(a,b,k))");
    return p;
}

} // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
    toml::table root;
    try {
        root = toml::parse(text, origin);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << e.description() << " at " << e.source().begin;
        throw validation_error("config", origin + ": " + os.str());
    }
    Section top(&root, "", {"schema", "model", "perturbation", "kam", "prediag", "evolve", "normal_form", "output"});
    RunConfig c;
    if (!top.has("schema")) throw validation_error("config", "missing 'schema'");
    top.get("schema", c.schema);
    if (c.schema != kConfigSchema) throw validation_error("config", "unsupported schema " + std::to_string(c.schema));

    Section model(subtable(root, "model"), "model", {"l", "N", "n", "eps", "omega", "omega_sample", "seed"});
    if (!model.present()) throw validation_error("config", "missing [model]");
    model.get("l", c.l);
    model.get("N", c.N);
    model.get("n", c.n);
    model.get("eps", c.eps);
    model.get("seed", c.seed);
    if (model.has("omega") && model.has("omega_sample"))
        throw validation_error("config", "give either model.omega or model.omega_sample");
    if (model.has("omega")) {
        c.omega = model.numbers("omega");
    } else if (model.has("omega_sample")) {
        const toml::table* os = model.node("omega_sample")->as_table();
        if (!os) throw validation_error("config", "'model.omega_sample' must be a table");
        Section s(os, "model.omega_sample", {"seed", "index"});
        std::uint64_t seed = 0, index = 0;
        s.get("seed", seed);
        s.get("index", index);
        c.omega = sample_frequency(c.n, seed, index);
    } else {
        throw validation_error("config", "missing model.omega");
    }

    Section pert(subtable(root, "perturbation"), "perturbation", {"kind", "terms", "kmax", "decay"});
    if (!pert.present()) throw validation_error("config", "missing [perturbation]");
    std::string kind = "symbol";
    pert.get("kind", kind);
    if (kind == "symbol") {
        if (pert.has("kmax") || pert.has("decay")) throw validation_error("config", "kmax/decay belong to kind = \"random\"");
        c.forcing.kind = ForcingConfig::Kind::Symbol;
        c.forcing.symbol = parse_terms(pert.node("terms"), c.n);
        c.forcing.symbol.order = 0.0;
    } else if (kind == "random") {
        if (pert.has("terms")) throw validation_error("config", "terms belong to kind = \"symbol\"");
        c.forcing.kind = ForcingConfig::Kind::Random;
        pert.get("kmax", c.forcing.kmax);
        pert.get("decay", c.forcing.decay);
    } else {
        throw validation_error("config", "perturbation.kind must be \"symbol\" or \"random\"");
    }

    Section kam(subtable(root, "kam"), "kam", {"r", "theta", "gamma0", "tau", "d2", "Kmax", "max_stages", "tol", "floor"});
    kam.get("r", c.kam.r);
    kam.get("theta", c.kam.theta);
    kam.get("gamma0", c.kam.gamma0);
    kam.get("tau", c.kam.tau);
    kam.get("d2", c.kam.d2);
    kam.get("Kmax", c.kam.Kmax);
    kam.get("max_stages", c.kam.max_stages);
    kam.get("tol", c.kam.tol);
    kam.get("floor", c.kam.floor);
    c.kam.d = 2.0 * c.l / (c.l + 1.0);

    Section pre(subtable(root, "prediag"), "prediag", {"max_iters", "tol"});
    pre.get("max_iters", c.prediag_iters);
    pre.get("tol", c.prediag_tol);

    Section ev(subtable(root, "evolve"), "evolve", {"T", "dt", "integrator", "psi0", "record_every", "step_halving"});
    ev.get("T", c.evolve.T);
    ev.get("dt", c.evolve.dt);
    std::string integ = "magnus2";
    ev.get("integrator", integ);
    if (integ == "magnus2")
        c.evolve.integrator = Integrator::Magnus2;
    else if (integ == "magnus4")
        c.evolve.integrator = Integrator::Magnus4;
    else
        throw validation_error("config", "evolve.integrator must be \"magnus2\" or \"magnus4\"");
    ev.get("psi0", c.evolve.psi0_index);
    ev.get("record_every", c.evolve.record_every);
    ev.get("step_halving", c.evolve.step_halving);

    Section nf(subtable(root, "normal_form"), "normal_form", {"target_kappa", "gamma", "tau", "Kmax", "max_steps"});
    if (nf.present()) {
        NormalFormRequest req;
        nf.get("target_kappa", req.target_kappa);
        nf.get("gamma", req.cfg.gamma);
        nf.get("tau", req.cfg.tau);
        nf.get("Kmax", req.cfg.Kmax);
        nf.get("max_steps", req.cfg.max_steps);
        c.normal_form = req;
    }

    Section out(subtable(root, "output"), "output", {"dir"});
    out.get("dir", c.output_dir);

    c.validate();
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("io", "cannot open config " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), path);
}

} // namespace kamred
