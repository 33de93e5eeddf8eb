#include "kamred/symbol.hpp"

#include "kamred/error.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

namespace kamred {

namespace {

MultiIndex add_k(const MultiIndex& a, const MultiIndex& b) {
    MultiIndex c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
    return c;
}

double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

} // namespace

void PhaseSymbol::add(int a, int b, const MultiIndex& k, cplx c) {
    if (static_cast<int>(k.size()) != n_) throw validation_error("symbol", "Fourier index has wrong length");
    if (a < 0 || b < 0) throw validation_error("symbol", "negative power");
    if (c == cplx(0.0)) return;
    auto& slot = terms_[SymbolKey{a, b, k}];
    slot += c;
}

void PhaseSymbol::add_real(int a, int b, const MultiIndex& k, cplx c) {
    if (is_zero(k)) {
        add(a, b, k, c.real());
        return;
    }
    add(a, b, k, c);
    add(a, b, negate(k), std::conj(c));
}

cplx PhaseSymbol::coeff(int a, int b, const MultiIndex& k) const {
    auto it = terms_.find(SymbolKey{a, b, k});
    return it == terms_.end() ? cplx(0.0) : it->second;
}

PhaseSymbol PhaseSymbol::monomial(int n, int a, int b, cplx c) {
    PhaseSymbol p(n);
    p.add(a, b, MultiIndex(n, 0), c);
    return p;
}

PhaseSymbol PhaseSymbol::h0(const PotentialSpec& V, int n) {
    PhaseSymbol p(n);
    p.add(0, 2, MultiIndex(n, 0), 1.0);
    for (std::size_t q = 0; q < V.coeffs.size(); ++q) p.add(static_cast<int>(q), 0, MultiIndex(n, 0), V.coeffs[q]);
    p.order = 2.0 * V.l;
    return p;
}

PhaseSymbol& PhaseSymbol::operator+=(const PhaseSymbol& o) {
    if (o.n_ != n_) throw validation_error("symbol", "mismatched frequency count");
    for (const auto& [key, c] : o.terms_) terms_[key] += c;
    order = std::max(order, o.order);
    return *this;
}

PhaseSymbol& PhaseSymbol::operator-=(const PhaseSymbol& o) {
    if (o.n_ != n_) throw validation_error("symbol", "mismatched frequency count");
    for (const auto& [key, c] : o.terms_) terms_[key] -= c;
    order = std::max(order, o.order);
    return *this;
}

PhaseSymbol& PhaseSymbol::operator*=(cplx s) {
    for (auto& [key, c] : terms_) c *= s;
    return *this;
}

PhaseSymbol PhaseSymbol::product(const PhaseSymbol& o) const {
    if (o.n_ != n_) throw validation_error("symbol", "mismatched frequency count");
    PhaseSymbol r(n_);
    for (const auto& [k1, c1] : terms_)
        for (const auto& [k2, c2] : o.terms_) r.terms_[SymbolKey{k1.a + k2.a, k1.b + k2.b, add_k(k1.k, k2.k)}] += c1 * c2;
    r.order = order + o.order;
    return r;
}

PhaseSymbol PhaseSymbol::dx(int times) const {
    PhaseSymbol r(n_);
    for (const auto& [key, c] : terms_) {
        if (key.a < times) continue;
        double f = 1.0;
        for (int i = 0; i < times; ++i) f *= key.a - i;
        r.terms_[SymbolKey{key.a - times, key.b, key.k}] += f * c;
    }
    r.order = order;
    return r;
}

PhaseSymbol PhaseSymbol::dxi(int times) const {
    PhaseSymbol r(n_);
    for (const auto& [key, c] : terms_) {
        if (key.b < times) continue;
        double f = 1.0;
        for (int i = 0; i < times; ++i) f *= key.b - i;
        r.terms_[SymbolKey{key.a, key.b - times, key.k}] += f * c;
    }
    r.order = order;
    return r;
}

PhaseSymbol PhaseSymbol::phase_derivative(const std::vector<double>& omega) const {
    PhaseSymbol r(n_);
    for (const auto& [key, c] : terms_) {
        double wk = dot(key.k, omega);
        if (wk != 0.0) r.terms_[key] += cplx(0.0, wk) * c;
    }
    r.order = order;
    return r;
}

PhaseSymbol PhaseSymbol::mode(const MultiIndex& k) const {
    PhaseSymbol r(n_);
    for (const auto& [key, c] : terms_)
        if (key.k == k) r.terms_[SymbolKey{key.a, key.b, MultiIndex(n_, 0)}] += c;
    r.order = order;
    return r;
}

PhaseSymbol PhaseSymbol::phi_dependent_part() const {
    PhaseSymbol r(n_);
    for (const auto& [key, c] : terms_)
        if (!is_zero(key.k)) r.terms_[key] = c;
    r.order = order;
    return r;
}

PhaseSymbol PhaseSymbol::phi_independent_part() const {
    PhaseSymbol r(n_);
    for (const auto& [key, c] : terms_)
        if (is_zero(key.k)) r.terms_[key] = c;
    r.order = order;
    return r;
}

cplx PhaseSymbol::evaluate(double x, double xi, const std::vector<double>& phi) const {
    cplx s = 0.0;
    for (const auto& [key, c] : terms_) {
        double ph = n_ ? dot(key.k, phi) : 0.0;
        s += c * std::pow(x, key.a) * std::pow(xi, key.b) * std::polar(1.0, ph);
    }
    return s;
}

double PhaseSymbol::sup_coeff() const {
    double m = 0.0;
    for (const auto& [key, c] : terms_) m = std::max(m, std::abs(c));
    return m;
}

int PhaseSymbol::max_degree() const {
    int d = 0;
    for (const auto& [key, c] : terms_) d = std::max(d, key.a + key.b);
    return d;
}

bool PhaseSymbol::is_real(double tol) const {
    const double scale = std::max(1.0, sup_coeff());
    for (const auto& [key, c] : terms_)
        if (std::abs(coeff(key.a, key.b, negate(key.k)) - std::conj(c)) > tol * scale) return false;
    return true;
}

void PhaseSymbol::prune(double tol) {
    for (auto it = terms_.begin(); it != terms_.end();) {
        if (std::abs(it->second) <= tol)
            it = terms_.erase(it);
        else
            ++it;
    }
}

PhaseLattice PhaseLattice::cartesian_grid(double xmax, int nx, double ximax, int nxi) {
    if (nx < 5 || nxi < 5) throw validation_error("lattice", "need at least 5 points per axis");
    PhaseLattice lat;
    lat.cartesian = true;
    lat.nx = nx;
    lat.nxi = nxi;
    lat.x0 = -xmax;
    lat.xi0 = -ximax;
    lat.dx = 2.0 * xmax / (nx - 1);
    lat.dxi = 2.0 * ximax / (nxi - 1);
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < nxi; ++j) {
            lat.x.push_back(lat.x0 + i * lat.dx);
            lat.xi.push_back(lat.xi0 + j * lat.dxi);
        }
    return lat;
}

cplx GridSymbol::evaluate(std::size_t point, const std::vector<double>& phi) const {
    cplx s = 0.0;
    for (const auto& [k, v] : modes) s += v(static_cast<Eigen::Index>(point)) * std::polar(1.0, n ? dot(k, phi) : 0.0);
    return s;
}

double GridSymbol::sup_abs() const {
    double m = 0.0;
    for (const auto& [k, v] : modes)
        if (v.size()) m = std::max(m, v.cwiseAbs().maxCoeff());
    return m;
}

GridSymbol sample(const PhaseSymbol& p, const PhaseLattice& lattice) {
    GridSymbol g;
    g.n = p.n();
    g.lattice = lattice;
    g.order = p.order;
    const auto np = static_cast<Eigen::Index>(lattice.size());
    for (const auto& [key, c] : p.terms()) {
        auto [it, fresh] = g.modes.try_emplace(key.k, CVector::Zero(np));
        for (Eigen::Index i = 0; i < np; ++i)
            it->second(i) += c * std::pow(lattice.x[i], key.a) * std::pow(lattice.xi[i], key.b);
    }
    return g;
}

double weight_lambda(double x, double xi, int l) {
    return std::pow(1.0 + xi * xi + std::pow(x, 2 * l), 1.0 / (2.0 * l));
}

PhaseSymbol poisson_bracket(const PhaseSymbol& f, const PhaseSymbol& g) {
    PhaseSymbol r = g.dxi().product(f.dx()) - f.dxi().product(g.dx());
    r.prune();
    return r;
}

namespace {

// Fourth-order central differences along one axis of a Cartesian lattice, third-order one-sided at the edges.
CVector lattice_derivative(const CVector& v, const PhaseLattice& lat, bool along_x) {
    const int nx = lat.nx, nxi = lat.nxi;
    const int len = along_x ? nx : nxi;
    const double h = along_x ? lat.dx : lat.dxi;
    CVector out(v.size());
    auto at = [&](int line, int pos) -> cplx {
        return along_x ? v(pos * nxi + line) : v(line * nxi + pos);
    };
    const int lines = along_x ? nxi : nx;
    for (int line = 0; line < lines; ++line) {
        for (int p = 0; p < len; ++p) {
            cplx d;
            if (p >= 2 && p + 2 < len)
                d = (-at(line, p + 2) + 8.0 * at(line, p + 1) - 8.0 * at(line, p - 1) + at(line, p - 2)) / (12.0 * h);
            else if (p < 2)
                d = (-25.0 * at(line, p) + 48.0 * at(line, p + 1) - 36.0 * at(line, p + 2) + 16.0 * at(line, p + 3) -
                     3.0 * at(line, p + 4)) / (12.0 * h);
            else
                d = (25.0 * at(line, p) - 48.0 * at(line, p - 1) + 36.0 * at(line, p - 2) - 16.0 * at(line, p - 3) +
                     3.0 * at(line, p - 4)) / (12.0 * h);
            if (along_x)
                out(p * nxi + line) = d;
            else
                out(line * nxi + p) = d;
        }
    }
    return out;
}

} // namespace

GridSymbol poisson_bracket(const GridSymbol& f, const GridSymbol& g) {
    if (!f.lattice.cartesian || !g.lattice.cartesian)
        throw validation_error("representation", "grid bracket needs a Cartesian lattice");
    if (f.lattice.size() != g.lattice.size() || f.n != g.n)
        throw validation_error("representation", "mismatched lattices");
    GridSymbol r;
    r.n = f.n;
    r.lattice = f.lattice;
    r.order = f.order + g.order;
    for (const auto& [k1, v1] : f.modes) {
        CVector fx = lattice_derivative(v1, f.lattice, true), fxi = lattice_derivative(v1, f.lattice, false);
        for (const auto& [k2, v2] : g.modes) {
            CVector gx = lattice_derivative(v2, g.lattice, true), gxi = lattice_derivative(v2, g.lattice, false);
            CVector term = (gxi.array() * fx.array() - fxi.array() * gx.array()).matrix();
            auto [it, fresh] = r.modes.try_emplace(add_k(k1, k2), CVector::Zero(term.size()));
            it->second += term;
        }
    }
    return r;
}

std::vector<PhaseSymbol> moyal_correction(const PhaseSymbol& f, const PhaseSymbol& g, int j_max) {
    if (j_max < 0 || j_max > 3) throw validation_error("moyal", "j_max must lie in [0, 3]");
    std::vector<PhaseSymbol> out;
    for (int j = 0; j <= j_max; ++j) {
        PhaseSymbol cj(f.n());
        for (int k1 = 0; k1 <= j; ++k1) {
            int k2 = j - k1;
            // D_x^m = (-i)^m d_x^m
            cplx pref = std::pow(0.5, k1) * std::pow(-0.5, k2) / (factorial(k1) * factorial(k2)) *
                        std::pow(cplx(0.0, -1.0), k1 + k2);
            PhaseSymbol lhs = f.dxi(k1).dx(k2);
            PhaseSymbol rhs = g.dxi(k2).dx(k1);
            cj += lhs.product(rhs) * pref;
        }
        cj.prune();
        cj.order = f.order + g.order - j * 2.0;
        out.push_back(std::move(cj));
    }
    return out;
}

PhaseSymbol moyal_bracket(const PhaseSymbol& f, const PhaseSymbol& g) {
    PhaseSymbol r(f.n());
    const int jmax = std::min(f.max_degree(), g.max_degree());
    for (int j = 1; j <= jmax; j += 2) {
        // even j cancel in the antisymmetrisation
        PhaseSymbol cj(f.n()), cj_rev(f.n());
        for (int k1 = 0; k1 <= j; ++k1) {
            int k2 = j - k1;
            cplx pref = std::pow(0.5, k1) * std::pow(-0.5, k2) / (factorial(k1) * factorial(k2)) *
                        std::pow(cplx(0.0, -1.0), k1 + k2);
            cj += f.dxi(k1).dx(k2).product(g.dxi(k2).dx(k1)) * pref;
            cj_rev += g.dxi(k1).dx(k2).product(f.dxi(k2).dx(k1)) * pref;
        }
        r += (cj - cj_rev) * cplx(0.0, -1.0);
    }
    r.prune(1e-300);
    r.order = f.order + g.order - 2.0;
    return r;
}

double eta(double E) {
    double t = std::clamp(E - 1.0, 0.0, 1.0);
    return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}

CutoffSplit cutoff_split(const PhaseSymbol& W, const PotentialSpec& V, const PhaseLattice& lattice) {
    CutoffSplit out;
    GridSymbol full = sample(W, lattice);
    out.W0 = full;
    out.Winf = full;
    const auto np = static_cast<Eigen::Index>(lattice.size());
    RVector weights(np);
    for (Eigen::Index i = 0; i < np; ++i) weights(i) = eta(lattice.xi[i] * lattice.xi[i] + V.value(lattice.x[i]));
    for (auto& [k, v] : out.W0.modes) v = (v.array() * weights.array()).matrix();
    for (auto& [k, v] : out.Winf.modes) v = (v.array() * (1.0 - weights.array())).matrix();
    for (const auto& [k, v] : full.modes) {
        CVector diff = out.W0.modes[k] + out.Winf.modes[k] - v;
        if (diff.size()) out.partition_residual = std::max(out.partition_residual, diff.cwiseAbs().maxCoeff());
    }
    return out;
}

nlohmann::json to_json(const PhaseSymbol& p) {
    nlohmann::json j;
    j["n"] = p.n();
    j["rep"] = "polynomial";
    j["order"] = p.order;
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& [key, c] : p.terms())
        terms.push_back({{"a", key.a}, {"b", key.b}, {"k", key.k}, {"re", c.real()}, {"im", c.imag()}});
    j["terms"] = std::move(terms);
    return j;
}

nlohmann::json to_json(const GridSymbol& p) {
    nlohmann::json j;
    j["n"] = p.n;
    j["rep"] = "grid";
    j["order"] = p.order;
    j["lattice"] = {{"x", p.lattice.x}, {"xi", p.lattice.xi}, {"energies", p.lattice.energies},
                    {"periods", p.lattice.periods}, {"per_orbit", p.lattice.per_orbit}};
    nlohmann::json modes = nlohmann::json::array();
    for (const auto& [k, v] : p.modes) {
        std::vector<double> re(v.size()), im(v.size());
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            re[i] = v(i).real();
            im[i] = v(i).imag();
        }
        modes.push_back({{"k", k}, {"re", re}, {"im", im}});
    }
    j["modes"] = std::move(modes);
    return j;
}

PhaseSymbol phase_symbol_from_json(const nlohmann::json& j) {
    if (j.value("rep", "polynomial") != "polynomial")
        throw validation_error("symbol", "only polynomial symbols can be read back");
    PhaseSymbol p(j.at("n").get<int>());
    p.order = j.value("order", 0.0);
    for (const auto& t : j.at("terms"))
        p.add(t.at("a").get<int>(), t.at("b").get<int>(), t.at("k").get<MultiIndex>(),
              cplx(t.at("re").get<double>(), t.at("im").get<double>()));
    return p;
}

} // namespace kamred
