#pragma once

#include "kamred/basis_spectra.hpp"
#include "kamred/types.hpp"

#include <compare>
#include <map>
#include <nlohmann/json_fwd.hpp>

namespace kamred {

struct SymbolKey {
    int a = 0; // power of x
    int b = 0; // power of xi
    MultiIndex k;
    auto operator<=>(const SymbolKey&) const = default;
};

// Polynomial in (x, xi) with torus Fourier coefficients: sum c_{a,b,k} x^a xi^b e^{i k.phi}.
class PhaseSymbol {
public:
    explicit PhaseSymbol(int n = 0) : n_(n) {}

    int n() const { return n_; }
    const std::map<SymbolKey, cplx>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }

    void add(int a, int b, const MultiIndex& k, cplx c);
    // Adds c x^a xi^b e^{ik.phi} + conj(c) x^a xi^b e^{-ik.phi} (once for k = 0, with real part).
    void add_real(int a, int b, const MultiIndex& k, cplx c);
    cplx coeff(int a, int b, const MultiIndex& k) const;

    static PhaseSymbol monomial(int n, int a, int b, cplx c = 1.0);
    static PhaseSymbol h0(const PotentialSpec& V, int n);

    PhaseSymbol& operator+=(const PhaseSymbol& o);
    PhaseSymbol& operator-=(const PhaseSymbol& o);
    PhaseSymbol& operator*=(cplx s);
    friend PhaseSymbol operator+(PhaseSymbol a, const PhaseSymbol& b) { return a += b; }
    friend PhaseSymbol operator-(PhaseSymbol a, const PhaseSymbol& b) { return a -= b; }
    friend PhaseSymbol operator*(PhaseSymbol a, cplx s) { return a *= s; }
    friend PhaseSymbol operator*(cplx s, PhaseSymbol a) { return a *= s; }
    friend PhaseSymbol operator*(const PhaseSymbol& a, const PhaseSymbol& b) { return a.product(b); }

    PhaseSymbol product(const PhaseSymbol& o) const;
    PhaseSymbol dx(int times = 1) const;
    PhaseSymbol dxi(int times = 1) const;
    // omega . d_phi
    PhaseSymbol phase_derivative(const std::vector<double>& omega) const;
    // Fourier mode k as a phi-independent symbol.
    PhaseSymbol mode(const MultiIndex& k) const;
    PhaseSymbol phi_dependent_part() const;
    PhaseSymbol phi_independent_part() const;

    cplx evaluate(double x, double xi, const std::vector<double>& phi) const;
    double sup_coeff() const;
    int max_degree() const;
    bool is_real(double tol = 1e-12) const;
    void prune(double tol = 0.0);

    // Declared symbol order used by the order ledger.
    double order = 0.0;

private:
    int n_;
    std::map<SymbolKey, cplx> terms_;
};

struct PhaseLattice {
    std::vector<double> x, xi; // point coordinates
    bool cartesian = false;
    int nx = 0, nxi = 0;       // Cartesian layout: index = ix * nxi + ixi
    double x0 = 0.0, dx = 0.0, xi0 = 0.0, dxi = 0.0;
    std::vector<double> energies; // orbit layout: energies.size() orbits of per_orbit points each
    std::vector<double> periods;
    int per_orbit = 0;

    std::size_t size() const { return x.size(); }
    static PhaseLattice cartesian_grid(double xmax, int nx, double ximax, int nxi);
};

// Symbol sampled on a phase-space lattice; one complex sample vector per Fourier mode.
struct GridSymbol {
    int n = 0;
    PhaseLattice lattice;
    std::map<MultiIndex, CVector> modes;
    double order = 0.0;

    cplx evaluate(std::size_t point, const std::vector<double>& phi) const;
    double sup_abs() const;
};

GridSymbol sample(const PhaseSymbol& p, const PhaseLattice& lattice);

double weight_lambda(double x, double xi, int l);

// {f;g} = -d_xi f d_x g + d_xi g d_x f
PhaseSymbol poisson_bracket(const PhaseSymbol& f, const PhaseSymbol& g);
// Fourth-order finite differences on a Cartesian lattice.
GridSymbol poisson_bracket(const GridSymbol& f, const GridSymbol& g);

// Weyl composition terms c_0..c_jmax of f # g.
std::vector<PhaseSymbol> moyal_correction(const PhaseSymbol& f, const PhaseSymbol& g, int j_max);
// Symbol of -i[F, G], summed over every nonvanishing composition term.
PhaseSymbol moyal_bracket(const PhaseSymbol& f, const PhaseSymbol& g);

// C^2 bump: 0 for E <= 1, 1 for E >= 2 (quintic smoothstep).
double eta(double E);

struct CutoffSplit {
    GridSymbol W0, Winf;
    double partition_residual = 0.0;
};
CutoffSplit cutoff_split(const PhaseSymbol& W, const PotentialSpec& V, const PhaseLattice& lattice);

nlohmann::json to_json(const PhaseSymbol& p);
nlohmann::json to_json(const GridSymbol& p);
PhaseSymbol phase_symbol_from_json(const nlohmann::json& j);

} // namespace kamred
