#pragma once

#include "kamred/basis_spectra.hpp"
#include "kamred/types.hpp"

#include <cstdint>
#include <map>
#include <nlohmann/json_fwd.hpp>

namespace kamred {

// Torus Fourier family P(phi) = sum_k P_k e^{ik.phi} of N x N matrices.
class QPOperator {
public:
    QPOperator() = default;
    QPOperator(int n, int N) : n_(n), N_(N) {}

    int n() const { return n_; }
    int N() const { return N_; }
    const std::map<MultiIndex, CMatrix>& modes() const { return modes_; }
    bool empty() const { return modes_.empty(); }
    int kmax() const;

    void set(const MultiIndex& k, const CMatrix& m);
    // Stores m at k and m^dagger at -k.
    void set_pair(const MultiIndex& k, const CMatrix& m);
    void add(const MultiIndex& k, const CMatrix& m);
    CMatrix mode(const MultiIndex& k) const;
    bool has(const MultiIndex& k) const { return modes_.count(k) != 0; }

    CMatrix evaluate(const std::vector<double>& phi) const;
    // omega . d_phi
    QPOperator phase_derivative(const std::vector<double>& omega) const;
    // Modes with |k| <= K and the complement.
    QPOperator truncate(int K) const;
    QPOperator tail(int K) const;
    // [P] = diag of the k = 0 mode.
    RVector average_diagonal() const;
    // max_k ||P_{-k} - P_k^dagger||
    double selfadjoint_defect() const;
    double max_abs() const;

    QPOperator& operator+=(const QPOperator& o);
    QPOperator& operator-=(const QPOperator& o);
    QPOperator& operator*=(cplx s);
    friend QPOperator operator+(QPOperator a, const QPOperator& b) { return a += b; }
    friend QPOperator operator-(QPOperator a, const QPOperator& b) { return a -= b; }
    friend QPOperator operator*(QPOperator a, cplx s) { return a *= s; }
    friend QPOperator operator*(cplx s, QPOperator a) { return a *= s; }

private:
    int n_ = 0;
    int N_ = 0;
    std::map<MultiIndex, CMatrix> modes_;
};

// Uniform angle grid with G points per torus dimension; angle index is row-major in the dimensions.
class TorusGrid {
public:
    TorusGrid(int n, int G);
    // G = 4 Kmax + 1
    static TorusGrid for_kmax(int n, int Kmax);

    int n() const { return n_; }
    int G() const { return G_; }
    std::size_t size() const { return angles_.size(); }
    const std::vector<double>& angle(std::size_t i) const { return angles_[i]; }

    std::vector<CMatrix> synthesize(const QPOperator& P) const;

    struct Projection {
        QPOperator op;
        double tail = 0.0; // sum of spectral norms of the dropped grid modes
    };
    // Discrete Fourier projection onto the l1 diamond |k| <= K.
    Projection project(const std::vector<CMatrix>& samples, int K) const;

private:
    void transform(std::vector<cplx>& data, std::size_t block, int sign) const;

    int n_, G_;
    std::vector<std::vector<double>> angles_;
};

// sum_k e^{|k| r} ||P_k||_{frame}
double analytic_norm(const QPOperator& P, double r, const SobolevFrame& frame = {});
// sup of ||P(theta + i sigma r)|| over a per-dimension grid of real parts and sign patterns sigma in {-1,1}^n.
double analytic_norm_grid(const QPOperator& P, double r, int per_dim, const SobolevFrame& frame = {});
// max over sample pairs of analytic_norm(P(w) - P(w')) / |w - w'|_2
double lipschitz_norm(const std::vector<std::pair<std::vector<double>, QPOperator>>& family, double r,
                      const SobolevFrame& frame = {});
// sup over samples of the weighted norm
double grid_sup_norm(const std::vector<CMatrix>& samples, const SobolevFrame& frame = {});

// Complex matrix with entries uniform in the unit square around 0, scaled by exp(-|i-j| / decay) when decay > 0.
CMatrix random_matrix(int N, std::uint64_t seed, std::uint64_t stream, double decay = 0.0);
// Selfadjoint family with one random matrix per mode pair in 0 < |k| <= K plus a Hermitian k = 0 mode when with_zero.
QPOperator random_selfadjoint(int n, int N, int K, std::uint64_t seed, bool with_zero = true, double decay = 0.0);

nlohmann::json to_json(const QPOperator& P);

} // namespace kamred
