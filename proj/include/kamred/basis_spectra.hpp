#pragma once

#include "kamred/types.hpp"

#include <nlohmann/json_fwd.hpp>

namespace kamred {

// V(x) = sum_p coeffs[p] x^p, degree 2l.
struct PotentialSpec {
    int l = 1;
    std::vector<double> coeffs;

    static PotentialSpec monomial(int l);

    double value(double x) const;
    double derivative(double x) const;
    double second_derivative(double x) const;
    double leading() const { return coeffs.back(); }

    // Throws on a leading coefficient <= 0, V(0) != 0 or a critical point away from 0
    // inside [-scan, scan].
    void validate(double scan = 0.0) const;
};

struct GridSpec {
    double half_width = 0.0; // 0 selects from the lambda_N estimate
    int points = 0;          // interior points of the coarse grid, 0 selects a default
    bool richardson = true;
};

struct EigenBasis {
    int N = 0;
    int l = 1;
    double L = 0.0;
    int M = 0;   // interior points of the grid carrying the vectors
    double h = 0.0;
    int certified = 0;
    std::vector<double> lambda_v;
    std::vector<double> x;  // grid nodes
    RMatrix vectors;        // M x N, sum_i v_i^2 h = 1
    double max_residual = 0.0;

    double lambda(int j) const { return lambda_v.at(static_cast<std::size_t>(j - 1)); }
};

struct SobolevFrame {
    double s = 0.0;
    double kappa = 0.0;
};

EigenBasis solve_h0(const PotentialSpec& potential, int N, GridSpec grid = {});

struct AsymptoticFit {
    double c_fit = 0.0;
    double max_rel_dev = 0.0;
    double free_exponent = 0.0;
};

AsymptoticFit check_asymptotics(const EigenBasis& basis, int l, int j_lo, int j_hi);

double weighted_operator_norm(const CMatrix& F, const SobolevFrame& frame);
double weighted_operator_norm(const RMatrix& F, const SobolevFrame& frame);

// Semiclassical estimate of lambda_j from the Bohr-Sommerfeld rule, area = 2 pi (j - 1/2).
double bohr_sommerfeld_level(const PotentialSpec& potential, int j);

// Eigenvalues of the symmetric tridiagonal matrix, indices [lo, hi) of the ascending order.
std::vector<double> tridiagonal_eigenvalues(const std::vector<double>& diag, const std::vector<double>& off,
                                            int lo, int hi, double tol);

nlohmann::json to_json(const EigenBasis& basis);

} // namespace kamred
