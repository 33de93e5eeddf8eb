#pragma once

#include "kamred/qp_operator.hpp"

#include <string>

namespace kamred {

// Eigenvalue sequence sampled at a finite set of frequencies.
struct DiagonalHamiltonian {
    double d = 1.0;
    std::vector<std::vector<double>> omegas;
    std::vector<RVector> lambdas;
    double K0 = 0.0, K1 = 0.0; // declared gap and Lipschitz constants, 0 = unchecked
    double gamma = 0.0, tau = 0.0;

    static DiagonalHamiltonian single(const RVector& lambda, const std::vector<double>& omega, double d);
    std::size_t samples() const { return lambdas.size(); }
    int N() const { return lambdas.empty() ? 0 : static_cast<int>(lambdas.front().size()); }
    // min |lambda_i - lambda_j| / |i^d - j^d| over samples
    double measured_gap() const;
    // max |Delta(lambda_i - lambda_j)| / |Delta omega| / |i^d - j^d| over sample pairs
    double measured_lipschitz() const;
    // Throws when a declared constant is contradicted by the samples.
    void validate() const;
};

// Fourier/frequency stencil: the center and the 2^n corners of a cube of half side h.
std::vector<std::vector<double>> frequency_stencil(const std::vector<double>& center, double h);

struct PrediagResult {
    std::vector<CMatrix> U1;          // per frequency sample
    DiagonalHamiltonian lambda0;      // lambda' + eps nu_j / j^delta
    std::vector<RVector> nu;          // per sample
    double nu_sup = 0.0;
    double nu_lipschitz = 0.0;
    std::vector<double> offdiag_history; // weighted off-diagonal norm before each iteration
    int iterations = 0;
};

// Removes the off-diagonal part of Lambda + eps Ra by conjugations e^{iX}, X_ij = -i O_ij / (D_i - D_j).
PrediagResult prediagonalize(const DiagonalHamiltonian& Lambda, const CMatrix& Ra, double eps, double delta,
                             int max_iters = 40, double tol = 1e-12);

struct DivisorBounds {
    double gamma = 0.0; // 0 disables the threshold
    double tau = 2.5;
    double d = 1.0;
};

struct QuantumHomSolution {
    QPOperator X;
    RVector average;        // [P]
    double residual = 0.0;  // sup over 16 angles of ||-i[A,X] - Xdot + P_{<=K} - [P]||
    double p_norm = 0.0;    // analytic norm of P at r = 0
    double min_divisor = 0.0;
    double min_ratio = 0.0; // min |divisor| / threshold
};

// X_{k,ij} = P_{k,ij} / (i(lambda_i - lambda_j + omega.k)) for |k| <= K, X_{0,ii} = 0.
QuantumHomSolution quantum_homological(const RVector& lambda, const QPOperator& P, const std::vector<double>& omega,
                                       const DivisorBounds& bounds, int K);

// e^{i s X} for selfadjoint X, with ||U^dagger U - 1||_max written to defect.
CMatrix unitary_exp(const CMatrix& X, double s, double* defect = nullptr);

struct YCorrection {
    std::vector<CMatrix> samples; // Y_X at the grid angles
    int nodes = 0;
    double change = 0.0;          // max entry change when doubling the nodes
};

// Y_X(phi) = int_0^1 e^{i(1-s)X} Xdot e^{-i(1-s)X} ds by Gauss-Legendre quadrature, refined until converged.
YCorrection y_correction(const QPOperator& X, const std::vector<double>& omega, const TorusGrid& grid,
                         int quad_nodes = 8, double tol = 1e-10);

struct LieResult {
    std::vector<CMatrix> samples;
    QPOperator projected;
    double tail = 0.0;
    double unitarity_defect = 0.0;
};

// e^{iX} F e^{-iX} at the grid angles, projected onto |k| <= K.
LieResult lie_transform(const QPOperator& F, const QPOperator& X, const TorusGrid& grid, int K);

// ln(2)/2 guard on the r = 0 surrogate norm.
void check_lie_guard(const QPOperator& X, const std::string& where);

struct StepParams {
    double r = 0.5;
    double sigma = 0.1;
    int K = 4;      // homological cutoff
    int Kmax = 4;   // retained modes
    DivisorBounds bounds;
    SobolevFrame frame;
};

struct StepDiagnostics {
    double eps_in = 0.0;   // ||P||_r
    double eps_out = 0.0;  // ||P+||_{r - sigma}
    double x_norm = 0.0;   // ||X||_{r - sigma}
    double c_star = 0.0;   // eps_out sigma^b / eps_in^2
    double projection_tail = 0.0;
    double min_divisor = 0.0;
    double hom_residual = 0.0;
    int series_terms = 0;
};

struct StepResult {
    RVector A_plus;
    QPOperator P_plus;
    QPOperator X;
    StepDiagnostics diag;
};

// One squaring step: A+ = A + [P], P+ from the commutator series of the transformed Hamiltonian.
StepResult kam_step(const RVector& A, const QPOperator& P, const std::vector<double>& omega, const StepParams& sp,
                    const TorusGrid& grid);

// Phi(phi) = U1 e^{-iX_1(phi)} ... e^{-iX_L(phi)}
struct TransformChain {
    int n = 0;
    CMatrix U1;
    std::vector<QPOperator> generators;

    CMatrix evaluate(const std::vector<double>& phi) const;
    std::vector<CMatrix> samples(const TorusGrid& grid) const;
    TransformChain truncated(std::size_t count) const;
};

struct KamConfig {
    double r = 0.5;
    double theta = 0.5;
    double gamma0 = 0.1;
    double tau = 2.5;
    double d = 1.0;
    double d2 = 0.5;
    int Kmax = 4;
    int max_stages = 12;
    double tol = 0.0;
    double floor = -1.0; // < 0 selects 100 eps_mach ||A||
    SobolevFrame frame;
};

struct LedgerRow {
    int stage = 0;
    double r_l = 0.0;
    double sigma_l = 0.0;
    double eps1_measured = 0.0;
    double eps1_scheduled = 0.0;
    double gamma_l = 0.0;
    int K_l = 0;
    double min_divisor = 0.0;
    double offdiag_norm = 0.0;
    double x_norm = 0.0;
    double c_star = 0.0;
    double projection_tail = 0.0;
    bool above_floor = true;
};

struct KamRun {
    RVector A_inf;
    QPOperator P_final;
    TransformChain chain;
    std::vector<LedgerRow> ledger;
    double b = 0.0;
    double initial_smallness = 0.0; // ||P0||_r / r^b
    double floor = 0.0;
    bool converged = false;
    std::string stop_reason;
};

KamRun run_kam(const RVector& A0, const QPOperator& P0, const std::vector<double>& omega, const KamConfig& cfg,
               const CMatrix& U1 = CMatrix());

// sup over the grid of ||Phi^dagger H Phi - i Phi^dagger Phidot - diag(lambda)||, Phidot by spectral differentiation.
double conjugation_residual(const RVector& A, const QPOperator& P, const std::vector<CMatrix>& phi_samples,
                            const std::vector<double>& omega, const RVector& lambda, const TorusGrid& grid);

// Multiplier of the smoothing operator: 1 on |y| <= 1/2, 0 on |y| >= 1.
double smoothing_multiplier(double y);
QPOperator smoothing_operator(const QPOperator& P, double r);

// max(sum ||P_k||, sum |k|^ell ||P_k||)
double ck_norm(const QPOperator& P, double ell);

struct SmoothnessConfig {
    double eps = 1e-3;
    double ell = 8.0;
    double m = 1.0;
    int max_stages = 8;
    double increment_tol = 1e-15;
    KamConfig kam;
};

struct SmoothnessStage {
    int nu = 0;
    double r_nu = 0.0;
    double increment_norm = 0.0;  // ||R^(nu) - R^(nu-1)||_{r_nu}
    double increment_bound = 0.0; // c1 eps M r_nu^ell (1 + 2^{2 ell})
    double conjugated_norm = 0.0; // norm of the conjugated increment fed to the analytic scheme
    double chain_difference = 0.0; // ||Phi^(nu) - Phi^(nu-1)||_{r_nu}
    double chain_bound = 0.0;      // 2 C_U r_nu^{b1}
    int kam_stages = 0;
    double residual = 0.0;         // conjugation residual of A0 + R^(nu)
    bool increment_ok = true;
    bool chain_ok = true;
};

struct SmoothnessRun {
    RVector A_inf;
    std::vector<CMatrix> phi_samples;
    std::vector<SmoothnessStage> stages;
    double M = 0.0;
    double c1 = 0.0;
    double C_U = 0.0;
    double b1 = 0.0;
    bool converged = false;
};

SmoothnessRun finite_smoothness_loop(const RVector& A0, const QPOperator& R0, const std::vector<double>& omega,
                                     const SmoothnessConfig& cfg);

} // namespace kamred
