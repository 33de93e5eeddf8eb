#include "kamred/basis_spectra.hpp"

#include "kamred/classical.hpp"
#include "kamred/error.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>

namespace kamred {

PotentialSpec PotentialSpec::monomial(int l) {
    PotentialSpec p;
    p.l = l;
    p.coeffs.assign(static_cast<std::size_t>(2 * l + 1), 0.0);
    p.coeffs.back() = 1.0;
    return p;
}

double PotentialSpec::value(double x) const {
    double v = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) v = v * x + *it;
    return v;
}

double PotentialSpec::derivative(double x) const {
    double v = 0.0;
    for (std::size_t p = coeffs.size() - 1; p >= 1; --p) v = v * x + p * coeffs[p];
    return v;
}

double PotentialSpec::second_derivative(double x) const {
    double v = 0.0;
    for (std::size_t p = coeffs.size() - 1; p >= 2; --p) v = v * x + p * (p - 1.0) * coeffs[p];
    return v;
}

void PotentialSpec::validate(double scan) const {
    if (l < 1) throw validation_error("potential", "l must be >= 1");
    if (coeffs.size() != static_cast<std::size_t>(2 * l + 1))
        throw validation_error("potential", "expected 2l+1 coefficients");
    if (!(coeffs.back() > 0.0)) throw validation_error("potential", "leading coefficient must be positive");
    if (std::abs(coeffs[0]) > 1e-14) throw validation_error("potential", "V(0) must vanish");
    if (scan <= 0.0) scan = 4.0;
    const int samples = 4000;
    for (int side : {-1, 1}) {
        for (int i = 1; i <= samples; ++i) {
            double x = side * scan * i / samples;
            if (!(derivative(x) * x > 0.0))
                throw validation_error("potential", "V'(x) vanishes or changes sign at x = " + std::to_string(x));
        }
    }
}

double bohr_sommerfeld_level(const PotentialSpec& potential, int j) {
    const double target = 2.0 * std::numbers::pi * (j - 0.5);
    double lo = 0.0, hi = 1.0;
    while (phase_area(potential, hi) < target) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        (phase_area(potential, mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

namespace {

int sturm_count(const std::vector<double>& d, const std::vector<double>& e, double mu) {
    int count = 0;
    double q = d[0] - mu;
    const double tiny = 1e-300;
    if (q < 0) ++count;
    for (std::size_t i = 1; i < d.size(); ++i) {
        if (q == 0.0) q = tiny;
        q = d[i] - mu - e[i - 1] * e[i - 1] / q;
        if (q < 0) ++count;
    }
    return count;
}

// Solve (T - mu) y = b for symmetric tridiagonal T by Gaussian elimination with partial pivoting.
std::vector<double> tridiagonal_shifted_solve(const std::vector<double>& d, const std::vector<double>& e, double mu,
                                              std::vector<double> b) {
    const std::size_t n = d.size();
    std::vector<double> a(n), c(n, 0.0), f(n, 0.0); // diagonal, first and second superdiagonal
    std::vector<double> lo(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = d[i] - mu;
        if (i + 1 < n) c[i] = e[i];
        if (i > 0) lo[i] = e[i - 1];
    }
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a[i]) + 2.0 * std::abs(c[i]));
    const double guard = std::numeric_limits<double>::epsilon() * scale;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        double sub = lo[i + 1];
        if (std::abs(a[i]) >= std::abs(sub)) {
            if (a[i] == 0.0) a[i] = guard;
            double m = sub / a[i];
            a[i + 1] -= m * c[i];
            if (i + 2 < n) {
                // f[i] stays 0
            }
            b[i + 1] -= m * b[i];
        } else {
            double m = a[i] / sub;
            // swap rows i and i+1
            double ai1 = a[i + 1], ci1 = (i + 1 < n - 1) ? c[i + 1] : 0.0;
            a[i] = sub;
            double old_c = c[i];
            c[i] = ai1;
            f[i] = ci1;
            a[i + 1] = old_c - m * ai1;
            if (i + 1 < n - 1) c[i + 1] = -m * ci1;
            std::swap(b[i], b[i + 1]);
            b[i + 1] -= m * b[i];
        }
    }
    if (a[n - 1] == 0.0) a[n - 1] = guard;
    std::vector<double> y(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        if (ii + 1 < n) s -= c[ii] * y[ii + 1];
        if (ii + 2 < n) s -= f[ii] * y[ii + 2];
        y[ii] = s / a[ii];
    }
    return y;
}

struct GridSolve {
    std::vector<double> lambda;
    RMatrix vectors;
    std::vector<double> x;
    double h = 0.0;
    double max_rel_residual = 0.0;
};

void build_operator(const PotentialSpec& V, double L, int M, std::vector<double>& d, std::vector<double>& e,
                    std::vector<double>& x, double& h) {
    h = 2.0 * L / (M + 1);
    d.resize(M);
    e.assign(M - 1, -1.0 / (h * h));
    x.resize(M);
    for (int i = 0; i < M; ++i) {
        x[i] = -L + (i + 1) * h;
        d[i] = 2.0 / (h * h) + V.value(x[i]);
    }
}

GridSolve grid_eigenpairs(const PotentialSpec& V, double L, int M, int N, bool want_vectors) {
    GridSolve out;
    std::vector<double> d, e;
    build_operator(V, L, M, d, e, out.x, out.h);
    out.lambda = tridiagonal_eigenvalues(d, e, 0, N, 1e-15);
    if (!want_vectors) return out;

    out.vectors.resize(M, N);
    std::vector<double> b(M);
    for (int j = 0; j < N; ++j) {
        for (int i = 0; i < M; ++i) b[i] = 1.0 + 0.5 * std::sin(0.37 * i + 0.11 * j);
        Eigen::Map<RVector> bv(b.data(), M);
        for (int it = 0; it < 4; ++it) {
            std::vector<double> y = tridiagonal_shifted_solve(d, e, out.lambda[j], b);
            Eigen::Map<RVector> yv(y.data(), M);
            for (int pass = 0; pass < 2; ++pass)
                for (int q = 0; q < j; ++q) yv -= out.vectors.col(q).dot(yv) * out.vectors.col(q);
            yv /= yv.norm();
            bv = yv;
        }
        out.vectors.col(j) = bv;
    }
    // residual in the grid 2-norm relative to lambda
    for (int j = 0; j < N; ++j) {
        const auto v = out.vectors.col(j);
        double r2 = 0.0;
        for (int i = 0; i < M; ++i) {
            double tv = d[i] * v(i);
            if (i > 0) tv += e[i - 1] * v(i - 1);
            if (i + 1 < M) tv += e[i] * v(i + 1);
            double r = tv - out.lambda[j] * v(i);
            r2 += r * r;
        }
        if (j < std::max(1, static_cast<int>(0.6 * N)))
            out.max_rel_residual = std::max(out.max_rel_residual, std::sqrt(r2) / std::abs(out.lambda[j]));
    }
    out.vectors /= std::sqrt(out.h);
    return out;
}

} // namespace

std::vector<double> tridiagonal_eigenvalues(const std::vector<double>& d, const std::vector<double>& e, int lo,
                                            int hi, double tol) {
    double gmin = d[0], gmax = d[0];
    for (std::size_t i = 0; i < d.size(); ++i) {
        double r = (i > 0 ? std::abs(e[i - 1]) : 0.0) + (i < e.size() ? std::abs(e[i]) : 0.0);
        gmin = std::min(gmin, d[i] - r);
        gmax = std::max(gmax, d[i] + r);
    }
    const double floor_abs = std::numeric_limits<double>::epsilon() * std::max(std::abs(gmin), std::abs(gmax));
    std::vector<double> out;
    double left = gmin;
    for (int k = lo; k < hi; ++k) {
        double a = left, b = gmax;
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (a + b);
            if (b - a <= std::max(tol * std::abs(mid), floor_abs)) break;
            (sturm_count(d, e, mid) > k ? b : a) = mid;
        }
        out.push_back(0.5 * (a + b));
        left = a;
    }
    return out;
}

EigenBasis solve_h0(const PotentialSpec& potential, int N, GridSpec grid) {
    if (N < 1) throw validation_error("basis", "N must be positive");
    const double lambda_est = bohr_sommerfeld_level(potential, N);
    double L = grid.half_width;
    if (L <= 0.0) {
        L = std::pow(3.0 * lambda_est / potential.leading(), 1.0 / (2.0 * potential.l));
        while (potential.value(L) < 3.0 * lambda_est || potential.value(-L) < 3.0 * lambda_est) L *= 1.05;
    }
    potential.validate(L);
    if (potential.value(L) < 2.0 * lambda_est || potential.value(-L) < 2.0 * lambda_est)
        throw validation_error("grid-too-small", "turning points of E = lambda_N lie outside [-L, L]");
    int M = grid.points > 0 ? grid.points : std::max(16 * N, 4096);
    if (M < 8 * N) throw validation_error("grid-too-small", "need at least 8N grid points");

    EigenBasis basis;
    basis.N = N;
    basis.l = potential.l;
    basis.L = L;
    basis.certified = std::max(1, static_cast<int>(0.6 * N));

    GridSolve fine = grid_eigenpairs(potential, L, grid.richardson ? 2 * M + 1 : M, N, true);
    if (fine.max_rel_residual > 1e-8)
        throw numerical_error("eigensolve", "residual " + std::to_string(fine.max_rel_residual) + " above 1e-8");
    basis.lambda_v = fine.lambda;
    if (grid.richardson) {
        GridSolve coarse = grid_eigenpairs(potential, L, M, N, false);
        for (int j = 0; j < N; ++j) basis.lambda_v[j] = (4.0 * fine.lambda[j] - coarse.lambda[j]) / 3.0;
    }
    for (int j = 1; j < N; ++j)
        if (!(basis.lambda_v[j] > basis.lambda_v[j - 1]))
            throw numerical_error("eigensolve", "spectrum not strictly increasing at j = " + std::to_string(j + 1));

    basis.M = static_cast<int>(fine.x.size());
    basis.h = fine.h;
    basis.x = std::move(fine.x);
    basis.vectors = std::move(fine.vectors);
    basis.max_residual = fine.max_rel_residual;
    for (int j = 0; j < N; ++j) {
        auto v = basis.vectors.col(j);
        double peak = v.cwiseAbs().maxCoeff();
        for (int i = 0; i < basis.M; ++i)
            if (std::abs(v(i)) > 1e-3 * peak) {
                if (v(i) < 0) v = -v;
                break;
            }
    }
    RMatrix gram = basis.vectors.transpose() * basis.vectors * basis.h;
    double worst = (gram - RMatrix::Identity(N, N)).cwiseAbs().maxCoeff();
    if (worst > 1e-10) throw numerical_error("eigensolve", "orthonormality defect " + std::to_string(worst));
    return basis;
}

AsymptoticFit check_asymptotics(const EigenBasis& basis, int l, int j_lo, int j_hi) {
    if (j_lo < 1 || j_hi < j_lo) throw validation_error("range-empty", "empty index range");
    if (j_hi > basis.certified) throw validation_error("range", "index range exceeds the certified part of the basis");
    if (j_hi - j_lo + 1 < 5) throw validation_error("fit-degenerate", "need at least 5 points");
    const double d = 2.0 * l / (l + 1.0);
    const int m = j_hi - j_lo + 1;
    double acc = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (int j = j_lo; j <= j_hi; ++j) {
        double lx = std::log(static_cast<double>(j)), ly = std::log(basis.lambda(j));
        acc += ly - d * lx;
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    AsymptoticFit fit;
    fit.c_fit = std::exp(-acc / m);
    for (int j = j_lo; j <= j_hi; ++j)
        fit.max_rel_dev = std::max(fit.max_rel_dev, std::abs(fit.c_fit * basis.lambda(j) / std::pow(j, d) - 1.0));
    fit.free_exponent = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    return fit;
}

namespace {

template <class Mat>
double weighted_norm_impl(const Mat& F, const SobolevFrame& frame) {
    if (F.rows() != F.cols()) throw validation_error("shape", "weighted norm needs a square matrix");
    const Eigen::Index n = F.rows();
    if (n == 0) return 0.0;
    Mat B = F;
    if (frame.s != 0.0 || frame.kappa != 0.0) {
        for (Eigen::Index i = 0; i < n; ++i) B.row(i) *= std::pow(static_cast<double>(i + 1), frame.s);
        for (Eigen::Index j = 0; j < n; ++j) B.col(j) *= std::pow(static_cast<double>(j + 1), -(frame.s - frame.kappa));
    }
    Eigen::BDCSVD<Mat> svd(B);
    return svd.singularValues()(0);
}

} // namespace

double weighted_operator_norm(const CMatrix& F, const SobolevFrame& frame) { return weighted_norm_impl(F, frame); }
double weighted_operator_norm(const RMatrix& F, const SobolevFrame& frame) { return weighted_norm_impl(F, frame); }

nlohmann::json to_json(const EigenBasis& basis) {
    nlohmann::json j;
    j["N"] = basis.N;
    j["L"] = basis.L;
    j["M"] = basis.M;
    j["l"] = basis.l;
    j["certified"] = basis.certified;
    j["lambda_v"] = basis.lambda_v;
    nlohmann::json vecs = nlohmann::json::array();
    for (int c = 0; c < basis.N; ++c) {
        std::vector<double> col(basis.vectors.col(c).data(), basis.vectors.col(c).data() + basis.M);
        vecs.push_back(col);
    }
    j["vectors"] = std::move(vecs);
    return j;
}

} // namespace kamred
