#include "kamred/weyl.hpp"

#include "kamred/error.hpp"

#include <cmath>

namespace kamred {

namespace {

double binom(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// -d^2/dx^2 with Dirichlet ends
CMatrix minus_laplacian(const CMatrix& f, double h) {
    const Eigen::Index M = f.rows();
    CMatrix out(M, f.cols());
    for (Eigen::Index i = 0; i < M; ++i) {
        out.row(i) = 2.0 * f.row(i);
        if (i > 0) out.row(i) -= f.row(i - 1);
        if (i + 1 < M) out.row(i) -= f.row(i + 1);
    }
    return out / (h * h);
}

// -i d/dx, central differences
CMatrix momentum(const CMatrix& f, double h) {
    const Eigen::Index M = f.rows();
    CMatrix out = CMatrix::Zero(M, f.cols());
    for (Eigen::Index i = 0; i < M; ++i) {
        if (i + 1 < M) out.row(i) += f.row(i + 1);
        if (i > 0) out.row(i) -= f.row(i - 1);
    }
    return out * cplx(0.0, -1.0 / (2.0 * h));
}

CMatrix apply_xi_power(CMatrix f, int b, double h) {
    for (int q = 0; q < b / 2; ++q) f = minus_laplacian(f, h);
    if (b % 2) f = momentum(f, h);
    return f;
}

} // namespace

CMatrix weyl_monomial(const EigenBasis& basis, int a, int b) {
    if (a < 0 || b < 0) throw validation_error("weyl", "negative power");
    const Eigen::Index M = basis.M;
    RVector x = Eigen::Map<const RVector>(basis.x.data(), M);
    CMatrix V = basis.vectors.cast<cplx>();
    CMatrix acc = CMatrix::Zero(M, basis.N);
    for (int m = 0; m <= a; ++m) {
        CMatrix f = V;
        RVector right = x.array().pow(a - m);
        RVector left = x.array().pow(m);
        f = right.asDiagonal() * f;
        f = apply_xi_power(f, b, basis.h);
        acc += binom(a, m) * (left.asDiagonal() * f);
    }
    acc *= std::pow(0.5, a);
    CMatrix W = basis.h * (V.adjoint() * acc);
    return 0.5 * (W + W.adjoint());
}

std::map<MultiIndex, CMatrix> quantize(const PhaseSymbol& p, const EigenBasis& basis) {
    std::map<std::pair<int, int>, CMatrix> cache;
    std::map<MultiIndex, CMatrix> out;
    for (const auto& [key, c] : p.terms()) {
        auto ab = std::make_pair(key.a, key.b);
        auto it = cache.find(ab);
        if (it == cache.end()) it = cache.emplace(ab, weyl_monomial(basis, key.a, key.b)).first;
        auto [slot, fresh] = out.try_emplace(key.k, CMatrix::Zero(basis.N, basis.N));
        slot->second += c * it->second;
    }
    return out;
}

} // namespace kamred
