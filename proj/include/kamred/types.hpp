#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdlib>
#include <string>
#include <vector>

namespace kamred {

using cplx = std::complex<double>;
using RVector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;

// Torus Fourier index k in Z^n.
using MultiIndex = std::vector<int>;

inline int l1(const MultiIndex& k) {
    int s = 0;
    for (int v : k) s += std::abs(v);
    return s;
}

inline MultiIndex negate(const MultiIndex& k) {
    MultiIndex m(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) m[i] = -k[i];
    return m;
}

inline bool is_zero(const MultiIndex& k) {
    for (int v : k)
        if (v != 0) return false;
    return true;
}

inline double dot(const MultiIndex& k, const std::vector<double>& w) {
    double s = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) s += k[i] * w[i];
    return s;
}

// All k in Z^n with |k|_1 <= K, in lexicographic order.
std::vector<MultiIndex> diamond(int n, int K);

std::string to_string(const MultiIndex& k);

// max{1, |m|}
inline double ceil_bracket(double m) { return std::max(1.0, std::abs(m)); }

} // namespace kamred
