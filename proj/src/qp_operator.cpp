#include "kamred/qp_operator.hpp"

#include "kamred/error.hpp"
#include "kamred/parallel.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>

namespace kamred {

int QPOperator::kmax() const {
    int m = 0;
    for (const auto& [k, v] : modes_) m = std::max(m, l1(k));
    return m;
}

void QPOperator::set(const MultiIndex& k, const CMatrix& m) {
    if (static_cast<int>(k.size()) != n_) throw validation_error("qp", "mode index dimension mismatch");
    if (m.rows() != N_ || m.cols() != N_) throw validation_error("qp", "mode matrix size mismatch");
    modes_[k] = m;
}

void QPOperator::set_pair(const MultiIndex& k, const CMatrix& m) {
    if (is_zero(k)) {
        set(k, m);
        return;
    }
    set(k, m);
    set(negate(k), m.adjoint());
}

void QPOperator::add(const MultiIndex& k, const CMatrix& m) {
    auto it = modes_.find(k);
    if (it == modes_.end())
        set(k, m);
    else
        it->second += m;
}

CMatrix QPOperator::mode(const MultiIndex& k) const {
    auto it = modes_.find(k);
    if (it == modes_.end()) return CMatrix::Zero(N_, N_);
    return it->second;
}

CMatrix QPOperator::evaluate(const std::vector<double>& phi) const {
    CMatrix out = CMatrix::Zero(N_, N_);
    for (const auto& [k, m] : modes_) out += std::polar(1.0, dot(k, phi)) * m;
    return out;
}

QPOperator QPOperator::phase_derivative(const std::vector<double>& omega) const {
    QPOperator out(n_, N_);
    for (const auto& [k, m] : modes_)
        if (!is_zero(k)) out.modes_[k] = cplx(0.0, dot(k, omega)) * m;
    return out;
}

QPOperator QPOperator::truncate(int K) const {
    QPOperator out(n_, N_);
    for (const auto& [k, m] : modes_)
        if (l1(k) <= K) out.modes_[k] = m;
    return out;
}

QPOperator QPOperator::tail(int K) const {
    QPOperator out(n_, N_);
    for (const auto& [k, m] : modes_)
        if (l1(k) > K) out.modes_[k] = m;
    return out;
}

RVector QPOperator::average_diagonal() const {
    RVector d = RVector::Zero(N_);
    auto it = modes_.find(MultiIndex(n_, 0));
    if (it != modes_.end()) d = it->second.diagonal().real();
    return d;
}

double QPOperator::selfadjoint_defect() const {
    double worst = 0.0;
    for (const auto& [k, m] : modes_) {
        CMatrix partner = mode(negate(k));
        worst = std::max(worst, (partner - m.adjoint()).cwiseAbs().maxCoeff());
    }
    return worst;
}

double QPOperator::max_abs() const {
    double m = 0.0;
    for (const auto& [k, v] : modes_)
        if (v.size()) m = std::max(m, v.cwiseAbs().maxCoeff());
    return m;
}

QPOperator& QPOperator::operator+=(const QPOperator& o) {
    if (n_ == 0 && N_ == 0) {
        n_ = o.n_;
        N_ = o.N_;
    }
    if (o.n_ != n_ || o.N_ != N_) throw validation_error("qp", "operator shape mismatch");
    for (const auto& [k, m] : o.modes_) add(k, m);
    return *this;
}

QPOperator& QPOperator::operator-=(const QPOperator& o) {
    if (n_ == 0 && N_ == 0) {
        n_ = o.n_;
        N_ = o.N_;
    }
    if (o.n_ != n_ || o.N_ != N_) throw validation_error("qp", "operator shape mismatch");
    for (const auto& [k, m] : o.modes_) add(k, -m);
    return *this;
}

QPOperator& QPOperator::operator*=(cplx s) {
    for (auto& [k, m] : modes_) m *= s;
    return *this;
}

TorusGrid::TorusGrid(int n, int G) : n_(n), G_(G) {
    if (n < 1) throw validation_error("grid", "torus dimension must be positive");
    if (G < 1 || G % 2 == 0) throw validation_error("grid", "points per dimension must be odd");
    std::size_t total = 1;
    for (int d = 0; d < n; ++d) total *= static_cast<std::size_t>(G);
    angles_.resize(total, std::vector<double>(n));
    for (std::size_t a = 0; a < total; ++a) {
        std::size_t rest = a;
        for (int d = n - 1; d >= 0; --d) {
            angles_[a][d] = 2.0 * std::numbers::pi * static_cast<double>(rest % G) / G;
            rest /= G;
        }
    }
}

TorusGrid TorusGrid::for_kmax(int n, int Kmax) { return TorusGrid(n, 4 * Kmax + 1); }

void TorusGrid::transform(std::vector<cplx>& data, std::size_t block, int sign) const {
    using RowMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    CMatrix E(G_, G_);
    for (int q = 0; q < G_; ++q)
        for (int m = 0; m < G_; ++m)
            E(q, m) = std::polar(1.0, sign * 2.0 * std::numbers::pi * static_cast<double>((q * m) % G_) / G_);
    std::size_t outer = 1;
    for (int d = 0; d < n_; ++d) {
        std::size_t inner = block;
        for (int e = d + 1; e < n_; ++e) inner *= static_cast<std::size_t>(G_);
        for (std::size_t o = 0; o < outer; ++o) {
            Eigen::Map<RowMat> slice(data.data() + o * G_ * inner, G_, static_cast<Eigen::Index>(inner));
            RowMat t = E * slice;
            slice = t;
        }
        outer *= static_cast<std::size_t>(G_);
    }
}

std::vector<CMatrix> TorusGrid::synthesize(const QPOperator& P) const {
    if (P.n() != n_) throw validation_error("grid", "operator dimension does not match the grid");
    const int N = P.N();
    const std::size_t block = static_cast<std::size_t>(N) * N;
    std::vector<cplx> data(size() * block, cplx(0.0));
    for (const auto& [k, m] : P.modes()) {
        std::size_t idx = 0;
        for (int d = 0; d < n_; ++d) {
            if (2 * std::abs(k[d]) >= G_) throw validation_error("grid", "mode " + to_string(k) + " aliases on the grid");
            idx = idx * G_ + static_cast<std::size_t>(((k[d] % G_) + G_) % G_);
        }
        std::copy(m.data(), m.data() + block, data.begin() + static_cast<std::ptrdiff_t>(idx * block));
    }
    transform(data, block, +1);
    std::vector<CMatrix> out(size());
    for (std::size_t a = 0; a < size(); ++a)
        out[a] = Eigen::Map<const CMatrix>(data.data() + a * block, N, N);
    return out;
}

TorusGrid::Projection TorusGrid::project(const std::vector<CMatrix>& samples, int K) const {
    if (samples.size() != size()) throw validation_error("grid", "sample count does not match the grid");
    const int N = static_cast<int>(samples.front().rows());
    const std::size_t block = static_cast<std::size_t>(N) * N;
    std::vector<cplx> data(size() * block);
    for (std::size_t a = 0; a < size(); ++a) std::copy(samples[a].data(), samples[a].data() + block, data.begin() + static_cast<std::ptrdiff_t>(a * block));
    transform(data, block, -1);
    const double scale = 1.0 / static_cast<double>(size());
    Projection out{QPOperator(n_, N), 0.0};
    for (std::size_t a = 0; a < size(); ++a) {
        MultiIndex k(n_);
        std::size_t rest = a;
        for (int d = n_ - 1; d >= 0; --d) {
            int q = static_cast<int>(rest % G_);
            k[d] = q <= G_ / 2 ? q : q - G_;
            rest /= G_;
        }
        CMatrix m = Eigen::Map<const CMatrix>(data.data() + a * block, N, N) * scale;
        if (l1(k) <= K)
            out.op.set(k, m);
        else
            out.tail += weighted_operator_norm(m, SobolevFrame{});
    }
    return out;
}

double analytic_norm(const QPOperator& P, double r, const SobolevFrame& frame) {
    if (r * P.kmax() > 700.0) throw validation_error("overflow", "r * Kmax > 700, rescale the radius");
    double s = 0.0;
    for (const auto& [k, m] : P.modes()) s += std::exp(l1(k) * r) * weighted_operator_norm(m, frame);
    return s;
}

double analytic_norm_grid(const QPOperator& P, double r, int per_dim, const SobolevFrame& frame) {
    if (r * P.kmax() > 700.0) throw validation_error("overflow", "r * Kmax > 700, rescale the radius");
    const int n = P.n();
    TorusGrid grid(n, per_dim % 2 ? per_dim : per_dim + 1);
    double best = 0.0;
    const int patterns = r > 0.0 ? (1 << n) : 1;
    for (int sgn = 0; sgn < patterns; ++sgn) {
        for (std::size_t a = 0; a < grid.size(); ++a) {
            const auto& th = grid.angle(a);
            CMatrix F = CMatrix::Zero(P.N(), P.N());
            for (const auto& [k, m] : P.modes()) {
                double im = 0.0;
                for (int d = 0; d < n; ++d) im += k[d] * ((sgn >> d) & 1 ? r : -r);
                F += std::polar(std::exp(-im), dot(k, th)) * m;
            }
            best = std::max(best, weighted_operator_norm(F, frame));
        }
    }
    return best;
}

double lipschitz_norm(const std::vector<std::pair<std::vector<double>, QPOperator>>& family, double r,
                      const SobolevFrame& frame) {
    if (family.size() < 2) throw validation_error("lipschitz", "need at least two frequency samples");
    double best = 0.0;
    for (std::size_t a = 0; a < family.size(); ++a)
        for (std::size_t b = a + 1; b < family.size(); ++b) {
            double dw = 0.0;
            for (std::size_t i = 0; i < family[a].first.size(); ++i) {
                double t = family[a].first[i] - family[b].first[i];
                dw += t * t;
            }
            dw = std::sqrt(dw);
            if (dw == 0.0) throw validation_error("lipschitz", "degenerate frequency samples");
            best = std::max(best, analytic_norm(family[a].second - family[b].second, r, frame) / dw);
        }
    return best;
}

double grid_sup_norm(const std::vector<CMatrix>& samples, const SobolevFrame& frame) {
    double best = 0.0;
    for (const auto& m : samples) best = std::max(best, weighted_operator_norm(m, frame));
    return best;
}

CMatrix random_matrix(int N, std::uint64_t seed, std::uint64_t stream, double decay) {
    CMatrix B(N, N);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            const std::uint64_t idx = (stream * 1000003ULL + static_cast<std::uint64_t>(i)) * 1000003ULL + static_cast<std::uint64_t>(j);
            cplx z(counter_uniform(seed, idx, 0) - 0.5, counter_uniform(seed, idx, 1) - 0.5);
            if (decay > 0.0) z *= std::exp(-std::abs(i - j) / decay);
            B(i, j) = z;
        }
    return B;
}

QPOperator random_selfadjoint(int n, int N, int K, std::uint64_t seed, bool with_zero, double decay) {
    QPOperator P(n, N);
    std::uint64_t stream = 0;
    for (const auto& k : diamond(n, K)) {
        ++stream;
        if (is_zero(k)) {
            if (!with_zero) continue;
            CMatrix B = random_matrix(N, seed, stream, decay);
            P.set(k, 0.5 * (B + B.adjoint()));
            continue;
        }
        if (k < negate(k)) continue;
        P.set_pair(k, random_matrix(N, seed, stream, decay));
    }
    return P;
}

nlohmann::json to_json(const QPOperator& P) {
    nlohmann::json j;
    j["n"] = P.n();
    j["N"] = P.N();
    nlohmann::json modes = nlohmann::json::array();
    for (const auto& [k, m] : P.modes()) {
        nlohmann::json e;
        e["k"] = k;
        std::vector<std::vector<double>> re(m.rows(), std::vector<double>(m.cols())), im = re;
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                re[i][c] = m(i, c).real();
                im[i][c] = m(i, c).imag();
            }
        e["re"] = re;
        e["im"] = im;
        modes.push_back(e);
    }
    j["modes"] = modes;
    return j;
}

} // namespace kamred
