#include "kamred/diophantine.hpp"

#include "kamred/error.hpp"
#include "kamred/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace kamred {

void DiophantineParams::validate(int n) const {
    if (!(gamma >= 0.0)) throw validation_error("diophantine", "gamma must be nonnegative");
    if (!(tau > n - 1)) throw validation_error("diophantine", "tau must exceed n - 1");
    if (Kmax < 1) throw validation_error("diophantine", "Kmax must be positive");
}

void check_frequency_box(const std::vector<double>& omega) {
    if (omega.empty()) throw validation_error("frequency", "empty frequency vector");
    for (double w : omega)
        if (!(w >= 1.0 && w <= 2.0)) throw validation_error("frequency", "omega must lie in [1,2]^n");
}

namespace {

void consider(DivisorScan& s, const MultiIndex& k, int k0, double divisor, double threshold) {
    double ratio = threshold > 0.0 ? std::abs(divisor) / threshold : std::numeric_limits<double>::infinity();
    if (s.k.empty() || ratio < s.worst_ratio) {
        s.worst_ratio = ratio;
        s.k = k;
        s.k0 = k0;
        s.divisor = divisor;
        s.threshold = threshold;
    }
    if (std::abs(divisor) < threshold) s.accepted = false;
}

// Enumerates k' = (k_2..k_n) with |k'|_1 <= K.
template <class F>
void for_each_tail(int n, int K, F&& f) {
    MultiIndex kp(n - 1, 0);
    std::function<void(int, int)> rec = [&](int pos, int budget) {
        if (pos == n - 1) {
            f(kp, K - budget);
            return;
        }
        for (int v = -budget; v <= budget; ++v) {
            kp[pos] = v;
            rec(pos + 1, budget - std::abs(v));
        }
        kp[pos] = 0;
    };
    rec(0, K);
}

struct Omega0Scanner {
    int n;
    DiophantineParams p;
    std::vector<double> thr; // gamma |k|^{-tau}
    std::vector<MultiIndex> tails;
    std::vector<int> tail_norm;

    Omega0Scanner(int n_, const DiophantineParams& p_) : n(n_), p(p_) {
        thr.resize(p.Kmax + 1, 0.0);
        for (int m = 1; m <= p.Kmax; ++m) thr[m] = p.gamma * std::pow(m, -p.tau);
        for_each_tail(n, p.Kmax, [&](const MultiIndex& kp, int used) {
            tails.push_back(kp);
            tail_norm.push_back(used);
        });
    }

    // Returns true when accepted; fills the scan if requested.
    bool run(const std::vector<double>& w, DivisorScan* scan) const {
        bool ok = true;
        MultiIndex k(n);
        for (std::size_t t = 0; t < tails.size(); ++t) {
            const MultiIndex& kp = tails[t];
            double c = 0.0;
            for (int m = 1; m < n; ++m) c += kp[m - 1] * w[m];
            const int budget = p.Kmax - tail_norm[t];
            int cand[2];
            int ncand = 0;
            if (tail_norm[t] == 0) {
                cand[ncand++] = 1;
            } else if (p.gamma < 1.0) {
                double q = -c / w[0];
                cand[ncand++] = static_cast<int>(std::floor(q));
                cand[ncand++] = static_cast<int>(std::ceil(q));
                if (ncand == 2 && cand[0] == cand[1]) ncand = 1;
            }
            auto test = [&](int k1) {
                if (std::abs(k1) > budget) return;
                int norm = std::abs(k1) + tail_norm[t];
                if (norm == 0) return;
                double div = k1 * w[0] + c;
                if (scan) {
                    k[0] = k1;
                    for (int m = 1; m < n; ++m) k[m] = kp[m - 1];
                    consider(*scan, k, 0, div, thr[norm]);
                } else if (std::abs(div) < thr[norm]) {
                    ok = false;
                }
            };
            if (ncand > 0 || tail_norm[t] == 0) {
                for (int i = 0; i < ncand; ++i) test(cand[i]);
            } else {
                for (int k1 = -budget; k1 <= budget; ++k1) test(k1);
            }
            if (!ok && !scan) return false;
        }
        return scan ? scan->accepted : ok;
    }
};

struct Omega1Scanner {
    int n;
    DiophantineParams p;
    std::vector<MultiIndex> ks;
    std::vector<double> thr;

    Omega1Scanner(int n_, const DiophantineParams& p_) : n(n_), p(p_) {
        for (const auto& k : diamond(n, p.Kmax)) {
            // k and -k give the same set of divisors up to sign of k0
            bool keep = false;
            for (int v : k) {
                if (v != 0) {
                    keep = v > 0;
                    break;
                }
            }
            if (!keep) continue;
            ks.push_back(k);
            thr.push_back(p.gamma / (1.0 + std::pow(l1(k), p.tau)));
        }
    }

    bool run(const std::vector<double>& w, DivisorScan* scan) const {
        bool ok = true;
        // k = 0 row: |k0| >= 1
        if (p.gamma > 1.0) {
            if (scan)
                consider(*scan, MultiIndex(n, 0), 1, 1.0, p.gamma);
            else
                return false;
        }
        for (std::size_t t = 0; t < ks.size(); ++t) {
            double wk = dot(ks[t], w);
            double f = std::floor(-wk), c = std::ceil(-wk);
            for (double k0 : {f, c}) {
                double div = wk + k0;
                if (scan)
                    consider(*scan, ks[t], static_cast<int>(k0), div, thr[t]);
                else if (std::abs(div) < thr[t]) {
                    ok = false;
                    break;
                }
            }
            if (!ok) return false;
        }
        return scan ? scan->accepted : ok;
    }
};

} // namespace

DivisorScan scan_diophantine_0(const std::vector<double>& omega, const DiophantineParams& p) {
    check_frequency_box(omega);
    p.validate(static_cast<int>(omega.size()));
    DivisorScan s;
    Omega0Scanner(static_cast<int>(omega.size()), p).run(omega, &s);
    return s;
}

DivisorScan scan_diophantine_1(const std::vector<double>& omega, const DiophantineParams& p) {
    check_frequency_box(omega);
    p.validate(static_cast<int>(omega.size()));
    DivisorScan s;
    Omega1Scanner(static_cast<int>(omega.size()), p).run(omega, &s);
    return s;
}

bool is_diophantine_0(const std::vector<double>& omega, const DiophantineParams& p) {
    return scan_diophantine_0(omega, p).accepted;
}

bool is_diophantine_1(const std::vector<double>& omega, const DiophantineParams& p) {
    return scan_diophantine_1(omega, p).accepted;
}

bool tail_stable_0(const std::vector<double>& omega, const DiophantineParams& p) {
    DiophantineParams twice = p;
    twice.gamma = 2.0 * p.gamma;
    DiophantineParams wide = p;
    wide.Kmax = 2 * p.Kmax;
    return is_diophantine_0(omega, twice) && is_diophantine_0(omega, wide);
}

std::vector<double> sample_frequency(int n, std::uint64_t seed, std::uint64_t index) {
    std::vector<double> w(n);
    for (int d = 0; d < n; ++d) w[d] = 1.0 + counter_uniform(seed, index, static_cast<std::uint64_t>(d));
    return w;
}

MeasureEstimate excluded_measure(int n, const DiophantineParams& p, DiophantineSet set, std::int64_t samples,
                                 std::uint64_t seed) {
    if (n < 1) throw validation_error("measure", "n must be positive");
    if (samples < 10000) throw validation_error("measure", "need at least 1e4 samples");
    p.validate(n);
    MeasureEstimate est;
    est.samples = samples;
    if (p.gamma == 0.0) return est;
    Omega0Scanner s0(n, p);
    Omega1Scanner s1(n, p);
    std::vector<std::int64_t> fails(static_cast<std::size_t>(worker_count()), 0);
    parallel_chunks(samples, [&](std::int64_t b, std::int64_t e, int worker) {
        std::int64_t local = 0;
        for (std::int64_t i = b; i < e; ++i) {
            auto w = sample_frequency(n, seed, static_cast<std::uint64_t>(i));
            bool ok = set == DiophantineSet::Omega0 ? s0.run(w, nullptr) : s1.run(w, nullptr);
            if (!ok) ++local;
        }
        fails[worker] = local;
    });
    for (auto f : fails) est.failures += f;
    est.fraction = static_cast<double>(est.failures) / static_cast<double>(samples);
    est.ci95 = 1.96 * std::sqrt(est.fraction * (1.0 - est.fraction) / static_cast<double>(samples));
    return est;
}

ResonanceWidth resonance_width(const LambdaFamily& lambda, const ResonanceQuery& q, double K0, double K1,
                               const std::vector<double>& base, int sweep_samples) {
    const int n = static_cast<int>(q.k.size());
    if (n < 1 || static_cast<int>(base.size()) != n) throw validation_error("resonance", "dimension mismatch");
    if (std::abs(q.i - q.j) + l1(q.k) == 0) throw validation_error("resonance", "|i-j| + |k| must be nonzero");
    if (!(K0 > 0.0) || !(q.alpha > 0.0)) throw validation_error("resonance", "K0 and alpha must be positive");
    check_frequency_box(base);

    ResonanceWidth out;
    const double gap = std::abs(std::pow(q.i, q.d) - std::pow(q.j, q.d));
    const double width = q.alpha * ceil_bracket(std::pow(q.i, q.d) - std::pow(q.j, q.d));
    const double cross = std::pow(static_cast<double>(n), 0.5 * (n - 1));
    out.bound = 4.0 * q.alpha / K0 * cross;
    out.predicted_empty = q.alpha <= K0 / 2.0 && l1(q.k) < K0 / 4.0 * gap;

    std::vector<double> v(n);
    for (int m = 0; m < n; ++m) v[m] = q.k[m] < 0 ? -1.0 : 1.0;
    // r range keeping base + r v in [1,2]^n
    double rlo = -1e300, rhi = 1e300;
    for (int m = 0; m < n; ++m) {
        double a = (1.0 - base[m]) / v[m], b = (2.0 - base[m]) / v[m];
        rlo = std::max(rlo, std::min(a, b));
        rhi = std::min(rhi, std::max(a, b));
    }
    auto point = [&](double r) {
        std::vector<double> w(n);
        for (int m = 0; m < n; ++m) w[m] = std::clamp(base[m] + r * v[m], 1.0, 2.0);
        return w;
    };
    auto diff = [&](double r) {
        auto w = point(r);
        return lambda(q.i, w) - lambda(q.j, w);
    };
    auto s = [&](double r) {
        auto w = point(r);
        return diff(r) + dot(q.k, w);
    };
    auto inside = [&](double r) { return std::abs(s(r)) < width; };

    const int S = std::max(100, sweep_samples);
    const double dr = (rhi - rlo) / S;
    double prev_r = rlo, prev_diff = diff(rlo);
    bool prev_in = inside(rlo);
    double length = 0.0;
    double enter = prev_in ? rlo : 0.0;
    out.observed_gap = gap > 0 ? std::abs(prev_diff) / gap : 0.0;
    auto refine = [&](double a, double b) {
        // a and b on opposite sides of the set boundary
        bool ia = inside(a);
        for (int it = 0; it < 60; ++it) {
            double m = 0.5 * (a + b);
            (inside(m) == ia ? a : b) = m;
        }
        return 0.5 * (a + b);
    };
    for (int i = 1; i <= S; ++i) {
        double r = (i == S) ? rhi : rlo + i * dr;
        double dcur = diff(r);
        if (gap > 0) {
            out.observed_gap = std::min(out.observed_gap, std::abs(dcur) / gap);
            double dw = std::abs(r - prev_r) * std::sqrt(static_cast<double>(n));
            if (dw > 0) out.observed_lipschitz = std::max(out.observed_lipschitz, std::abs(dcur - prev_diff) / dw / gap);
        }
        bool in = inside(r);
        if (in && !prev_in) enter = refine(prev_r, r);
        if (!in && prev_in) length += refine(prev_r, r) - enter;
        if (in) out.nonempty = true;
        prev_in = in;
        prev_r = r;
        prev_diff = dcur;
    }
    if (prev_in) length += rhi - enter;
    out.measured = length * cross;

    if (gap > 0) {
        if (out.observed_gap < K0 * (1.0 - 1e-12)) out.hypothesis_ok = false;
        if (out.observed_lipschitz > K1 * (1.0 + 1e-9) + 1e-12) out.hypothesis_ok = false;
    }
    if (K1 > K0 / 8.0) out.hypothesis_ok = false;
    if (q.alpha > K0 / 2.0) out.hypothesis_ok = false;
    if (out.hypothesis_ok && out.measured > out.bound * (1.0 + 1e-9))
        throw numerical_error("bound-violation", "resonance width " + std::to_string(out.measured) +
                                                     " exceeds bound " + std::to_string(out.bound));
    return out;
}

} // namespace kamred
