#pragma once

#include "kamred/types.hpp"

#include <cstdint>
#include <functional>

namespace kamred {

struct DiophantineParams {
    double gamma = 1e-3;
    double tau = 2.5;
    int Kmax = 50;

    void validate(int n) const;
};

enum class DiophantineSet { Omega0, Omega1 };

// Outcome of a divisor scan; `k`/`k0` name the worst checked divisor relative to its threshold.
struct DivisorScan {
    bool accepted = true;
    MultiIndex k;
    int k0 = 0;
    double divisor = 0.0;
    double threshold = 0.0;
    double worst_ratio = 0.0; // min |divisor| / threshold over the checked candidates
};

void check_frequency_box(const std::vector<double>& omega);

// |k.omega| >= gamma |k|^{-tau}, 0 < |k|_1 <= Kmax
DivisorScan scan_diophantine_0(const std::vector<double>& omega, const DiophantineParams& p);
// |omega.k + k0| >= gamma / (1 + |k|^tau), (k0, k) != 0, |k|_1 <= Kmax
DivisorScan scan_diophantine_1(const std::vector<double>& omega, const DiophantineParams& p);

bool is_diophantine_0(const std::vector<double>& omega, const DiophantineParams& p);
bool is_diophantine_1(const std::vector<double>& omega, const DiophantineParams& p);

// Accepted at Kmax with threshold 2 gamma and at 2 Kmax with gamma.
bool tail_stable_0(const std::vector<double>& omega, const DiophantineParams& p);

struct MeasureEstimate {
    double fraction = 0.0;
    double ci95 = 0.0;
    std::int64_t failures = 0;
    std::int64_t samples = 0;
};

MeasureEstimate excluded_measure(int n, const DiophantineParams& p, DiophantineSet set, std::int64_t samples,
                                 std::uint64_t seed);

// Sample point `index` of the Monte Carlo stream, uniform in [1,2]^n.
std::vector<double> sample_frequency(int n, std::uint64_t seed, std::uint64_t index);

struct ResonanceQuery {
    int i = 1, j = 1;
    MultiIndex k;
    double d = 1.0;
    double alpha = 0.1;
};

// lambda_j(omega)
using LambdaFamily = std::function<double(int, const std::vector<double>&)>;

struct ResonanceWidth {
    double measured = 0.0;
    double bound = 0.0;
    bool nonempty = false;
    bool predicted_empty = false;     // |k| < (K0/4)|i^d - j^d| with alpha <= K0/2
    bool hypothesis_ok = true;        // gap, Lipschitz and K1 <= K0/8 hypotheses
    double observed_gap = 0.0;        // min |lambda_i - lambda_j| / |i^d - j^d| along the sweep
    double observed_lipschitz = 0.0;  // max |Delta(lambda_i - lambda_j)| / |Delta omega| / |i^d - j^d|
};

// Sweeps omega = base + r v, v in {-1,1}^n with k.v = |k|_1, through the box.
ResonanceWidth resonance_width(const LambdaFamily& lambda, const ResonanceQuery& q, double K0, double K1,
                               const std::vector<double>& base, int sweep_samples = 20000);

} // namespace kamred
