#pragma once

#include "kamred/types.hpp"

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>

namespace kamred {

// One randomized bound check: every trial records lhs / rhs.
struct LemmaCheck {
    std::string name;
    int trials = 0;
    int violations = 0;
    double max_ratio = 0.0;
    nlohmann::json counterexample; // first violating trial, null when none
};

struct LemmaReport {
    std::uint64_t seed = 0;
    std::vector<LemmaCheck> checks;

    int violations() const;
    nlohmann::json to_json() const;
};

// rico recursion s_{nu+1} = c1 2^{a nu} s_nu^2
std::vector<double> rico_iterate(double c1, double a, double s0, int count);
// s_nu = (2^a c1 s0)^{2^nu} / (c1 2^{a(nu+1)})
double rico_closed(double c1, double a, double s0, int nu);
// The printed form (2^{2a} c1 s0)^{2^nu} / (c1 2^{a nu}), exact for a = 0 only.
double rico_closed_printed(double c1, double a, double s0, int nu);
// sum_nu nu^b (1/2)^{2^nu - 1}
double rico_cb(double b);

// X_ij = |P_ij| / |i - j|, X_ii = 0
CMatrix divided_matrix(const CMatrix& P);

LemmaCheck check_relie(std::uint64_t seed, int trials);
LemmaCheck check_relie_lipschitz(std::uint64_t seed, int trials);
LemmaCheck check_estia(std::uint64_t seed, int trials);
LemmaCheck check_estiy(std::uint64_t seed, int trials);
LemmaCheck check_estiy_lipschitz(std::uint64_t seed, int trials);
LemmaCheck check_pos96(std::uint64_t seed, int trials, int N = 32, double s = 1.0, double kappa = 0.5);
// Closed form against iteration, both tail bounds and the C_b bound.
LemmaCheck check_rico(std::uint64_t seed, int sets);

LemmaReport lemma_suite(std::uint64_t seed, int trials);

} // namespace kamred
