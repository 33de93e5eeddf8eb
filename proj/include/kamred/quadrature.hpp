#pragma once

#include <functional>
#include <vector>

namespace kamred {

struct GaussRule {
    std::vector<double> nodes;   // on [-1, 1]
    std::vector<double> weights;
};

// Gauss-Legendre rule with n nodes (Newton iteration on P_n).
GaussRule gauss_legendre(int n);

double integrate(const GaussRule& rule, double a, double b, const std::function<double(double)>& f);

} // namespace kamred
