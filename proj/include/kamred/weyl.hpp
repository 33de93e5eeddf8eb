#pragma once

#include "kamred/basis_spectra.hpp"
#include "kamred/symbol.hpp"

#include <map>

namespace kamred {

// Matrix of the Weyl operator of x^a xi^b in the eigenbasis: 2^{-a} sum_m C(a,m) x^m D^b x^{a-m}, with D^2 the grid Laplacian.
CMatrix weyl_monomial(const EigenBasis& basis, int a, int b);

// Fourier modes of the Weyl quantisation of a polynomial symbol.
std::map<MultiIndex, CMatrix> quantize(const PhaseSymbol& p, const EigenBasis& basis);

} // namespace kamred
