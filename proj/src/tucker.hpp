#pragma once

#include "tensor.hpp"

namespace tdnc {

struct Ranks3 {
    uint32_t r1 = 0, r2 = 0, r3 = 0;

    uint32_t operator[](int mode) const;
    bool operator==(const Ranks3&) const = default;
};

/// Core tensor plus one orthonormal factor per mode. Factor n has shape
/// (I_n, R_n); the core has shape (R1, R2, R3).
struct TuckerFactors {
    Tensor3 core;
    std::array<Matrix, 3> factors;
    Ranks3 ranks;
};

struct HooiSettings {
    int max_sweeps = 50;
    double relative_tolerance = 1e-6;  // on the change of the core norm
};

struct HooiResult {
    TuckerFactors factors;
    std::vector<double> core_norms;  // after init and after each sweep
    bool converged = false;
    int sweeps = 0;
};

// Per-mode truncated left singular subspaces of the unfoldings. A mode with
// full rank gets the identity factor (spans the same subspace, skips the SVD).
std::array<Matrix, 3> hosvd_init(const Tensor3& x, Ranks3 ranks);

// Alternating refinement: each sweep updates the factors in mode order
// 1, 2, 3, each from the leading singular vectors of the tensor projected
// through the other two factors. Stops when the relative change of the core
// norm drops below tolerance or after max_sweeps.
HooiResult hooi(const Tensor3& x, Ranks3 ranks, const HooiSettings& settings = {});

// Core for the given factors, applied transposed on every mode.
Tensor3 core_from_factors(const Tensor3& x, const std::array<Matrix, 3>& factors);

Tensor3 reconstruct(const TuckerFactors& f);

// Relative Frobenius error of the reconstruction. Throws on a zero tensor.
double approximation_error(const Tensor3& x, const TuckerFactors& f);

}  // namespace tdnc
