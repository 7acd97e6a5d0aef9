#include "tucker.hpp"

#include <cmath>
#include <stdexcept>

namespace tdnc {

namespace {

void check_ranks(const Tensor3& x, Ranks3 ranks) {
    for (int n = 1; n <= 3; ++n) {
        if (ranks[n] < 1 || ranks[n] > x.dims()[n])
            throw std::invalid_argument("rank out of range for tensor dims");
    }
}

}  // namespace

uint32_t Ranks3::operator[](int mode) const {
    switch (mode) {
        case 1: return r1;
        case 2: return r2;
        case 3: return r3;
        default: throw std::invalid_argument("mode index must be 1, 2 or 3");
    }
}

std::array<Matrix, 3> hosvd_init(const Tensor3& x, Ranks3 ranks) {
    check_ranks(x, ranks);
    std::array<Matrix, 3> factors;
    for (int n = 1; n <= 3; ++n) {
        uint32_t dim = x.dims()[n], r = ranks[n];
        factors[n - 1] = (r == dim) ? Matrix::Identity(dim, dim)
                                    : leading_left_singular_subspace(unfold(x, n), int(r));
    }
    return factors;
}

HooiResult hooi(const Tensor3& x, Ranks3 ranks, const HooiSettings& settings) {
    check_ranks(x, ranks);
    if (settings.max_sweeps < 1) throw std::invalid_argument("max_sweeps must be >= 1");
    if (!(settings.relative_tolerance > 0.0))
        throw std::invalid_argument("relative_tolerance must be positive");

    HooiResult result;
    result.factors.ranks = ranks;
    std::array<Matrix, 3>& factors = result.factors.factors;
    factors = hosvd_init(x, ranks);

    auto core_norm = [&]() { return frobenius_norm(core_from_factors(x, factors)); };

    double prev = core_norm();
    result.core_norms.push_back(prev);

    for (int s = 0; s < settings.max_sweeps; ++s) {
        for (int n = 1; n <= 3; ++n) {
            if (ranks[n] == x.dims()[n]) continue;  // identity factor stays optimal
            Tensor3 projected = multi_mode_product_except(x, factors, n, /*transpose=*/true);
            factors[n - 1] = leading_left_singular_subspace(unfold(projected, n), int(ranks[n]));
        }
        double norm = core_norm();
        result.core_norms.push_back(norm);
        result.sweeps = s + 1;
        if (std::abs(norm - prev) <= settings.relative_tolerance * std::max(norm, 1e-300)) {
            result.converged = true;
            break;
        }
        prev = norm;
    }

    result.factors.core = core_from_factors(x, factors);
    return result;
}

Tensor3 core_from_factors(const Tensor3& x, const std::array<Matrix, 3>& factors) {
    return multi_mode_product_except(x, factors, 0, /*transpose=*/true);
}

Tensor3 reconstruct(const TuckerFactors& f) {
    return multi_mode_product_except(f.core, f.factors, 0, /*transpose=*/false);
}

double approximation_error(const Tensor3& x, const TuckerFactors& f) {
    double norm = frobenius_norm(x);
    if (norm == 0.0) throw std::invalid_argument("approximation error undefined for zero tensor");

    Tensor3 xhat = reconstruct(f);
    if (xhat.dims() != x.dims()) throw std::invalid_argument("factor shapes do not match tensor");
    double acc = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        double d = x.data()[i] - xhat.data()[i];
        acc += d * d;
    }
    return std::sqrt(acc) / norm;
}

}  // namespace tdnc
