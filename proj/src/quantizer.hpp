#pragma once

#include "tensor.hpp"

#include <span>

namespace tdnc {

inline constexpr uint32_t kMaxIntervals = 24;

/// Scalar quantizer over non-negative magnitudes: M decision intervals with
/// boundaries b_0 <= ... <= b_M (b_0 = 0, b_M may be +inf) and one
/// representative value inside each interval. `weights` carries the fitted
/// fraction of samples per interval when the model comes from fit_lloyd.
struct QuantizerModel {
    uint32_t intervals = 0;
    std::vector<double> boundaries;       // size M + 1
    std::vector<double> representatives;  // size M
    std::vector<double> weights;          // size M, may be empty for manual models

    void validate() const;

    // Interval index in [1, M]: b_{m-1} <= magnitude < b_m, last closed above.
    uint32_t chunk_of(double magnitude) const;
};

struct LloydFit {
    QuantizerModel model;
    std::vector<double> mse_history;  // one entry per iteration
    int iterations = 0;
    bool converged = false;  // assignments reached a fixed point
};

// Lloyd's algorithm on non-negative samples. Representatives start at the
// empirical (q - 0.5)/M quantiles; each iteration sets boundaries to
// representative midpoints and representatives to cell means. Stops when the
// assignment stabilizes, the relative MSE change drops below `tolerance`, or
// after `max_iterations`.
LloydFit fit_lloyd(std::span<const double> samples, uint32_t intervals,
                   double tolerance = 1e-10, int max_iterations = 300);

// Same procedure on a weighted discrete distribution.
LloydFit fit_lloyd_weighted(std::span<const double> values, std::span<const double> weights,
                            uint32_t intervals, double tolerance = 1e-10,
                            int max_iterations = 300);

/// Side info for one chunk: extrema of the magnitudes actually present, stored
/// as 32-bit floats rounded outward so every member lies inside [min, max].
struct ChunkSideInfo {
    uint32_t population = 0;
    float min_magnitude = 0.0f;
    float max_magnitude = 0.0f;

    bool present() const { return population > 0; }
};

struct ChunkAssignment {
    std::vector<uint8_t> chunk;         // interval index per element, raster order
    std::vector<ChunkSideInfo> chunks;  // size M; empty chunks have zero side info
};

ChunkAssignment assign_chunks(const Tensor3& core, const QuantizerModel& model);

/// Quantized core tensor. Element order is raster order over the core. An
/// element in chunk m carries one sign bit plus an m-bit magnitude code, so
/// it costs m + 1 payload bits before entropy coding.
struct QuantizedCore {
    Dims3 dims;
    uint32_t intervals = 0;
    std::vector<uint8_t> signs;         // 1 = negative (exact zeros store 0)
    std::vector<uint8_t> chunk;         // 1..M per element
    std::vector<uint32_t> codes;        // in [0, 2^m - 1]
    std::vector<ChunkSideInfo> chunks;  // size M
};

// code = round(2^m / (Cmax - Cmin) * (|y| - Cmin)), half away from zero,
// clamped to [0, 2^m - 1]. A zero-range chunk always codes 0.
QuantizedCore quantize_core(const Tensor3& core, const QuantizerModel& model);

// Same mapping against externally pinned chunk extrema instead of refitting
// them from the tensor. Re-coding a reconstruction this way reproduces the
// original codes exactly; a refit would rescale them, because the top code
// reconstructs below Cmax and so shrinks the observed maximum.
QuantizedCore quantize_core(const Tensor3& core, const QuantizerModel& model,
                            const std::vector<ChunkSideInfo>& side_info);

// |y| = code * (Cmax - Cmin) / 2^m + Cmin with the sign reapplied.
Tensor3 dequantize_core(const QuantizedCore& q);

}  // namespace tdnc
