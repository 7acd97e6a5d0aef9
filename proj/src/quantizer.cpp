#include "quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace tdnc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

float round_toward_zero_down(double v) {
    float f = float(v);
    if (double(f) > v) f = std::nextafterf(f, -std::numeric_limits<float>::infinity());
    return f;
}

float round_toward_inf(double v) {
    float f = float(v);
    if (double(f) < v) f = std::nextafterf(f, std::numeric_limits<float>::infinity());
    return f;
}

}  // namespace

void QuantizerModel::validate() const {
    if (intervals < 1 || intervals > kMaxIntervals)
        throw std::invalid_argument("quantizer intervals out of supported range");
    if (boundaries.size() != intervals + 1 || representatives.size() != intervals)
        throw std::invalid_argument("quantizer model has inconsistent sizes");
    if (boundaries[0] != 0.0)
        throw std::invalid_argument("first decision boundary must be 0");
    for (uint32_t q = 0; q < intervals; ++q) {
        if (!(boundaries[q] < boundaries[q + 1]))
            throw std::invalid_argument("decision boundaries must be strictly increasing");
        if (!std::isfinite(representatives[q]))
            throw std::invalid_argument("representative values must be finite");
        if (representatives[q] < boundaries[q] || representatives[q] > boundaries[q + 1])
            throw std::invalid_argument("representative outside its decision interval");
    }
    if (!weights.empty() && weights.size() != intervals)
        throw std::invalid_argument("quantizer weights size mismatch");
}

uint32_t QuantizerModel::chunk_of(double magnitude) const {
    uint32_t m = 1;
    while (m < intervals && magnitude >= boundaries[m]) ++m;
    return m;
}

namespace {

struct SortedSamples {
    std::vector<double> value;
    std::vector<double> weight;
    std::vector<double> cum_weight;   // cum_weight[i] = sum of weights [0, i)
    std::vector<double> cum_sum;      // weighted value prefix
    std::vector<double> cum_sq;       // weighted squared value prefix
    size_t distinct = 0;
};

SortedSamples prepare(std::span<const double> values, std::span<const double> weights) {
    if (values.empty()) throw std::invalid_argument("fit_lloyd: empty input");
    if (!weights.empty() && weights.size() != values.size())
        throw std::invalid_argument("fit_lloyd: weights size mismatch");

    size_t n = values.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return values[a] < values[b]; });

    SortedSamples s;
    s.value.resize(n);
    s.weight.resize(n);
    for (size_t i = 0; i < n; ++i) {
        double v = values[order[i]];
        double w = weights.empty() ? 1.0 : weights[order[i]];
        if (!std::isfinite(v) || v < 0.0)
            throw std::invalid_argument("fit_lloyd: samples must be finite and non-negative");
        if (!(w > 0.0) || !std::isfinite(w))
            throw std::invalid_argument("fit_lloyd: weights must be positive and finite");
        s.value[i] = v;
        s.weight[i] = w;
    }
    s.cum_weight.resize(n + 1, 0.0);
    s.cum_sum.resize(n + 1, 0.0);
    s.cum_sq.resize(n + 1, 0.0);
    for (size_t i = 0; i < n; ++i) {
        s.cum_weight[i + 1] = s.cum_weight[i] + s.weight[i];
        s.cum_sum[i + 1] = s.cum_sum[i] + s.weight[i] * s.value[i];
        s.cum_sq[i + 1] = s.cum_sq[i] + s.weight[i] * s.value[i] * s.value[i];
    }
    s.distinct = 1;
    for (size_t i = 1; i < n; ++i)
        if (s.value[i] != s.value[i - 1]) ++s.distinct;
    return s;
}

// Initial representatives at the weighted (q - 0.5)/M quantiles, nudged onto
// later distinct values where duplicates would collide.
std::vector<double> initial_representatives(const SortedSamples& s, uint32_t m) {
    size_t n = s.value.size();
    double total = s.cum_weight[n];
    std::vector<double> reps(m);
    for (uint32_t q = 0; q < m; ++q) {
        double target = (q + 0.5) / m * total;
        size_t idx = size_t(std::upper_bound(s.cum_weight.begin() + 1, s.cum_weight.end(), target) -
                            (s.cum_weight.begin() + 1));
        if (idx >= n) idx = n - 1;
        double rep = s.value[idx];
        if (q > 0 && rep <= reps[q - 1]) {
            while (idx < n && s.value[idx] <= reps[q - 1]) ++idx;
            if (idx >= n)
                throw std::invalid_argument("fit_lloyd: fewer distinct samples than intervals");
            rep = s.value[idx];
        }
        reps[q] = rep;
    }
    return reps;
}

LloydFit run_lloyd(const SortedSamples& s, uint32_t intervals, double tolerance,
                   int max_iterations) {
    if (intervals < 1 || intervals > kMaxIntervals)
        throw std::invalid_argument("fit_lloyd: intervals out of supported range");
    if (s.distinct < intervals)
        throw std::invalid_argument("fit_lloyd: fewer distinct samples than intervals");
    if (max_iterations < 1) throw std::invalid_argument("fit_lloyd: max_iterations must be >= 1");

    size_t n = s.value.size();
    double total_weight = s.cum_weight[n];
    std::vector<double> reps = initial_representatives(s, intervals);
    std::vector<size_t> split(intervals + 1), prev_split;

    LloydFit fit;
    double prev_mse = kInf;
    for (int iter = 0; iter < max_iterations; ++iter) {
        // Cell q covers sorted indices [split[q], split[q+1]).
        split[0] = 0;
        split[intervals] = n;
        for (uint32_t q = 1; q < intervals; ++q) {
            double b = 0.5 * (reps[q - 1] + reps[q]);
            split[q] = size_t(std::lower_bound(s.value.begin(), s.value.end(), b) -
                              s.value.begin());
        }

        double mse = 0.0;
        for (uint32_t q = 0; q < intervals; ++q) {
            size_t lo = split[q], hi = split[q + 1];
            double w = s.cum_weight[hi] - s.cum_weight[lo];
            if (w > 0.0) reps[q] = (s.cum_sum[hi] - s.cum_sum[lo]) / w;
            mse += (s.cum_sq[hi] - s.cum_sq[lo]) - 2.0 * reps[q] * (s.cum_sum[hi] - s.cum_sum[lo]) +
                   reps[q] * reps[q] * w;
        }
        mse /= total_weight;
        fit.mse_history.push_back(mse);
        fit.iterations = iter + 1;

        if (split == prev_split || mse == 0.0) {
            fit.converged = true;  // assignment fixed point
            break;
        }
        prev_split = split;
        if (std::isfinite(prev_mse) && std::abs(prev_mse - mse) <= tolerance * prev_mse) break;
        prev_mse = mse;
    }

    QuantizerModel& model = fit.model;
    model.intervals = intervals;
    model.boundaries.resize(intervals + 1);
    model.boundaries[0] = 0.0;
    for (uint32_t q = 1; q < intervals; ++q)
        model.boundaries[q] = 0.5 * (reps[q - 1] + reps[q]);
    model.boundaries[intervals] = kInf;
    model.representatives = reps;
    model.weights.resize(intervals);
    for (uint32_t q = 0; q < intervals; ++q) {
        size_t lo = size_t(std::lower_bound(s.value.begin(), s.value.end(), model.boundaries[q]) -
                           s.value.begin());
        size_t hi = q + 1 == intervals
                        ? n
                        : size_t(std::lower_bound(s.value.begin(), s.value.end(),
                                                  model.boundaries[q + 1]) -
                                 s.value.begin());
        model.weights[q] = (s.cum_weight[hi] - s.cum_weight[lo]) / total_weight;
    }
    model.validate();
    return fit;
}

}  // namespace

LloydFit fit_lloyd(std::span<const double> samples, uint32_t intervals, double tolerance,
                   int max_iterations) {
    return run_lloyd(prepare(samples, {}), intervals, tolerance, max_iterations);
}

LloydFit fit_lloyd_weighted(std::span<const double> values, std::span<const double> weights,
                            uint32_t intervals, double tolerance, int max_iterations) {
    return run_lloyd(prepare(values, weights), intervals, tolerance, max_iterations);
}

ChunkAssignment assign_chunks(const Tensor3& core, const QuantizerModel& model) {
    model.validate();
    ChunkAssignment out;
    out.chunk.resize(core.size());
    out.chunks.assign(model.intervals, ChunkSideInfo{});

    std::vector<double> lo(model.intervals, kInf), hi(model.intervals, 0.0);
    for (size_t i = 0; i < core.size(); ++i) {
        double mag = std::abs(core.data()[i]);
        uint32_t m = model.chunk_of(mag);
        out.chunk[i] = uint8_t(m);
        ChunkSideInfo& c = out.chunks[m - 1];
        ++c.population;
        lo[m - 1] = std::min(lo[m - 1], mag);
        hi[m - 1] = std::max(hi[m - 1], mag);
    }
    for (uint32_t m = 0; m < model.intervals; ++m) {
        if (out.chunks[m].population == 0) continue;
        out.chunks[m].min_magnitude = round_toward_zero_down(lo[m]);
        out.chunks[m].max_magnitude = round_toward_inf(hi[m]);
    }
    return out;
}

namespace {

QuantizedCore quantize_against(const Tensor3& core, const QuantizerModel& model,
                               std::vector<uint8_t> chunk, std::vector<ChunkSideInfo> side_info) {
    QuantizedCore q;
    q.dims = core.dims();
    q.intervals = model.intervals;
    q.chunk = std::move(chunk);
    q.chunks = std::move(side_info);
    q.signs.resize(core.size());
    q.codes.resize(core.size());

    for (size_t i = 0; i < core.size(); ++i) {
        double v = core.data()[i];
        q.signs[i] = v < 0.0 ? 1 : 0;  // exact zero stores sign 0
        uint32_t m = q.chunk[i];
        const ChunkSideInfo& c = q.chunks[m - 1];
        double range = double(c.max_magnitude) - double(c.min_magnitude);
        uint32_t top = (uint32_t(1) << m) - 1;
        if (range <= 0.0) {
            q.codes[i] = 0;
            continue;
        }
        double scaled = std::round(double(uint32_t(1) << m) / range *
                                   (std::abs(v) - double(c.min_magnitude)));
        q.codes[i] = uint32_t(std::clamp(scaled, 0.0, double(top)));
    }
    return q;
}

}  // namespace

QuantizedCore quantize_core(const Tensor3& core, const QuantizerModel& model) {
    ChunkAssignment assignment = assign_chunks(core, model);
    return quantize_against(core, model, std::move(assignment.chunk),
                            std::move(assignment.chunks));
}

QuantizedCore quantize_core(const Tensor3& core, const QuantizerModel& model,
                            const std::vector<ChunkSideInfo>& side_info) {
    model.validate();
    if (side_info.size() != model.intervals)
        throw std::invalid_argument("quantize: side info size mismatch");
    std::vector<uint8_t> chunk(core.size());
    for (size_t i = 0; i < core.size(); ++i) {
        uint32_t m = model.chunk_of(std::abs(core.data()[i]));
        if (!side_info[m - 1].present())
            throw std::invalid_argument("quantize: element falls in a chunk with no side info");
        chunk[i] = uint8_t(m);
    }
    return quantize_against(core, model, std::move(chunk), side_info);
}

Tensor3 dequantize_core(const QuantizedCore& q) {
    size_t n = q.dims.count();
    if (q.signs.size() != n || q.chunk.size() != n || q.codes.size() != n ||
        q.chunks.size() != q.intervals)
        throw std::invalid_argument("dequantize: inconsistent quantized core");

    Tensor3 out(q.dims);
    for (size_t i = 0; i < n; ++i) {
        uint32_t m = q.chunk[i];
        if (m < 1 || m > q.intervals) throw std::invalid_argument("dequantize: corrupted chunk index");
        const ChunkSideInfo& c = q.chunks[m - 1];
        if (!c.present()) throw std::invalid_argument("dequantize: element in empty chunk");
        double range = double(c.max_magnitude) - double(c.min_magnitude);
        double mag = double(c.min_magnitude);
        if (range > 0.0)
            mag += double(q.codes[i]) * range / double(uint32_t(1) << m);
        out.data()[i] = q.signs[i] ? -mag : mag;
    }
    return out;
}

}  // namespace tdnc
