#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace tdnc {

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
    if (a.width != b.width || a.height != b.height || a.channels != b.channels)
        throw std::invalid_argument("psnr: image dimensions differ");
    if (a.samples.empty()) throw std::invalid_argument("psnr: empty image");

    double acc = 0.0;
    for (size_t i = 0; i < a.samples.size(); ++i) {
        double d = double(a.samples[i]) - double(b.samples[i]);
        acc += d * d;
    }
    double mse = acc / double(a.samples.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);
constexpr double kScaleWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

struct Plane {
    uint32_t w = 0, h = 0;
    std::vector<double> v;

    double at(uint32_t x, uint32_t y) const { return v[size_t(y) * w + x]; }
    double& at(uint32_t x, uint32_t y) { return v[size_t(y) * w + x]; }
};

std::vector<double> gaussian_window() {
    std::vector<double> g(kWindow);
    double sum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
        double d = i - (kWindow - 1) / 2.0;
        g[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
        sum += g[i];
    }
    for (double& x : g) x /= sum;
    return g;
}

// Separable valid-mode convolution with the 11-tap window.
Plane blur(const Plane& p, const std::vector<double>& g) {
    Plane tmp{p.w - kWindow + 1, p.h, {}};
    tmp.v.resize(size_t(tmp.w) * tmp.h);
    for (uint32_t y = 0; y < p.h; ++y) {
        for (uint32_t x = 0; x < tmp.w; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kWindow; ++k) acc += g[size_t(k)] * p.at(x + uint32_t(k), y);
            tmp.at(x, y) = acc;
        }
    }
    Plane out{tmp.w, p.h - kWindow + 1, {}};
    out.v.resize(size_t(out.w) * out.h);
    for (uint32_t y = 0; y < out.h; ++y) {
        for (uint32_t x = 0; x < out.w; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kWindow; ++k) acc += g[size_t(k)] * tmp.at(x, y + uint32_t(k));
            out.at(x, y) = acc;
        }
    }
    return out;
}

Plane multiply(const Plane& a, const Plane& b) {
    Plane out = a;
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
    return out;
}

// 2x2 mean pooling; odd trailing row/column dropped.
Plane downsample(const Plane& p) {
    Plane out{p.w / 2, p.h / 2, {}};
    out.v.resize(size_t(out.w) * out.h);
    for (uint32_t y = 0; y < out.h; ++y)
        for (uint32_t x = 0; x < out.w; ++x)
            out.at(x, y) = 0.25 * (p.at(2 * x, 2 * y) + p.at(2 * x + 1, 2 * y) +
                                   p.at(2 * x, 2 * y + 1) + p.at(2 * x + 1, 2 * y + 1));
    return out;
}

struct ScaleStats {
    double cs = 0.0;
    double luminance = 0.0;
};

ScaleStats ssim_stats(const Plane& a, const Plane& b, const std::vector<double>& g) {
    Plane mu_a = blur(a, g), mu_b = blur(b, g);
    Plane aa = blur(multiply(a, a), g), bb = blur(multiply(b, b), g), ab = blur(multiply(a, b), g);

    double cs_sum = 0.0, l_sum = 0.0;
    for (size_t i = 0; i < mu_a.v.size(); ++i) {
        double ma = mu_a.v[i], mb = mu_b.v[i];
        double va = aa.v[i] - ma * ma;
        double vb = bb.v[i] - mb * mb;
        double cov = ab.v[i] - ma * mb;
        cs_sum += (2.0 * cov + kC2) / (va + vb + kC2);
        l_sum += (2.0 * ma * mb + kC1) / (ma * ma + mb * mb + kC1);
    }
    double n = double(mu_a.v.size());
    return {cs_sum / n, l_sum / n};
}

}  // namespace

double ms_ssim(const ImageBuffer& a, const ImageBuffer& b) {
    if (a.width != b.width || a.height != b.height || a.channels != b.channels)
        throw std::invalid_argument("ms_ssim: image dimensions differ");

    uint32_t min_dim = std::min(a.width, a.height);
    int scales = 0;
    while (scales < 5 && (min_dim >> scales) >= kWindow) ++scales;
    if (scales == 0) throw std::invalid_argument("ms_ssim: image smaller than the filter window");

    double weight_total = 0.0;
    for (int s = 0; s < scales; ++s) weight_total += kScaleWeights[s];

    const std::vector<double> g = gaussian_window();
    double channel_sum = 0.0;
    for (uint32_t c = 0; c < a.channels; ++c) {
        Plane pa{a.width, a.height, std::vector<double>(size_t(a.width) * a.height)};
        Plane pb = pa;
        for (uint32_t y = 0; y < a.height; ++y) {
            for (uint32_t x = 0; x < a.width; ++x) {
                pa.at(x, y) = a.at(x, y, c);
                pb.at(x, y) = b.at(x, y, c);
            }
        }

        double value = 1.0;
        for (int s = 0; s < scales; ++s) {
            ScaleStats stats = ssim_stats(pa, pb, g);
            double w = kScaleWeights[s] / weight_total;
            value *= std::pow(std::max(stats.cs, 0.0), w);
            if (s == scales - 1) value *= std::pow(std::max(stats.luminance, 0.0), w);
            else {
                pa = downsample(pa);
                pb = downsample(pb);
            }
        }
        channel_sum += value;
    }
    return channel_sum / a.channels;
}

}  // namespace tdnc
