#pragma once

#include "image.hpp"

namespace tdnc {

struct MetricReport {
    double psnr_db = 0.0;
    double ms_ssim = 0.0;
    double bpp = 0.0;
};

// 10*log10(255^2 / MSE) over all samples; +infinity when the images are
// identical (callers report that as "lossless").
double psnr(const ImageBuffer& a, const ImageBuffer& b);

// Multi-scale SSIM: up to 5 dyadic scales, 11-tap Gaussian window (sigma 1.5),
// standard stabilization constants, per-channel values averaged. Images whose
// smaller dimension cannot support 5 scales use fewer scales with the scale
// weights renormalized.
double ms_ssim(const ImageBuffer& a, const ImageBuffer& b);

}  // namespace tdnc
