#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tdnc {

/// 8-bit image, row-major, channel-interleaved. channels is 1 or 3.
struct ImageBuffer {
    uint32_t width = 0, height = 0, channels = 0;
    std::vector<uint8_t> samples;

    ImageBuffer() = default;
    ImageBuffer(uint32_t w, uint32_t h, uint32_t c);
    ImageBuffer(uint32_t w, uint32_t h, uint32_t c, std::vector<uint8_t> data);

    uint8_t at(uint32_t x, uint32_t y, uint32_t c) const {
        return samples[(size_t(y) * width + x) * channels + c];
    }
    uint8_t& at(uint32_t x, uint32_t y, uint32_t c) {
        return samples[(size_t(y) * width + x) * channels + c];
    }
    uint64_t pixel_count() const { return uint64_t(width) * height; }

    bool operator==(const ImageBuffer&) const = default;
};

// Detects PNG / binary PPM / binary PGM by content. PNG alpha channels are
// dropped; palette images expand to RGB; 16-bit samples keep the high byte.
ImageBuffer load_image(const std::string& path);

// Picks the format from the extension: .png, .ppm (3-channel), .pgm (1-channel).
void save_image(const ImageBuffer& img, const std::string& path);

}  // namespace tdnc
