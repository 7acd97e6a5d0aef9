#include "image.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace tdnc {

ImageBuffer::ImageBuffer(uint32_t w, uint32_t h, uint32_t c)
    : width(w), height(h), channels(c), samples(size_t(w) * h * c, 0) {
    if (w == 0 || h == 0 || (c != 1 && c != 3))
        throw std::invalid_argument("image dims must be positive with 1 or 3 channels");
}

ImageBuffer::ImageBuffer(uint32_t w, uint32_t h, uint32_t c, std::vector<uint8_t> data)
    : width(w), height(h), channels(c), samples(std::move(data)) {
    if (w == 0 || h == 0 || (c != 1 && c != 3))
        throw std::invalid_argument("image dims must be positive with 1 or 3 channels");
    if (samples.size() != size_t(w) * h * c)
        throw std::invalid_argument("image sample count does not match dims");
}

namespace {

const uint8_t kPngSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

uint32_t be32(const uint8_t* p) {
    return uint32_t(p[0]) << 24 | uint32_t(p[1]) << 16 | uint32_t(p[2]) << 8 | uint32_t(p[3]);
}

void put_be32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(uint8_t(v >> 24));
    out.push_back(uint8_t(v >> 16));
    out.push_back(uint8_t(v >> 8));
    out.push_back(uint8_t(v));
}

std::vector<uint8_t> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f) throw std::runtime_error("cannot open: " + path);
    auto size = size_t(f.tellg());
    f.seekg(0);
    std::vector<uint8_t> data(size);
    f.read(reinterpret_cast<char*>(data.data()), std::streamsize(size));
    if (!f) throw std::runtime_error("read failed: " + path);
    return data;
}

void write_file(const std::string& path, const std::vector<uint8_t>& data) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(data.data()), std::streamsize(data.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
}

uint8_t paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return uint8_t(a);
    if (pb <= pc) return uint8_t(b);
    return uint8_t(c);
}

ImageBuffer decode_png(const std::vector<uint8_t>& file) {
    if (file.size() < 8 || std::memcmp(file.data(), kPngSignature, 8) != 0)
        throw std::runtime_error("PNG: bad signature");

    uint32_t width = 0, height = 0;
    int bit_depth = 0, color_type = -1;
    std::vector<uint8_t> idat;
    std::vector<uint8_t> palette;
    bool seen_ihdr = false, seen_iend = false;

    size_t pos = 8;
    while (pos + 8 <= file.size() && !seen_iend) {
        uint32_t len = be32(&file[pos]);
        if (pos + 12 + size_t(len) > file.size()) throw std::runtime_error("PNG: truncated chunk");
        const uint8_t* type = &file[pos + 4];
        const uint8_t* data = &file[pos + 8];

        if (!std::memcmp(type, "IHDR", 4)) {
            if (len != 13) throw std::runtime_error("PNG: bad IHDR");
            width = be32(data);
            height = be32(data + 4);
            bit_depth = data[8];
            color_type = data[9];
            if (data[10] != 0 || data[11] != 0) throw std::runtime_error("PNG: unsupported compression/filter");
            if (data[12] != 0) throw std::runtime_error("PNG: interlaced images unsupported");
            seen_ihdr = true;
        } else if (!std::memcmp(type, "PLTE", 4)) {
            palette.assign(data, data + len);
        } else if (!std::memcmp(type, "IDAT", 4)) {
            idat.insert(idat.end(), data, data + len);
        } else if (!std::memcmp(type, "IEND", 4)) {
            seen_iend = true;
        }
        pos += 12 + len;
    }
    if (!seen_ihdr || width == 0 || height == 0) throw std::runtime_error("PNG: missing IHDR");

    int src_channels;
    switch (color_type) {
        case 0: src_channels = 1; break;
        case 2: src_channels = 3; break;
        case 3: src_channels = 1; break;
        case 4: src_channels = 2; break;
        case 6: src_channels = 4; break;
        default: throw std::runtime_error("PNG: unknown color type");
    }
    if (color_type == 3) {
        if (bit_depth != 8) throw std::runtime_error("PNG: only 8-bit palette images supported");
        if (palette.empty()) throw std::runtime_error("PNG: palette image without PLTE");
    } else if (bit_depth != 8 && bit_depth != 16) {
        throw std::runtime_error("PNG: only 8- and 16-bit samples supported");
    }

    const size_t bytes_per_sample = bit_depth == 16 ? 2 : 1;
    const size_t stride = size_t(width) * src_channels * bytes_per_sample;
    std::vector<uint8_t> raw(height * (stride + 1));
    uLongf raw_len = uLongf(raw.size());
    if (uncompress(raw.data(), &raw_len, idat.data(), uLong(idat.size())) != Z_OK ||
        raw_len != raw.size())
        throw std::runtime_error("PNG: corrupt or truncated image data");

    // Undo per-row filters in place (result shifted by the filter byte).
    const size_t bpp = src_channels * bytes_per_sample;
    std::vector<uint8_t> pixels(height * stride);
    for (uint32_t y = 0; y < height; ++y) {
        uint8_t filter = raw[y * (stride + 1)];
        const uint8_t* src = &raw[y * (stride + 1) + 1];
        uint8_t* dst = &pixels[y * stride];
        const uint8_t* up = y > 0 ? &pixels[(y - 1) * stride] : nullptr;
        for (size_t x = 0; x < stride; ++x) {
            int a = x >= bpp ? dst[x - bpp] : 0;
            int b = up ? up[x] : 0;
            int c = (up && x >= bpp) ? up[x - bpp] : 0;
            int v = src[x];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, c); break;
                default: throw std::runtime_error("PNG: unknown row filter");
            }
            dst[x] = uint8_t(v);
        }
    }

    const uint32_t out_channels = (color_type == 0 || color_type == 4) ? 1 : 3;
    ImageBuffer img(width, height, out_channels);
    for (uint32_t y = 0; y < height; ++y) {
        for (uint32_t x = 0; x < width; ++x) {
            const uint8_t* px = &pixels[y * stride + size_t(x) * bpp];
            if (color_type == 3) {
                uint32_t index = px[0];
                if (3 * index + 2 >= palette.size()) throw std::runtime_error("PNG: palette index out of range");
                for (uint32_t c = 0; c < 3; ++c) img.at(x, y, c) = palette[3 * index + c];
            } else {
                for (uint32_t c = 0; c < out_channels; ++c)
                    img.at(x, y, c) = px[c * bytes_per_sample];  // high byte for 16-bit
            }
        }
    }
    return img;
}

std::vector<uint8_t> encode_png(const ImageBuffer& img) {
    std::vector<uint8_t> raw;
    const size_t stride = size_t(img.width) * img.channels;
    raw.reserve(img.height * (stride + 1));
    for (uint32_t y = 0; y < img.height; ++y) {
        raw.push_back(0);  // filter: none
        const uint8_t* row = &img.samples[y * stride];
        raw.insert(raw.end(), row, row + stride);
    }

    uLongf bound = compressBound(uLong(raw.size()));
    std::vector<uint8_t> deflated(bound);
    if (compress2(deflated.data(), &bound, raw.data(), uLong(raw.size()), 6) != Z_OK)
        throw std::runtime_error("PNG: deflate failed");
    deflated.resize(bound);

    std::vector<uint8_t> out(kPngSignature, kPngSignature + 8);
    auto chunk = [&out](const char* type, const std::vector<uint8_t>& data) {
        put_be32(out, uint32_t(data.size()));
        size_t start = out.size();
        out.insert(out.end(), type, type + 4);
        out.insert(out.end(), data.begin(), data.end());
        uLong crc = crc32(0L, &out[start], uInt(4 + data.size()));
        put_be32(out, uint32_t(crc));
    };

    std::vector<uint8_t> ihdr;
    put_be32(ihdr, img.width);
    put_be32(ihdr, img.height);
    ihdr.push_back(8);                                  // bit depth
    ihdr.push_back(img.channels == 1 ? 0 : 2);          // gray or RGB
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    chunk("IHDR", ihdr);
    chunk("IDAT", deflated);
    chunk("IEND", {});
    return out;
}

void skip_pnm_space(const std::vector<uint8_t>& d, size_t& pos) {
    while (pos < d.size()) {
        if (d[pos] == '#') {
            while (pos < d.size() && d[pos] != '\n') ++pos;
        } else if (std::isspace(d[pos])) {
            ++pos;
        } else {
            break;
        }
    }
}

uint32_t read_pnm_int(const std::vector<uint8_t>& d, size_t& pos) {
    skip_pnm_space(d, pos);
    if (pos >= d.size() || !std::isdigit(d[pos])) throw std::runtime_error("PNM: expected integer");
    uint64_t v = 0;
    while (pos < d.size() && std::isdigit(d[pos])) {
        v = v * 10 + (d[pos++] - '0');
        if (v > 0xFFFFFFFFull) throw std::runtime_error("PNM: integer overflow");
    }
    return uint32_t(v);
}

ImageBuffer decode_pnm(const std::vector<uint8_t>& file) {
    if (file.size() < 2) throw std::runtime_error("PNM: file too short");
    uint32_t channels;
    if (file[0] == 'P' && file[1] == '5') channels = 1;
    else if (file[0] == 'P' && file[1] == '6') channels = 3;
    else throw std::runtime_error("PNM: only binary P5/P6 supported");

    size_t pos = 2;
    uint32_t width = read_pnm_int(file, pos);
    uint32_t height = read_pnm_int(file, pos);
    uint32_t maxval = read_pnm_int(file, pos);
    if (maxval != 255) throw std::runtime_error("PNM: only maxval 255 supported");
    if (pos >= file.size() || !std::isspace(file[pos])) throw std::runtime_error("PNM: bad header");
    ++pos;

    size_t need = size_t(width) * height * channels;
    if (file.size() - pos < need) throw std::runtime_error("PNM: pixel data truncated");
    return ImageBuffer(width, height, channels,
                       std::vector<uint8_t>(file.begin() + std::ptrdiff_t(pos),
                                            file.begin() + std::ptrdiff_t(pos + need)));
}

std::vector<uint8_t> encode_pnm(const ImageBuffer& img) {
    std::string header = (img.channels == 1 ? "P5\n" : "P6\n") + std::to_string(img.width) + " " +
                         std::to_string(img.height) + "\n255\n";
    std::vector<uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.samples.begin(), img.samples.end());
    return out;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

ImageBuffer load_image(const std::string& path) {
    std::vector<uint8_t> file = read_file(path);
    if (file.size() >= 8 && !std::memcmp(file.data(), kPngSignature, 8)) return decode_png(file);
    if (file.size() >= 2 && file[0] == 'P') return decode_pnm(file);
    throw std::runtime_error("unrecognized image format: " + path);
}

void save_image(const ImageBuffer& img, const std::string& path) {
    if (img.width == 0 || img.height == 0 || (img.channels != 1 && img.channels != 3))
        throw std::invalid_argument("cannot save empty or non-1/3-channel image");
    if (ends_with(path, ".png")) {
        write_file(path, encode_png(img));
    } else if (ends_with(path, ".ppm")) {
        if (img.channels != 3) throw std::invalid_argument(".ppm requires a 3-channel image");
        write_file(path, encode_pnm(img));
    } else if (ends_with(path, ".pgm")) {
        if (img.channels != 1) throw std::invalid_argument(".pgm requires a 1-channel image");
        write_file(path, encode_pnm(img));
    } else {
        throw std::invalid_argument("unsupported image extension (use .png, .ppm or .pgm): " + path);
    }
}

}  // namespace tdnc
