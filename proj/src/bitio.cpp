#include "bitio.hpp"

#include <zlib.h>

#include <cstring>

namespace tdnc {

void ByteWriter::f32(float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
}

void ByteWriter::f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
}

void ByteWriter::patch_u32(size_t pos, uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.at(pos + i) = uint8_t(v >> (8 * i));
}

float ByteReader::f32(const char* field) {
    uint32_t bits = u32(field);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

double ByteReader::f64(const char* field) {
    uint64_t bits = u64(field);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

void BitPacker::put(uint32_t code, uint32_t bits) {
    acc_ |= uint64_t(code & ((bits == 32 ? 0 : (1u << bits)) - 1u)) << filled_;
    filled_ += bits;
    while (filled_ >= 8) {
        buf_.push_back(uint8_t(acc_));
        acc_ >>= 8;
        filled_ -= 8;
    }
}

std::vector<uint8_t> BitPacker::finish() {
    if (filled_ > 0) {
        buf_.push_back(uint8_t(acc_));
        acc_ = 0;
        filled_ = 0;
    }
    return std::move(buf_);
}

uint32_t BitUnpacker::get(uint32_t bits) {
    while (filled_ < bits) {
        uint8_t byte = 0;
        if (pos_ < data_.size()) byte = data_[pos_++];
        else overrun_ = true;
        acc_ |= uint64_t(byte) << filled_;
        filled_ += 8;
    }
    uint32_t v = uint32_t(acc_ & ((bits == 32 ? 0 : (uint64_t(1) << bits)) - 1u));
    acc_ >>= bits;
    filled_ -= bits;
    return v;
}

uint64_t fnv1a64(std::span<const uint8_t> data) {
    uint64_t h = 1469598103934665603ull;
    for (uint8_t b : data) {
        h ^= b;
        h *= 1099511628211ull;
    }
    return h;
}

uint32_t crc32_of(std::span<const uint8_t> data) {
    return uint32_t(::crc32(0L, data.data(), uInt(data.size())));
}

}  // namespace tdnc
