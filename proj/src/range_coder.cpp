#include "range_coder.hpp"

#include <cstring>
#include <stdexcept>

namespace tdnc {

namespace {
constexpr uint32_t kTopValue = 1u << 24;
}

void RangeEncoder::encode_bit(size_t ctx, int bit) {
    uint32_t bound = (range_ >> 11) * contexts_.prob_zero(ctx);
    if (bit == 0) {
        range_ = bound;
    } else {
        low_ += bound;
        range_ -= bound;
    }
    contexts_.update(ctx, bit);
    while (range_ < kTopValue) {
        shift_low();
        range_ <<= 8;
    }
}

void RangeEncoder::shift_low() {
    if (uint32_t(low_) < 0xFF000000u || (low_ >> 32) != 0) {
        uint8_t carry = uint8_t(low_ >> 32);
        out_.push_back(uint8_t(cache_ + carry));
        while (--cache_size_ != 0) out_.push_back(uint8_t(0xFF + carry));
        cache_ = uint8_t(low_ >> 24);
    }
    ++cache_size_;
    low_ = (low_ & 0x00FFFFFFull) << 8;
}

std::vector<uint8_t> RangeEncoder::finish() {
    for (int i = 0; i < 5; ++i) shift_low();
    return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const uint8_t> bytes, size_t num_contexts)
    : contexts_(num_contexts), in_(bytes) {
    next_byte();  // leading byte emitted from the encoder's initial cache
    for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_byte();
}

int RangeDecoder::decode_bit(size_t ctx) {
    uint32_t bound = (range_ >> 11) * contexts_.prob_zero(ctx);
    int bit;
    if (code_ < bound) {
        bit = 0;
        range_ = bound;
    } else {
        bit = 1;
        code_ -= bound;
        range_ -= bound;
    }
    contexts_.update(ctx, bit);
    while (range_ < kTopValue) {
        range_ <<= 8;
        code_ = (code_ << 8) | next_byte();
    }
    return bit;
}

std::vector<uint8_t> range_encode(std::span<const uint8_t> bits,
                                  std::span<const uint16_t> ctx_ids, size_t num_contexts) {
    if (bits.size() != ctx_ids.size())
        throw std::invalid_argument("range_encode: one context id per bit required");

    RangeEncoder enc(num_contexts);
    for (size_t i = 0; i < bits.size(); ++i) {
        if (ctx_ids[i] >= num_contexts)
            throw std::invalid_argument("range_encode: context id out of range");
        enc.encode_bit(ctx_ids[i], bits[i] & 1);
    }
    std::vector<uint8_t> payload = enc.finish();

    std::vector<uint8_t> out;
    out.reserve(8 + payload.size());
    uint64_t count = bits.size();
    for (int i = 0; i < 8; ++i) out.push_back(uint8_t(count >> (8 * i)));
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

std::vector<uint8_t> range_decode(std::span<const uint8_t> bytes,
                                  std::span<const uint16_t> ctx_ids, size_t num_contexts) {
    if (bytes.size() < 8) throw std::runtime_error("range_decode: stream shorter than header");
    uint64_t count = 0;
    for (int i = 0; i < 8; ++i) count |= uint64_t(bytes[i]) << (8 * i);
    if (count != ctx_ids.size())
        throw std::invalid_argument("range_decode: context schedule does not match symbol count");

    RangeDecoder dec(bytes.subspan(8), num_contexts);
    std::vector<uint8_t> bits(count);
    for (size_t i = 0; i < count; ++i) {
        if (ctx_ids[i] >= num_contexts)
            throw std::invalid_argument("range_decode: context id out of range");
        bits[i] = uint8_t(dec.decode_bit(ctx_ids[i]));
    }
    if (dec.overran()) throw std::runtime_error("range_decode: truncated stream");
    return bits;
}

}  // namespace tdnc
