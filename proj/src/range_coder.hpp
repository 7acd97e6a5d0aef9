#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace tdnc {

/// Adaptive per-context bit statistics shared by encoder and decoder. The
/// probability estimate is the scaled zero/total count ratio, so steady-state
/// cost tracks the empirical entropy closely even on heavily skewed sources.
class ContextSet {
  public:
    explicit ContextSet(size_t num_contexts) : counts_(num_contexts) {}

    uint32_t prob_zero(size_t ctx) const {  // 11-bit scale, clamped to [1, 2047]
        const Counts& c = counts_[ctx];
        uint32_t p = uint32_t((uint64_t(c.zeros) << 11) / (c.zeros + c.ones));
        return p < 1 ? 1 : (p > 2047 ? 2047 : p);
    }

    void update(size_t ctx, int bit) {
        Counts& c = counts_[ctx];
        if (bit) ++c.ones; else ++c.zeros;
        if (c.zeros + c.ones >= kRescaleLimit) {
            c.zeros = (c.zeros + 1) >> 1;
            c.ones = (c.ones + 1) >> 1;
        }
    }

    size_t size() const { return counts_.size(); }

  private:
    static constexpr uint32_t kRescaleLimit = 1u << 16;
    struct Counts {
        uint32_t zeros = 1, ones = 1;
    };
    std::vector<Counts> counts_;
};

/// Binary range coder with carry propagation (64-bit low, 32-bit range).
class RangeEncoder {
  public:
    explicit RangeEncoder(size_t num_contexts) : contexts_(num_contexts) {}

    void encode_bit(size_t ctx, int bit);
    std::vector<uint8_t> finish();  // flushes; the encoder is spent afterwards

  private:
    void shift_low();

    ContextSet contexts_;
    std::vector<uint8_t> out_;
    uint64_t low_ = 0;
    uint32_t range_ = 0xFFFFFFFFu;
    uint8_t cache_ = 0;
    uint64_t cache_size_ = 1;
};

class RangeDecoder {
  public:
    RangeDecoder(std::span<const uint8_t> bytes, size_t num_contexts);

    int decode_bit(size_t ctx);

    bool overran() const { return overrun_; }  // ran past the end of the input
    size_t consumed() const { return pos_; }

  private:
    uint8_t next_byte() {
        if (pos_ < in_.size()) return in_[pos_++];
        overrun_ = true;
        return 0;
    }

    ContextSet contexts_;
    std::span<const uint8_t> in_;
    size_t pos_ = 0;
    bool overrun_ = false;
    uint32_t range_ = 0xFFFFFFFFu;
    uint32_t code_ = 0;
};

// Flat bit-sequence coding with the symbol count up front, so truncated
// streams are detected. `ctx_ids[i]` selects the context of bit i; the same
// schedule must be supplied when decoding.
std::vector<uint8_t> range_encode(std::span<const uint8_t> bits,
                                  std::span<const uint16_t> ctx_ids, size_t num_contexts);
std::vector<uint8_t> range_decode(std::span<const uint8_t> bytes,
                                  std::span<const uint16_t> ctx_ids, size_t num_contexts);

}  // namespace tdnc
