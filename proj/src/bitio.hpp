#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tdnc {

/// Thrown on malformed input; carries the byte offset and the field being read.
class ParseError : public std::runtime_error {
  public:
    ParseError(size_t offset, std::string field, const std::string& detail)
        : std::runtime_error("parse error at offset " + std::to_string(offset) + " (" + field +
                             "): " + detail),
          offset_(offset),
          field_(std::move(field)) {}

    size_t offset() const { return offset_; }
    const std::string& field() const { return field_; }

  private:
    size_t offset_;
    std::string field_;
};

class ByteWriter {
  public:
    void u8(uint8_t v) { buf_.push_back(v); }
    void u16(uint16_t v) { append(v, 2); }
    void u32(uint32_t v) { append(v, 4); }
    void u64(uint64_t v) { append(v, 8); }
    void f32(float v);
    void f64(double v);
    void bytes(std::span<const uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }

    void patch_u32(size_t pos, uint32_t v);

    size_t size() const { return buf_.size(); }
    std::vector<uint8_t> take() { return std::move(buf_); }
    const std::vector<uint8_t>& view() const { return buf_; }

  private:
    void append(uint64_t v, int n) {
        for (int i = 0; i < n; ++i) buf_.push_back(uint8_t(v >> (8 * i)));
    }
    std::vector<uint8_t> buf_;
};

/// Bounds-checked little-endian reader; every access names the field so parse
/// errors point at the failing element and offset.
class ByteReader {
  public:
    explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

    uint8_t u8(const char* field) { return take(field, 1)[0]; }
    uint16_t u16(const char* field) { return uint16_t(read_le(field, 2)); }
    uint32_t u32(const char* field) { return uint32_t(read_le(field, 4)); }
    uint64_t u64(const char* field) { return read_le(field, 8); }
    float f32(const char* field);
    double f64(const char* field);
    std::span<const uint8_t> bytes(size_t n, const char* field) { return take(field, n); }

    size_t offset() const { return pos_; }
    size_t remaining() const { return data_.size() - pos_; }

  private:
    std::span<const uint8_t> take(const char* field, size_t n) {
        if (data_.size() - pos_ < n) throw ParseError(pos_, field, "input truncated");
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    uint64_t read_le(const char* field, int n) {
        auto s = take(field, size_t(n));
        uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= uint64_t(s[i]) << (8 * i);
        return v;
    }

    std::span<const uint8_t> data_;
    size_t pos_ = 0;
};

/// Packs fixed-width codes LSB-first into a byte stream.
class BitPacker {
  public:
    void put(uint32_t code, uint32_t bits);
    std::vector<uint8_t> finish();

  private:
    std::vector<uint8_t> buf_;
    uint64_t acc_ = 0;
    uint32_t filled_ = 0;
};

class BitUnpacker {
  public:
    explicit BitUnpacker(std::span<const uint8_t> data) : data_(data) {}
    uint32_t get(uint32_t bits);
    bool overran() const { return overrun_; }

  private:
    std::span<const uint8_t> data_;
    size_t pos_ = 0;
    uint64_t acc_ = 0;
    uint32_t filled_ = 0;
    bool overrun_ = false;
};

uint64_t fnv1a64(std::span<const uint8_t> data);
uint32_t crc32_of(std::span<const uint8_t> data);

}  // namespace tdnc
