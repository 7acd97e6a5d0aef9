#include "bitstream.hpp"

#include "bitio.hpp"
#include "range_coder.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace tdnc {

namespace {

constexpr char kMagic[4] = {'T', 'D', 'N', 'C'};
constexpr uint8_t kVersion = 1;
constexpr uint8_t kFlagModelEmbedded = 0x01;
constexpr uint8_t kFlagLatent = 0x02;
constexpr size_t kHeaderSize = 64;  // fixed fields up to and including the crc

bool valid_factor_bits(uint32_t b) { return b == 8 || b == 12 || b == 16; }

// Context layout for the core block, fixed by the interval count M:
//   0, 1            trivial-element flag, conditioned on the previous flag
//   2 ..            chunk chain decisions "m > q", q = 1..M-1, conditioned on
//                   the previous element's chunk (three coarse buckets)
//   after chains    sign
//   after sign      magnitude bits: per (chunk, position), and positions
//                   past the first also conditioned on the preceding bit
size_t prev_bucket(uint32_t prev_chunk) { return prev_chunk <= 1 ? 0 : (prev_chunk == 2 ? 1 : 2); }
size_t chain_ctx(uint32_t m_intervals, uint32_t q, uint32_t prev_chunk) {
    return 2 + prev_bucket(prev_chunk) * (m_intervals - 1) + (q - 1);
}
size_t sign_ctx(uint32_t m_intervals) { return 2 + 3 * size_t(m_intervals - 1); }
// Chunk m owns 2m - 1 magnitude slots (leading bit, then two per position
// keyed by the bit before it); chunks below it occupy (m - 1)^2 slots.
size_t mag_ctx(uint32_t m_intervals, uint32_t chunk, uint32_t bit, uint32_t prev_bit) {
    size_t base = sign_ctx(m_intervals) + 1 + size_t(chunk - 1) * (chunk - 1);
    return base + (bit == 0 ? 0 : 1 + 2 * size_t(bit - 1) + prev_bit);
}
size_t total_contexts(uint32_t m_intervals) {
    return sign_ctx(m_intervals) + 1 + size_t(m_intervals) * m_intervals;
}

}  // namespace

void RateConfig::validate() const {
    if (ranks.r1 < 1 || ranks.r2 < 1 || ranks.r3 < 1)
        throw std::invalid_argument("rate config: ranks must be positive");
    if (intervals < 1 || intervals > kMaxIntervals)
        throw std::invalid_argument("rate config: intervals out of supported range");
    if (!valid_factor_bits(factor_bits))
        throw std::invalid_argument("rate config: factor bit depth must be 8, 12 or 16");
}

FactorBlock encode_factor_matrix(const Matrix& u, uint32_t bit_depth) {
    if (!valid_factor_bits(bit_depth))
        throw std::invalid_argument("factor bit depth must be 8, 12 or 16");
    constexpr double kSlack = 1e-9;
    const double levels = double(uint32_t(1) << bit_depth);
    const uint32_t top = (uint32_t(1) << bit_depth) - 1;

    FactorBlock block;
    block.rows = uint32_t(u.rows());
    block.cols = uint32_t(u.cols());
    block.bit_depth = bit_depth;

    if (u.cols() <= u.rows() && u == Matrix::Identity(u.rows(), u.rows()).leftCols(u.cols())) {
        block.identity = true;
        return block;
    }

    BitPacker packer;
    for (uint32_t r = 0; r < block.rows; ++r) {
        for (uint32_t c = 0; c < block.cols; ++c) {
            double x = u(r, c);
            if (!std::isfinite(x) || x < -1.0 - kSlack || x > 1.0 + kSlack)
                throw std::invalid_argument("factor entry outside [-1, 1]");
            double scaled = std::floor((x + 1.0) * 0.5 * levels);
            uint32_t code = uint32_t(std::clamp(scaled, 0.0, double(top)));
            packer.put(code, bit_depth);
        }
    }
    block.packed = packer.finish();
    return block;
}

Matrix decode_factor_matrix(const FactorBlock& block) {
    if (!valid_factor_bits(block.bit_depth))
        throw std::invalid_argument("factor bit depth must be 8, 12 or 16");
    if (block.identity) return Matrix::Identity(block.rows, block.rows).leftCols(block.cols);
    const double step = 2.0 / double(uint32_t(1) << block.bit_depth);

    Matrix u(block.rows, block.cols);
    BitUnpacker unpacker(block.packed);
    for (uint32_t r = 0; r < block.rows; ++r)
        for (uint32_t c = 0; c < block.cols; ++c)
            u(r, c) = (double(unpacker.get(block.bit_depth)) + 0.5) * step - 1.0;
    if (unpacker.overran()) throw std::invalid_argument("factor block shorter than its shape");
    return u;
}

std::vector<uint8_t> encode_core_block(const QuantizedCore& q) {
    const uint32_t m_max = q.intervals;
    RangeEncoder enc(total_contexts(m_max));
    int prev_trivial = 0;
    uint32_t prev_chunk = 1;
    for (size_t i = 0; i < q.codes.size(); ++i) {
        uint32_t m = q.chunk[i];
        int trivial = (m == 1 && q.codes[i] == 0 && q.signs[i] == 0);
        enc.encode_bit(size_t(prev_trivial), trivial);
        if (!trivial) {
            for (uint32_t d = 1; d < m_max; ++d) {
                int bit = m > d;
                enc.encode_bit(chain_ctx(m_max, d, prev_chunk), bit);
                if (!bit) break;
            }
            enc.encode_bit(sign_ctx(m_max), q.signs[i]);
            uint32_t prev_bit = 0;
            for (uint32_t j = 0; j < m; ++j) {
                uint32_t bit = (q.codes[i] >> (m - 1 - j)) & 1;
                enc.encode_bit(mag_ctx(m_max, m, j, prev_bit), int(bit));
                prev_bit = bit;
            }
        }
        prev_trivial = trivial;
        prev_chunk = m;
    }
    return enc.finish();
}

QuantizedCore decode_core_block(std::span<const uint8_t> block, Dims3 dims, uint32_t intervals,
                                const std::vector<ChunkSideInfo>& side_info) {
    if (side_info.size() != intervals)
        throw std::invalid_argument("core block: side info size mismatch");

    QuantizedCore q;
    q.dims = dims;
    q.intervals = intervals;
    q.chunks = side_info;
    size_t n = dims.count();
    q.signs.resize(n);
    q.chunk.resize(n);
    q.codes.resize(n);

    RangeDecoder dec(block, total_contexts(intervals));
    int prev_trivial = 0;
    uint32_t prev_chunk = 1;
    for (size_t i = 0; i < n; ++i) {
        int trivial = dec.decode_bit(size_t(prev_trivial));
        if (trivial) {
            q.signs[i] = 0;
            q.chunk[i] = 1;
            q.codes[i] = 0;
        } else {
            uint32_t m = 1;
            while (m < intervals && dec.decode_bit(chain_ctx(intervals, m, prev_chunk))) ++m;
            q.signs[i] = uint8_t(dec.decode_bit(sign_ctx(intervals)));
            uint32_t code = 0, prev_bit = 0;
            for (uint32_t j = 0; j < m; ++j) {
                uint32_t bit = uint32_t(dec.decode_bit(mag_ctx(intervals, m, j, prev_bit)));
                code = (code << 1) | bit;
                prev_bit = bit;
            }
            q.chunk[i] = uint8_t(m);
            q.codes[i] = code;
        }
        prev_trivial = trivial;
        prev_chunk = q.chunk[i];
    }
    if (dec.overran())
        throw ParseError(dec.consumed(), "core block", "entropy-coded core truncated");
    for (size_t i = 0; i < n; ++i)
        if (!q.chunks[q.chunk[i] - 1].present())
            throw ParseError(0, "core block", "element decoded into an empty chunk");
    return q;
}

uint64_t model_hash(const QuantizerModel& model) {
    ByteWriter w;
    w.u8(uint8_t(model.intervals));
    for (double b : model.boundaries) w.f64(b);
    for (double r : model.representatives) w.f64(r);
    return fnv1a64(w.view());
}

namespace {

void write_model(ByteWriter& w, const QuantizerModel& m) {
    w.u8(uint8_t(m.intervals));
    for (double b : m.boundaries) w.f64(b);
    for (double r : m.representatives) w.f64(r);
}

QuantizerModel read_model(ByteReader& r) {
    QuantizerModel m;
    m.intervals = r.u8("model intervals");
    if (m.intervals < 1 || m.intervals > kMaxIntervals)
        throw ParseError(r.offset() - 1, "model intervals", "out of supported range");
    m.boundaries.resize(m.intervals + 1);
    for (auto& b : m.boundaries) b = r.f64("model boundary");
    m.representatives.resize(m.intervals);
    for (auto& v : m.representatives) v = r.f64("model representative");
    return m;
}

size_t factor_block_bytes(uint32_t rows, uint32_t cols, uint32_t bit_depth) {
    return (size_t(rows) * cols * bit_depth + 7) / 8;
}

}  // namespace

std::vector<uint8_t> serialize(const CompressedPayload& p) {
    if (p.side_info.size() != p.intervals)
        throw std::invalid_argument("serialize: side info size mismatch");
    if (p.intervals < 1 || p.intervals > kMaxIntervals)
        throw std::invalid_argument("serialize: intervals out of supported range");
    if (!valid_factor_bits(p.factor_bits))
        throw std::invalid_argument("serialize: bad factor bit depth");

    ByteWriter w;
    w.bytes(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(kMagic), 4));
    w.u8(kVersion);
    uint8_t flags = 0;
    if (p.model_embedded) flags |= kFlagModelEmbedded;
    if (p.tensorization.strategy == Tensorization::kLatent) flags |= kFlagLatent;
    w.u8(flags);
    w.u32(p.config_id);
    w.u64(p.model_hash);
    w.u8(uint8_t(p.tensorization.strategy));
    w.u16(p.tensorization.patch);
    w.u16(p.tensorization.pad_x);
    w.u16(p.tensorization.pad_y);
    w.u32(p.tensorization.width);
    w.u32(p.tensorization.height);
    w.u8(p.tensorization.channels);
    w.u32(p.tensor_dims.d1);
    w.u32(p.tensor_dims.d2);
    w.u32(p.tensor_dims.d3);
    w.u32(p.ranks.r1);
    w.u32(p.ranks.r2);
    w.u32(p.ranks.r3);
    w.u8(uint8_t(p.intervals));
    w.u8(uint8_t(p.factor_bits));
    size_t crc_pos = w.size();
    if (crc_pos + 4 != kHeaderSize)
        throw std::logic_error("serialize: header layout disagrees with kHeaderSize");
    w.u32(0);  // crc backfilled below

    if (p.model_embedded) write_model(w, p.embedded_model);
    for (int n = 0; n < 3; ++n) {
        const FactorBlock& b = p.factor_blocks[n];
        if (b.bit_depth != p.factor_bits)
            throw std::invalid_argument("serialize: factor block bit depth mismatch");
        w.u8(b.identity ? 1 : 0);
        if (b.identity) {
            if (!b.packed.empty())
                throw std::invalid_argument("serialize: identity factor block carries codes");
            continue;
        }
        if (b.packed.size() != factor_block_bytes(b.rows, b.cols, b.bit_depth))
            throw std::invalid_argument("serialize: factor block size mismatch");
        w.bytes(b.packed);
    }
    for (const ChunkSideInfo& c : p.side_info) {
        w.u8(c.present() ? 1 : 0);
        if (c.present()) {
            w.f32(c.min_magnitude);
            w.f32(c.max_magnitude);
        }
    }
    w.u32(uint32_t(p.core_block.size()));
    w.bytes(p.core_block);

    std::vector<uint8_t> out = w.take();
    uint32_t crc = crc32_of(std::span<const uint8_t>(out).subspan(kHeaderSize));
    for (int i = 0; i < 4; ++i) out[crc_pos + i] = uint8_t(crc >> (8 * i));
    return out;
}

CompressedPayload deserialize(std::span<const uint8_t> bytes) {
    ByteReader r(bytes);
    auto magic = r.bytes(4, "magic");
    if (std::memcmp(magic.data(), kMagic, 4) != 0)
        throw ParseError(0, "magic", "not a TDNC stream");
    uint8_t version = r.u8("version");
    if (version != kVersion) throw ParseError(4, "version", "unsupported version");
    uint8_t flags = r.u8("flags");
    if (flags & ~(kFlagModelEmbedded | kFlagLatent))
        throw ParseError(5, "flags", "unknown flag bits");

    CompressedPayload p;
    p.model_embedded = flags & kFlagModelEmbedded;
    p.config_id = r.u32("config id");
    p.model_hash = r.u64("model hash");
    uint8_t strategy = r.u8("tensorization strategy");
    if (strategy > uint8_t(Tensorization::kPatchStack))
        throw ParseError(r.offset() - 1, "tensorization strategy", "unknown strategy");
    p.tensorization.strategy = Tensorization(strategy);
    p.tensorization.patch = r.u16("patch size");
    p.tensorization.pad_x = r.u16("pad x");
    p.tensorization.pad_y = r.u16("pad y");
    p.tensorization.width = r.u32("image width");
    p.tensorization.height = r.u32("image height");
    p.tensorization.channels = r.u8("image channels");
    if ((p.tensorization.strategy == Tensorization::kLatent) != bool(flags & kFlagLatent))
        throw ParseError(5, "flags", "latent flag disagrees with tensorization strategy");
    p.tensor_dims = {r.u32("dim 1"), r.u32("dim 2"), r.u32("dim 3")};
    p.ranks = {r.u32("rank 1"), r.u32("rank 2"), r.u32("rank 3")};
    p.intervals = r.u8("intervals");
    p.factor_bits = r.u8("factor bit depth");

    if (p.tensor_dims.d1 == 0 || p.tensor_dims.d2 == 0 || p.tensor_dims.d3 == 0)
        throw ParseError(34, "dims", "zero tensor dimension");
    for (int n = 1; n <= 3; ++n)
        if (p.ranks[n] < 1 || p.ranks[n] > p.tensor_dims[n])
            throw ParseError(46, "ranks", "rank out of range for dims");
    if (p.intervals < 1 || p.intervals > kMaxIntervals)
        throw ParseError(58, "intervals", "out of supported range");
    if (!valid_factor_bits(p.factor_bits))
        throw ParseError(59, "factor bit depth", "must be 8, 12 or 16");

    uint32_t stored_crc = r.u32("crc");
    uint32_t actual_crc = crc32_of(bytes.subspan(kHeaderSize));
    if (stored_crc != actual_crc) throw ParseError(60, "crc", "checksum mismatch");

    if (p.model_embedded) p.embedded_model = read_model(r);

    const uint32_t dims_by_mode[3] = {p.tensor_dims.d1, p.tensor_dims.d2, p.tensor_dims.d3};
    const uint32_t ranks_by_mode[3] = {p.ranks.r1, p.ranks.r2, p.ranks.r3};
    for (int n = 0; n < 3; ++n) {
        FactorBlock& b = p.factor_blocks[n];
        b.rows = dims_by_mode[n];
        b.cols = ranks_by_mode[n];
        b.bit_depth = p.factor_bits;
        uint8_t kind = r.u8("factor block kind");
        if (kind > 1) throw ParseError(r.offset() - 1, "factor block kind", "unknown kind");
        b.identity = kind == 1;
        if (b.identity) continue;
        auto packed = r.bytes(factor_block_bytes(b.rows, b.cols, b.bit_depth), "factor block");
        b.packed.assign(packed.begin(), packed.end());
    }

    p.side_info.resize(p.intervals);
    for (uint32_t m = 0; m < p.intervals; ++m) {
        uint8_t present = r.u8("chunk presence");
        if (present > 1) throw ParseError(r.offset() - 1, "chunk presence", "must be 0 or 1");
        ChunkSideInfo& c = p.side_info[m];
        if (present) {
            c.population = 1;  // populations are not stored; presence is what matters
            c.min_magnitude = r.f32("chunk min");
            c.max_magnitude = r.f32("chunk max");
            if (!std::isfinite(c.min_magnitude) || !std::isfinite(c.max_magnitude) ||
                c.min_magnitude < 0.0f || c.max_magnitude < c.min_magnitude)
                throw ParseError(r.offset() - 8, "chunk side info", "invalid magnitude range");
        }
    }

    uint32_t core_len = r.u32("core block length");
    if (core_len != r.remaining())
        throw ParseError(r.offset() - 4, "core block length",
                         core_len > r.remaining() ? "input truncated" : "trailing bytes");
    auto core = r.bytes(core_len, "core block");
    p.core_block.assign(core.begin(), core.end());
    return p;
}

double compute_bpp(size_t payload_bytes, uint64_t pixel_count) {
    if (pixel_count == 0) throw std::invalid_argument("bpp undefined for zero pixels");
    return double(payload_bytes) * 8.0 / double(pixel_count);
}

double compression_ratio(size_t payload_bytes, uint64_t pixel_count, uint32_t channels) {
    if (payload_bytes == 0) throw std::invalid_argument("compression ratio undefined for empty payload");
    return double(pixel_count) * 8.0 * channels / (double(payload_bytes) * 8.0);
}

uint64_t counting_bound_bits(const CompressedPayload& p) {
    Dims3 core_dims{p.ranks.r1, p.ranks.r2, p.ranks.r3};
    QuantizedCore core = decode_core_block(p.core_block, core_dims, p.intervals, p.side_info);
    std::vector<uint64_t> populations(p.intervals, 0);
    for (uint8_t m : core.chunk) ++populations[m - 1];

    uint64_t bits = kHeaderSize * 8;
    if (p.model_embedded) bits += 8 * (1 + 8 * (2 * uint64_t(p.intervals) + 1));
    for (const FactorBlock& b : p.factor_blocks)
        bits += 8 + (b.identity ? 0 : 8 * factor_block_bytes(b.rows, b.cols, b.bit_depth));
    for (uint32_t m = 0; m < p.intervals; ++m)
        bits += 8 * (p.side_info[m].present() ? 9 : 1);
    bits += 32;  // core block length prefix
    for (uint32_t m = 0; m < p.intervals; ++m)
        bits += populations[m] * (uint64_t(m) + 2);  // (m + 1) payload bits, 1-based chunks
    return bits;
}

uint64_t worst_case_bits(Dims3 tensor_dims, Ranks3 ranks, uint32_t intervals,
                         uint32_t factor_bits, bool model_embedded) {
    uint64_t bits = kHeaderSize * 8;
    if (model_embedded) bits += 8 * (1 + 8 * (2 * uint64_t(intervals) + 1));
    const uint32_t dims_by_mode[3] = {tensor_dims.d1, tensor_dims.d2, tensor_dims.d3};
    const uint32_t ranks_by_mode[3] = {ranks.r1, ranks.r2, ranks.r3};
    for (int n = 0; n < 3; ++n)
        bits += 8 + 8 * factor_block_bytes(dims_by_mode[n], ranks_by_mode[n], factor_bits);
    bits += 8 * 9 * uint64_t(intervals);
    bits += 32;
    bits += uint64_t(ranks.r1) * ranks.r2 * ranks.r3 * (intervals + 1);
    return bits;
}

}  // namespace tdnc
