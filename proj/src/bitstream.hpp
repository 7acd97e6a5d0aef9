#pragma once

#include "quantizer.hpp"
#include "tensor.hpp"
#include "tucker.hpp"

namespace tdnc {

/// One operating point: Tucker ranks, number of decision intervals, and the
/// bit depth used to store factor-matrix entries.
struct RateConfig {
    uint32_t id = 0;
    Ranks3 ranks;
    uint32_t intervals = 0;
    uint32_t factor_bits = 16;

    void validate() const;
};

struct FactorBlock {
    uint32_t rows = 0, cols = 0;
    uint32_t bit_depth = 0;
    bool identity = false;  // leading columns of I, no codes stored
    std::vector<uint8_t> packed;
};

// Uniform mid-rise quantization of entries over [-1, 1] to `bit_depth` bits;
// decode error per entry is at most 2^-bit_depth. Entries must lie in
// [-1 - eps, 1 + eps]. A factor that is exactly the leading columns of the
// identity (the degenerate full-rank case) is stored as a flag and decodes
// bit-exactly.
FactorBlock encode_factor_matrix(const Matrix& u, uint32_t bit_depth);
Matrix decode_factor_matrix(const FactorBlock& block);

enum class Tensorization : uint8_t { kLatent = 0, kPatchStack = 1 };

struct TensorizationInfo {
    Tensorization strategy = Tensorization::kLatent;
    uint16_t patch = 0;
    uint16_t pad_x = 0, pad_y = 0;  // reflect padding applied right/bottom
    uint32_t width = 0, height = 0;
    uint8_t channels = 0;
};

/// Everything the decoder needs, short of the corpus quantizer model when it
/// is referenced by id instead of embedded.
struct CompressedPayload {
    uint32_t config_id = 0;
    uint64_t model_hash = 0;
    bool model_embedded = false;
    TensorizationInfo tensorization;
    Dims3 tensor_dims;
    Ranks3 ranks;
    uint32_t intervals = 0;
    uint32_t factor_bits = 0;
    QuantizerModel embedded_model;  // meaningful when model_embedded
    std::array<FactorBlock, 3> factor_blocks;
    std::vector<ChunkSideInfo> side_info;  // one entry per interval
    std::vector<uint8_t> core_block;
};

// Container format "TDNC", version 1, little-endian, with a CRC32 over the
// body so corrupted files fail loudly instead of decoding into garbage.
std::vector<uint8_t> serialize(const CompressedPayload& p);
CompressedPayload deserialize(std::span<const uint8_t> bytes);

// Context-modeled range coding of the quantized core in raster order.
std::vector<uint8_t> encode_core_block(const QuantizedCore& q);
QuantizedCore decode_core_block(std::span<const uint8_t> block, Dims3 dims, uint32_t intervals,
                                const std::vector<ChunkSideInfo>& side_info);

uint64_t model_hash(const QuantizerModel& model);

double compute_bpp(size_t payload_bytes, uint64_t pixel_count);
// Source bits over payload bits, for 8-bit samples.
double compression_ratio(size_t payload_bytes, uint64_t pixel_count, uint32_t channels);

// Exact non-core bits of the serialized payload plus the pre-entropy core
// budget sum over chunks of population * (m + 1) bits.
uint64_t counting_bound_bits(const CompressedPayload& p);

// The same bound before anything is encoded: every element priced at the top
// chunk, all side info present. Used by rate control.
uint64_t worst_case_bits(Dims3 tensor_dims, Ranks3 ranks, uint32_t intervals,
                         uint32_t factor_bits, bool model_embedded);

}  // namespace tdnc
