#pragma once

#include "bitstream.hpp"
#include "image.hpp"

#include <optional>

namespace tdnc {

/// A payload references a quantizer model this instance does not hold: an
/// unknown config id or a model fitted by a different instance.
class MissingModelError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct TensorizationDescriptor {
    Tensorization strategy = Tensorization::kPatchStack;
    uint32_t patch = 16;

    void validate() const;
};

// Patch-stack tensorization: the image is reflect-padded on the right and
// bottom to a multiple of the patch size, split into BxB patches, and stacked
// as tensor (B, B, P) with P = patch count * channels. Patches run in raster
// order with the channels of one patch adjacent; samples map to [0, 1].
Tensor3 tensorize(const ImageBuffer& img, const TensorizationDescriptor& d,
                  TensorizationInfo* info = nullptr);
ImageBuffer detensorize(const Tensor3& t, const TensorizationInfo& info);

// Ranks actually used for a tensor of the given shape. Nominal configs are
// stated for the 40x40x32 reference shape: in patch-stack mode the two
// spatial ranks scale by B/40 (rounded up) and the mode-3 rank is clamped to
// the patch count; in latent mode ranks clamp to dims.
Ranks3 effective_ranks(const RateConfig& config, Dims3 dims, Tensorization strategy);

/// One codec serving several operating points: rate configs bound to
/// corpus-fitted quantizer models.
class CodecInstance {
  public:
    struct Entry {
        RateConfig config;
        QuantizerModel model;
        uint64_t sample_count = 0;  // magnitudes pooled during fitting
        bool corpus_fitted = false;
    };

    // Fits one Lloyd model per config: Tucker-decomposes every corpus tensor
    // at the config's effective ranks and pools the core magnitudes.
    static CodecInstance fit(const std::vector<Tensor3>& corpus,
                             const std::vector<RateConfig>& configs,
                             Tensorization strategy = Tensorization::kLatent);
    static CodecInstance fit_images(const std::vector<ImageBuffer>& corpus,
                                    const std::vector<RateConfig>& configs,
                                    const TensorizationDescriptor& d = {});

    // Registers a config that was not fitted: reuses the fitted model with
    // the same interval count (nearest ranks on ties), otherwise derives a
    // smaller model from the nearest larger one by Lloyd iteration on its
    // weighted representatives.
    void add_derived_config(const RateConfig& config);
    void add_config_with_model(const RateConfig& config, QuantizerModel model);

    bool has(uint32_t config_id) const;
    const Entry& entry(uint32_t config_id) const;
    const std::vector<Entry>& entries() const { return entries_; }

    std::vector<uint8_t> to_bytes() const;
    static CodecInstance from_bytes(std::span<const uint8_t> bytes);
    void save(const std::string& path) const;
    static CodecInstance load(const std::string& path);

  private:
    void append(Entry entry);
    std::vector<Entry> entries_;
};

struct CompressOptions {
    TensorizationDescriptor descriptor;
    bool embed_model = false;
    HooiSettings hooi;
};

std::vector<uint8_t> compress(const CodecInstance& inst, const ImageBuffer& img,
                              uint32_t config_id, const CompressOptions& opts = {});
std::vector<uint8_t> compress_tensor(const CodecInstance& inst, const Tensor3& tensor,
                                     uint32_t config_id, const CompressOptions& opts = {});

ImageBuffer decompress(const CodecInstance& inst, std::span<const uint8_t> payload);
Tensor3 decompress_tensor(const CodecInstance& inst, std::span<const uint8_t> payload,
                          TensorizationInfo* info = nullptr);

struct RateChoice {
    uint32_t config_id = 0;
    bool overshoot = false;  // every config's bound exceeds the target
    double bound_bpp = 0.0;
};

// Picks the config whose analytic worst-case bpp bound is largest while not
// exceeding the target; if none fits, the smallest config with the overshoot
// flag set.
RateChoice rate_control(const CodecInstance& inst, double target_bpp, uint32_t width,
                        uint32_t height, uint32_t channels,
                        const TensorizationDescriptor& d = {});

}  // namespace tdnc
