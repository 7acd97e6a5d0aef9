#include "codec.hpp"

#include "bitio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace tdnc {

void TensorizationDescriptor::validate() const {
    if (strategy != Tensorization::kPatchStack)
        throw std::invalid_argument("tensorization descriptor applies to patch-stack mode only");
    if (patch < 2 || patch > 64)
        throw std::invalid_argument("patch size must be in [2, 64]");
}

namespace {

// Symmetric reflection (abcd -> abcd|dcba), valid for any extent >= 1.
uint32_t reflect_index(uint32_t i, uint32_t extent) {
    if (extent == 1) return 0;
    uint32_t period = 2 * extent;
    uint32_t r = i % period;
    return r < extent ? r : period - 1 - r;
}

}  // namespace

Tensor3 tensorize(const ImageBuffer& img, const TensorizationDescriptor& d,
                  TensorizationInfo* info) {
    d.validate();
    if (img.channels != 1 && img.channels != 3)
        throw std::invalid_argument("tensorize: unsupported channel count");
    if (img.width == 0 || img.height == 0) throw std::invalid_argument("tensorize: empty image");

    const uint32_t b = d.patch;
    const uint32_t patches_x = (img.width + b - 1) / b;
    const uint32_t patches_y = (img.height + b - 1) / b;
    const uint32_t padded_w = patches_x * b, padded_h = patches_y * b;
    const uint32_t p_count = patches_x * patches_y * img.channels;

    TensorizationInfo out_info;
    out_info.strategy = Tensorization::kPatchStack;
    out_info.patch = uint16_t(b);
    out_info.pad_x = uint16_t(padded_w - img.width);
    out_info.pad_y = uint16_t(padded_h - img.height);
    out_info.width = img.width;
    out_info.height = img.height;
    out_info.channels = uint8_t(img.channels);
    if (info) *info = out_info;

    Tensor3 t({b, b, p_count});
    for (uint32_t pr = 0; pr < patches_y; ++pr) {
        for (uint32_t pc = 0; pc < patches_x; ++pc) {
            for (uint32_t c = 0; c < img.channels; ++c) {
                uint32_t p = (pr * patches_x + pc) * img.channels + c;
                for (uint32_t y = 0; y < b; ++y) {
                    uint32_t sy = reflect_index(pr * b + y, img.height);
                    for (uint32_t x = 0; x < b; ++x) {
                        uint32_t sx = reflect_index(pc * b + x, img.width);
                        t(y, x, p) = img.at(sx, sy, c) / 255.0;
                    }
                }
            }
        }
    }
    return t;
}

ImageBuffer detensorize(const Tensor3& t, const TensorizationInfo& info) {
    if (info.strategy != Tensorization::kPatchStack)
        throw std::invalid_argument("detensorize: payload carries no tensorization");
    const uint32_t b = info.patch;
    if (b == 0 || t.dims().d1 != b || t.dims().d2 != b)
        throw std::invalid_argument("detensorize: tensor shape disagrees with descriptor");
    const uint32_t padded_w = info.width + info.pad_x, padded_h = info.height + info.pad_y;
    const uint32_t patches_x = padded_w / b, patches_y = padded_h / b;
    if (padded_w % b || padded_h % b ||
        t.dims().d3 != patches_x * patches_y * info.channels)
        throw std::invalid_argument("detensorize: tensor shape disagrees with descriptor");

    ImageBuffer img(info.width, info.height, info.channels);
    for (uint32_t pr = 0; pr < patches_y; ++pr) {
        for (uint32_t pc = 0; pc < patches_x; ++pc) {
            for (uint32_t c = 0; c < info.channels; ++c) {
                uint32_t p = (pr * patches_x + pc) * info.channels + c;
                for (uint32_t y = 0; y < b; ++y) {
                    uint32_t sy = pr * b + y;
                    if (sy >= info.height) continue;
                    for (uint32_t x = 0; x < b; ++x) {
                        uint32_t sx = pc * b + x;
                        if (sx >= info.width) continue;
                        long v = std::lround(t(y, x, p) * 255.0);
                        img.at(sx, sy, c) = uint8_t(std::clamp(v, 0L, 255L));
                    }
                }
            }
        }
    }
    return img;
}

Ranks3 effective_ranks(const RateConfig& config, Dims3 dims, Tensorization strategy) {
    auto clamp_rank = [](double r, uint32_t dim) {
        return uint32_t(std::clamp(r, 1.0, double(dim)));
    };
    if (strategy == Tensorization::kLatent) {
        return {clamp_rank(config.ranks.r1, dims.d1), clamp_rank(config.ranks.r2, dims.d2),
                clamp_rank(config.ranks.r3, dims.d3)};
    }
    // Nominal ranks are stated for the 40x40x32 reference latent shape. The
    // spatial scaling rounds up, in exact integer arithmetic, so configs that
    // differ nominally keep distinct operating points after scaling.
    auto scaled = [](uint32_t rank, uint32_t dim) {
        return (uint64_t(rank) * dim + 39) / 40;
    };
    return {clamp_rank(double(scaled(config.ranks.r1, dims.d1)), dims.d1),
            clamp_rank(double(scaled(config.ranks.r2, dims.d2)), dims.d2),
            clamp_rank(config.ranks.r3, dims.d3)};
}

namespace {

constexpr size_t kMaxPoolSamples = size_t(1) << 22;

void pool_magnitudes(const Tensor3& core, std::vector<double>& pool) {
    for (double v : core.data()) pool.push_back(std::abs(v));
}

// Deterministic thinning: keep every ceil(n / cap)-th sample starting at 0.
void thin_pool(std::vector<double>& pool) {
    if (pool.size() <= kMaxPoolSamples) return;
    size_t stride = (pool.size() + kMaxPoolSamples - 1) / kMaxPoolSamples;
    size_t out = 0;
    for (size_t i = 0; i < pool.size(); i += stride) pool[out++] = pool[i];
    pool.resize(out);
}

}  // namespace

CodecInstance CodecInstance::fit(const std::vector<Tensor3>& corpus,
                                 const std::vector<RateConfig>& configs,
                                 Tensorization strategy) {
    if (corpus.empty()) throw std::invalid_argument("fit: empty corpus");
    if (configs.empty()) throw std::invalid_argument("fit: no rate configs");

    CodecInstance inst;
    for (const RateConfig& config : configs) {
        config.validate();
        std::vector<double> pool;
        for (const Tensor3& x : corpus) {
            Ranks3 eff = effective_ranks(config, x.dims(), strategy);
            HooiResult r = hooi(x, eff);
            pool_magnitudes(r.factors.core, pool);
        }
        thin_pool(pool);
        LloydFit fit = fit_lloyd(pool, config.intervals, 1e-10, 500);
        inst.append(Entry{config, std::move(fit.model), pool.size(), true});
    }
    return inst;
}

CodecInstance CodecInstance::fit_images(const std::vector<ImageBuffer>& corpus,
                                        const std::vector<RateConfig>& configs,
                                        const TensorizationDescriptor& d) {
    std::vector<Tensor3> tensors;
    tensors.reserve(corpus.size());
    for (const ImageBuffer& img : corpus) tensors.push_back(tensorize(img, d));
    return fit(tensors, configs, Tensorization::kPatchStack);
}

void CodecInstance::append(Entry entry) {
    if (has(entry.config.id)) throw std::invalid_argument("duplicate config id in instance");
    entry.model.validate();
    if (entry.model.intervals != entry.config.intervals)
        throw std::invalid_argument("model intervals disagree with config");
    entries_.push_back(std::move(entry));
}

void CodecInstance::add_derived_config(const RateConfig& config) {
    config.validate();

    auto rank_distance = [&](const Entry& e) {
        auto d = [](uint32_t a, uint32_t b) { return a > b ? a - b : b - a; };
        return d(e.config.ranks.r1, config.ranks.r1) + d(e.config.ranks.r2, config.ranks.r2) +
               d(e.config.ranks.r3, config.ranks.r3);
    };

    // Prefer a fitted model with the exact interval count.
    const Entry* best = nullptr;
    for (const Entry& e : entries_) {
        if (!e.corpus_fitted || e.config.intervals != config.intervals) continue;
        if (!best || rank_distance(e) < rank_distance(*best) ||
            (rank_distance(e) == rank_distance(*best) && e.config.id < best->config.id))
            best = &e;
    }
    if (best) {
        append(Entry{config, best->model, 0, false});
        return;
    }

    // Otherwise shrink the closest larger model: Lloyd on its representatives
    // weighted by the fitted cell masses.
    for (const Entry& e : entries_) {
        if (!e.corpus_fitted || e.config.intervals < config.intervals || e.model.weights.empty())
            continue;
        if (!best) { best = &e; continue; }
        auto key = [&](const Entry& x) {
            return std::tuple(x.config.intervals, rank_distance(x), x.config.id);
        };
        if (key(e) < key(*best)) best = &e;
    }
    if (!best)
        throw std::invalid_argument(
            "no fitted model can serve this interval count; refit with a larger config set");

    std::vector<double> values, weights;
    for (uint32_t q = 0; q < best->model.intervals; ++q) {
        if (best->model.weights[q] <= 0.0) continue;
        values.push_back(best->model.representatives[q]);
        weights.push_back(best->model.weights[q]);
    }
    LloydFit fit = fit_lloyd_weighted(values, weights, config.intervals, 1e-12, 200);
    append(Entry{config, std::move(fit.model), 0, false});
}

void CodecInstance::add_config_with_model(const RateConfig& config, QuantizerModel model) {
    config.validate();
    append(Entry{config, std::move(model), 0, false});
}

bool CodecInstance::has(uint32_t config_id) const {
    for (const Entry& e : entries_)
        if (e.config.id == config_id) return true;
    return false;
}

const CodecInstance::Entry& CodecInstance::entry(uint32_t config_id) const {
    for (const Entry& e : entries_)
        if (e.config.id == config_id) return e;
    throw MissingModelError("config id not present in codec instance: " +
                            std::to_string(config_id));
}

namespace {
constexpr char kInstanceMagic[4] = {'T', 'D', 'N', 'I'};
constexpr uint8_t kInstanceVersion = 1;
}  // namespace

std::vector<uint8_t> CodecInstance::to_bytes() const {
    ByteWriter w;
    w.bytes(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(kInstanceMagic), 4));
    w.u8(kInstanceVersion);
    w.u32(uint32_t(entries_.size()));
    for (const Entry& e : entries_) {
        w.u32(e.config.id);
        w.u32(e.config.ranks.r1);
        w.u32(e.config.ranks.r2);
        w.u32(e.config.ranks.r3);
        w.u8(uint8_t(e.config.intervals));
        w.u8(uint8_t(e.config.factor_bits));
        w.u8(e.corpus_fitted ? 1 : 0);
        w.u64(e.sample_count);
        w.u8(uint8_t(e.model.intervals));
        for (double b : e.model.boundaries) w.f64(b);
        for (double r : e.model.representatives) w.f64(r);
        w.u8(e.model.weights.empty() ? 0 : 1);
        for (double x : e.model.weights) w.f64(x);
    }
    std::vector<uint8_t> out = w.take();
    uint32_t crc = crc32_of(out);
    for (int i = 0; i < 4; ++i) out.push_back(uint8_t(crc >> (8 * i)));
    return out;
}

CodecInstance CodecInstance::from_bytes(std::span<const uint8_t> bytes) {
    if (bytes.size() < 13) throw ParseError(0, "instance", "input truncated");
    uint32_t stored_crc = 0;
    for (int i = 0; i < 4; ++i) stored_crc |= uint32_t(bytes[bytes.size() - 4 + i]) << (8 * i);
    if (crc32_of(bytes.first(bytes.size() - 4)) != stored_crc)
        throw ParseError(bytes.size() - 4, "instance crc", "checksum mismatch");

    ByteReader r(bytes.first(bytes.size() - 4));
    auto magic = r.bytes(4, "instance magic");
    if (std::memcmp(magic.data(), kInstanceMagic, 4) != 0)
        throw ParseError(0, "instance magic", "not a TDNI file");
    if (r.u8("instance version") != kInstanceVersion)
        throw ParseError(4, "instance version", "unsupported version");

    uint32_t count = r.u32("entry count");
    CodecInstance inst;
    for (uint32_t i = 0; i < count; ++i) {
        Entry e;
        e.config.id = r.u32("config id");
        e.config.ranks.r1 = r.u32("rank 1");
        e.config.ranks.r2 = r.u32("rank 2");
        e.config.ranks.r3 = r.u32("rank 3");
        e.config.intervals = r.u8("intervals");
        e.config.factor_bits = r.u8("factor bit depth");
        e.corpus_fitted = r.u8("fitted flag") != 0;
        e.sample_count = r.u64("sample count");
        e.config.validate();

        e.model.intervals = r.u8("model intervals");
        if (e.model.intervals < 1 || e.model.intervals > kMaxIntervals)
            throw ParseError(r.offset() - 1, "model intervals", "out of supported range");
        e.model.boundaries.resize(e.model.intervals + 1);
        for (auto& b : e.model.boundaries) b = r.f64("model boundary");
        e.model.representatives.resize(e.model.intervals);
        for (auto& v : e.model.representatives) v = r.f64("model representative");
        if (r.u8("weights flag")) {
            e.model.weights.resize(e.model.intervals);
            for (auto& x : e.model.weights) x = r.f64("model weight");
        }
        inst.append(std::move(e));
    }
    if (r.remaining() != 0) throw ParseError(r.offset(), "instance", "trailing bytes");
    return inst;
}

void CodecInstance::save(const std::string& path) const {
    std::vector<uint8_t> bytes = to_bytes();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
}

CodecInstance CodecInstance::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f) throw std::runtime_error("cannot open: " + path);
    auto size = size_t(f.tellg());
    f.seekg(0);
    std::vector<uint8_t> bytes(size);
    f.read(reinterpret_cast<char*>(bytes.data()), std::streamsize(size));
    if (!f) throw std::runtime_error("read failed: " + path);
    return from_bytes(bytes);
}

namespace {

std::vector<uint8_t> compress_core(const CodecInstance::Entry& entry, const Tensor3& x,
                                   const TensorizationInfo& info, const CompressOptions& opts) {
    Tensorization strategy = info.strategy;
    Ranks3 eff = effective_ranks(entry.config, x.dims(), strategy);
    HooiResult hooi_result = hooi(x, eff, opts.hooi);

    CompressedPayload p;
    p.config_id = entry.config.id;
    p.model_hash = model_hash(entry.model);
    p.model_embedded = opts.embed_model;
    if (opts.embed_model) p.embedded_model = entry.model;
    p.tensorization = info;
    p.tensor_dims = x.dims();
    p.ranks = eff;
    p.intervals = entry.config.intervals;
    p.factor_bits = entry.config.factor_bits;

    // The core is computed against the factors the decoder will actually
    // hold, so factor quantization error does not leak into the core.
    std::array<Matrix, 3> decoded_factors;
    for (int n = 0; n < 3; ++n) {
        p.factor_blocks[size_t(n)] =
            encode_factor_matrix(hooi_result.factors.factors[size_t(n)], entry.config.factor_bits);
        decoded_factors[size_t(n)] = decode_factor_matrix(p.factor_blocks[size_t(n)]);
    }
    Tensor3 core = core_from_factors(x, decoded_factors);

    QuantizedCore q = quantize_core(core, entry.model);
    p.side_info = q.chunks;
    p.core_block = encode_core_block(q);
    return serialize(p);
}

}  // namespace

std::vector<uint8_t> compress(const CodecInstance& inst, const ImageBuffer& img,
                              uint32_t config_id, const CompressOptions& opts) {
    const CodecInstance::Entry& e = inst.entry(config_id);
    TensorizationInfo info;
    Tensor3 x = tensorize(img, opts.descriptor, &info);
    return compress_core(e, x, info, opts);
}

std::vector<uint8_t> compress_tensor(const CodecInstance& inst, const Tensor3& tensor,
                                     uint32_t config_id, const CompressOptions& opts) {
    const CodecInstance::Entry& e = inst.entry(config_id);
    TensorizationInfo info;  // latent: no tensorization applied
    info.strategy = Tensorization::kLatent;
    return compress_core(e, tensor, info, opts);
}

Tensor3 decompress_tensor(const CodecInstance& inst, std::span<const uint8_t> payload,
                          TensorizationInfo* info) {
    CompressedPayload p = deserialize(payload);

    if (p.model_embedded) {
        p.embedded_model.validate();
        if (model_hash(p.embedded_model) != p.model_hash)
            throw std::runtime_error("decompress: embedded model does not match its hash");
    } else {
        if (!inst.has(p.config_id))
            throw MissingModelError("decompress: config id " + std::to_string(p.config_id) +
                                    " not present in this codec instance");
        const CodecInstance::Entry& e = inst.entry(p.config_id);
        if (model_hash(e.model) != p.model_hash)
            throw MissingModelError(
                "decompress: quantizer model mismatch (payload was produced by a different "
                "instance)");
    }

    Dims3 core_dims{p.ranks.r1, p.ranks.r2, p.ranks.r3};
    QuantizedCore q = decode_core_block(p.core_block, core_dims, p.intervals, p.side_info);
    Tensor3 core = dequantize_core(q);

    Tensor3 result = core;
    for (int n = 1; n <= 3; ++n)
        result = mode_n_product(result, decode_factor_matrix(p.factor_blocks[size_t(n - 1)]), n);

    if (info) *info = p.tensorization;
    return result;
}

ImageBuffer decompress(const CodecInstance& inst, std::span<const uint8_t> payload) {
    TensorizationInfo info;
    Tensor3 t = decompress_tensor(inst, payload, &info);
    if (info.strategy == Tensorization::kLatent)
        throw std::runtime_error("decompress: latent payload holds a tensor, not an image");
    return detensorize(t, info);
}

RateChoice rate_control(const CodecInstance& inst, double target_bpp, uint32_t width,
                        uint32_t height, uint32_t channels, const TensorizationDescriptor& d) {
    d.validate();
    if (inst.entries().empty()) throw std::invalid_argument("rate control: empty instance");
    if (width == 0 || height == 0) throw std::invalid_argument("rate control: empty image");

    const uint32_t b = d.patch;
    const uint32_t patches = ((width + b - 1) / b) * ((height + b - 1) / b) * channels;
    Dims3 dims{b, b, patches};
    uint64_t pixels = uint64_t(width) * height;

    std::vector<RateChoice> choices;
    for (const auto& e : inst.entries()) {
        Ranks3 eff = effective_ranks(e.config, dims, Tensorization::kPatchStack);
        uint64_t bits = worst_case_bits(dims, eff, e.config.intervals, e.config.factor_bits, false);
        choices.push_back({e.config.id, false, double(bits) / double(pixels)});
    }
    std::sort(choices.begin(), choices.end(), [](const RateChoice& a, const RateChoice& b2) {
        return std::tuple(a.bound_bpp, a.config_id) < std::tuple(b2.bound_bpp, b2.config_id);
    });

    RateChoice chosen = choices.front();
    chosen.overshoot = true;
    for (const RateChoice& c : choices) {
        if (c.bound_bpp <= target_bpp) {
            chosen = c;
            chosen.overshoot = false;
        }
    }
    return chosen;
}

}  // namespace tdnc
