#include "tdnc/tdnc.h"

#include "bitio.hpp"
#include "codec.hpp"
#include "metrics.hpp"

#include <cstring>
#include <string>

struct tdnc_image {
    tdnc::ImageBuffer impl;
};
struct tdnc_tensor {
    tdnc::Tensor3 impl;
};
struct tdnc_instance {
    tdnc::CodecInstance impl;
};

namespace {

thread_local std::string g_last_error;

tdnc_status fail(tdnc_status status, const std::string& message) {
    g_last_error = message;
    return status;
}

// Runs `fn`, translating exceptions into status codes.
template <typename Fn>
tdnc_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return TDNC_OK;
    } catch (const tdnc::ParseError& e) {
        return fail(TDNC_ERR_PARSE, e.what());
    } catch (const tdnc::MissingModelError& e) {
        return fail(TDNC_ERR_MISSING_MODEL, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(TDNC_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::runtime_error& e) {
        std::string msg = e.what();
        if (msg.find("open") != std::string::npos || msg.find("read failed") != std::string::npos ||
            msg.find("write failed") != std::string::npos)
            return fail(TDNC_ERR_IO, msg);
        return fail(TDNC_ERR_INTERNAL, msg);
    } catch (const std::exception& e) {
        return fail(TDNC_ERR_INTERNAL, e.what());
    }
}

tdnc::RateConfig to_config(const tdnc_rate_config& c) {
    tdnc::RateConfig out;
    out.id = c.id;
    out.ranks = {c.r1, c.r2, c.r3};
    out.intervals = c.intervals;
    out.factor_bits = c.factor_bits;
    return out;
}

tdnc_rate_config from_config(const tdnc::RateConfig& c) {
    return {c.id, c.ranks.r1, c.ranks.r2, c.ranks.r3, c.intervals, c.factor_bits};
}

uint8_t* copy_out(const std::vector<uint8_t>& bytes, size_t* out_size) {
    uint8_t* buf = new uint8_t[bytes.size()];
    std::memcpy(buf, bytes.data(), bytes.size());
    *out_size = bytes.size();
    return buf;
}

bool has_suffix(const std::string& s, const char* suffix) {
    std::string suf(suffix);
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

}  // namespace

extern "C" {

const char* tdnc_status_name(tdnc_status status) {
    switch (status) {
        case TDNC_OK: return "ok";
        case TDNC_ERR_INVALID_ARGUMENT: return "invalid argument";
        case TDNC_ERR_IO: return "i/o error";
        case TDNC_ERR_PARSE: return "parse error";
        case TDNC_ERR_MISSING_MODEL: return "missing model";
        case TDNC_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* tdnc_last_error(void) { return g_last_error.c_str(); }

uint32_t tdnc_version(void) { return (1u << 16) | 0u; }

tdnc_status tdnc_image_create(uint32_t width, uint32_t height, uint32_t channels,
                              const uint8_t* samples, tdnc_image** out) {
    if (!samples || !out) return fail(TDNC_ERR_INVALID_ARGUMENT, "null pointer argument");
    return guarded([&] {
        std::vector<uint8_t> data(samples, samples + size_t(width) * height * channels);
        *out = new tdnc_image{tdnc::ImageBuffer(width, height, channels, std::move(data))};
    });
}

tdnc_status tdnc_image_load(const char* path, tdnc_image** out) {
    if (!path || !out) return fail(TDNC_ERR_INVALID_ARGUMENT, "null pointer argument");
    return guarded([&] { *out = new tdnc_image{tdnc::load_image(path)}; });
}

tdnc_status tdnc_image_save(const tdnc_image* img, const char* path) {
    if (!img || !path) return fail(TDNC_ERR_INVALID_ARGUMENT, "null pointer argument");
    return guarded([&] { tdnc::save_image(img->impl, path); });
}

uint32_t tdnc_image_width(const tdnc_image* img) { return img ? img->impl.width : 0; }
uint32_t tdnc_image_height(const tdnc_image* img) { return img ? img->impl.height : 0; }
uint32_t tdnc_image_channels(const tdnc_image* img) { return img ? img->impl.channels : 0; }
const uint8_t* tdnc_image_samples(const tdnc_image* img) {
    return img ? img->impl.samples.data() : nullptr;
}
void tdnc_image_free(tdnc_image* img) { delete img; }

tdnc_status tdnc_tensor_create(uint32_t d1, uint32_t d2, uint32_t d3, const double* data,
                               tdnc_tensor** out) {
    if (!data || !out) return fail(TDNC_ERR_INVALID_ARGUMENT, "null pointer argument");
    return guarded([&] {
        tdnc::Dims3 dims{d1, d2, d3};
        std::vector<double> values(data, data + dims.count());
        *out = new tdnc_tensor{tdnc::Tensor3(dims, std::move(values))};
    });
}

tdnc_status tdnc_tensor_load(const char* path, tdnc_tensor** out) {
    if (!path || !out) return fail(TDNC_ERR_INVALID_ARGUMENT, "null pointer argument");
    return guarded([&] { *out = new tdnc_tensor{tdnc::load_tensor(path)}; });
}

tdnc_status tdnc_tensor_save(const tdnc_tensor* tensor, const char* path) {
    if (!tensor || !path) return fail(TDNC_ERR_INVALID_ARGUMENT, "null pointer argument");
    return guarded([&] { tdnc::save_tensor(tensor->impl, path); });
}

void tdnc_tensor_dims(const tdnc_tensor* tensor, uint32_t* d1, uint32_t* d2, uint32_t* d3) {
    if (!tensor) return;
    if (d1) *d1 = tensor->impl.dims().d1;
    if (d2) *d2 = tensor->impl.dims().d2;
    if (d3) *d3 = tensor->impl.dims().d3;
}

const double* tdnc_tensor_data(const tdnc_tensor* tensor) {
    return tensor ? tensor->impl.data().data() : nullptr;
}

void tdnc_tensor_free(tdnc_tensor* tensor) { delete tensor; }

tdnc_status tdnc_fit(const char* const* corpus_paths, size_t corpus_count,
                     const tdnc_rate_config* configs, size_t config_count, tdnc_instance** out) {
    if (!corpus_paths || !configs || !out)
        return fail(TDNC_ERR_INVALID_ARGUMENT, "null pointer argument");
    return guarded([&] {
        std::vector<tdnc::RateConfig> cfgs;
        for (size_t i = 0; i < config_count; ++i) cfgs.push_back(to_config(configs[i]));

        size_t tensor_files = 0;
        for (size_t i = 0; i < corpus_count; ++i)
            if (has_suffix(corpus_paths[i], ".tdt3")) ++tensor_files;

        if (tensor_files == corpus_count && corpus_count > 0) {
            std::vector<tdnc::Tensor3> corpus;
            for (size_t i = 0; i < corpus_count; ++i)
                corpus.push_back(tdnc::load_tensor(corpus_paths[i]));
            *out = new tdnc_instance{tdnc::CodecInstance::fit(corpus, cfgs)};
        } else if (tensor_files == 0) {
            std::vector<tdnc::ImageBuffer> corpus;
            for (size_t i = 0; i < corpus_count; ++i)
                corpus.push_back(tdnc::load_image(corpus_paths[i]));
            *out = new tdnc_instance{tdnc::CodecInstance::fit_images(corpus, cfgs)};
        } else {
            throw std::invalid_argument("corpus mixes images and .tdt3 tensors");
        }
    });
}

tdnc_status tdnc_instance_save(const tdnc_instance* inst, const char* path) {
    if (!inst || !path) return fail(TDNC_ERR_INVALID_ARGUMENT, "null pointer argument");
    return guarded([&] { inst->impl.save(path); });
}

tdnc_status tdnc_instance_load(const char* path, tdnc_instance** out) {
    if (!path || !out) return fail(TDNC_ERR_INVALID_ARGUMENT, "null pointer argument");
    return guarded([&] { *out = new tdnc_instance{tdnc::CodecInstance::load(path)}; });
}

size_t tdnc_instance_config_count(const tdnc_instance* inst) {
    return inst ? inst->impl.entries().size() : 0;
}

tdnc_status tdnc_instance_config_at(const tdnc_instance* inst, size_t index,
                                    tdnc_rate_config* out) {
    if (!inst || !out) return fail(TDNC_ERR_INVALID_ARGUMENT, "null pointer argument");
    if (index >= inst->impl.entries().size())
        return fail(TDNC_ERR_INVALID_ARGUMENT, "config index out of range");
    *out = from_config(inst->impl.entries()[index].config);
    return TDNC_OK;
}

uint64_t tdnc_instance_sample_count(const tdnc_instance* inst, size_t index) {
    if (!inst || index >= inst->impl.entries().size()) return 0;
    return inst->impl.entries()[index].sample_count;
}

tdnc_status tdnc_instance_add_derived_config(tdnc_instance* inst, const tdnc_rate_config* config) {
    if (!inst || !config) return fail(TDNC_ERR_INVALID_ARGUMENT, "null pointer argument");
    return guarded([&] { inst->impl.add_derived_config(to_config(*config)); });
}

void tdnc_instance_free(tdnc_instance* inst) { delete inst; }

tdnc_status tdnc_compress_image(const tdnc_instance* inst, const tdnc_image* img,
                                uint32_t config_id, uint8_t** out, size_t* out_size) {
    if (!inst || !img || !out || !out_size)
        return fail(TDNC_ERR_INVALID_ARGUMENT, "null pointer argument");
    return guarded([&] {
        std::vector<uint8_t> bytes = tdnc::compress(inst->impl, img->impl, config_id);
        *out = copy_out(bytes, out_size);
    });
}

tdnc_status tdnc_compress_tensor(const tdnc_instance* inst, const tdnc_tensor* tensor,
                                 uint32_t config_id, uint8_t** out, size_t* out_size) {
    if (!inst || !tensor || !out || !out_size)
        return fail(TDNC_ERR_INVALID_ARGUMENT, "null pointer argument");
    return guarded([&] {
        std::vector<uint8_t> bytes = tdnc::compress_tensor(inst->impl, tensor->impl, config_id);
        *out = copy_out(bytes, out_size);
    });
}

tdnc_status tdnc_decompress_image(const tdnc_instance* inst, const uint8_t* payload,
                                  size_t payload_size, tdnc_image** out) {
    if (!inst || !payload || !out) return fail(TDNC_ERR_INVALID_ARGUMENT, "null pointer argument");
    return guarded([&] {
        *out = new tdnc_image{tdnc::decompress(inst->impl, {payload, payload_size})};
    });
}

tdnc_status tdnc_decompress_tensor(const tdnc_instance* inst, const uint8_t* payload,
                                   size_t payload_size, tdnc_tensor** out) {
    if (!inst || !payload || !out) return fail(TDNC_ERR_INVALID_ARGUMENT, "null pointer argument");
    return guarded([&] {
        *out = new tdnc_tensor{tdnc::decompress_tensor(inst->impl, {payload, payload_size})};
    });
}

void tdnc_buffer_free(uint8_t* buffer) { delete[] buffer; }

tdnc_status tdnc_payload_inspect(const uint8_t* payload, size_t payload_size,
                                 tdnc_payload_info* out) {
    if (!payload || !out) return fail(TDNC_ERR_INVALID_ARGUMENT, "null pointer argument");
    return guarded([&] {
        tdnc::CompressedPayload p = tdnc::deserialize({payload, payload_size});
        out->config_id = p.config_id;
        out->latent = p.tensorization.strategy == tdnc::Tensorization::kLatent ? 1 : 0;
        out->d1 = p.tensor_dims.d1;
        out->d2 = p.tensor_dims.d2;
        out->d3 = p.tensor_dims.d3;
        out->r1 = p.ranks.r1;
        out->r2 = p.ranks.r2;
        out->r3 = p.ranks.r3;
        out->intervals = p.intervals;
        out->factor_bits = p.factor_bits;
        out->width = p.tensorization.width;
        out->height = p.tensorization.height;
        out->channels = p.tensorization.channels;
        out->total_bits = uint64_t(payload_size) * 8;
    });
}

tdnc_status tdnc_select_config(const tdnc_instance* inst, double target_bpp, uint32_t width,
                               uint32_t height, uint32_t channels, uint32_t* config_id,
                               int* overshoot) {
    if (!inst || !config_id) return fail(TDNC_ERR_INVALID_ARGUMENT, "null pointer argument");
    return guarded([&] {
        tdnc::RateChoice choice =
            tdnc::rate_control(inst->impl, target_bpp, width, height, channels);
        *config_id = choice.config_id;
        if (overshoot) *overshoot = choice.overshoot ? 1 : 0;
    });
}

tdnc_status tdnc_psnr(const tdnc_image* a, const tdnc_image* b, double* out) {
    if (!a || !b || !out) return fail(TDNC_ERR_INVALID_ARGUMENT, "null pointer argument");
    return guarded([&] { *out = tdnc::psnr(a->impl, b->impl); });
}

tdnc_status tdnc_ms_ssim(const tdnc_image* a, const tdnc_image* b, double* out) {
    if (!a || !b || !out) return fail(TDNC_ERR_INVALID_ARGUMENT, "null pointer argument");
    return guarded([&] { *out = tdnc::ms_ssim(a->impl, b->impl); });
}

}  // extern "C"
