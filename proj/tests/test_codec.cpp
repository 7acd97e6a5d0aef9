#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bitio.hpp"
#include "codec.hpp"
#include "metrics.hpp"
#include "testutil.hpp"

#include <filesystem>

using namespace tdnc;
using namespace tdnc::test;

namespace {

RateConfig make_config(uint32_t id, uint32_t r1, uint32_t r2, uint32_t r3, uint32_t m,
                       uint32_t bits = 16) {
    RateConfig c;
    c.id = id;
    c.ranks = {r1, r2, r3};
    c.intervals = m;
    c.factor_bits = bits;
    return c;
}

// The four fitting groups and the six evaluation groups.
std::vector<RateConfig> training_configs() {
    return {make_config(1, 38, 37, 28, 5), make_config(2, 36, 35, 26, 4),
            make_config(3, 34, 31, 23, 3), make_config(4, 34, 30, 22, 3)};
}

std::vector<RateConfig> evaluation_configs() {
    return {make_config(1, 38, 37, 28, 5),  make_config(2, 36, 35, 26, 4),
            make_config(5, 35, 32, 23, 4),  make_config(3, 34, 31, 23, 3),
            make_config(4, 34, 30, 22, 3),  make_config(6, 34, 30, 22, 2)};
}

ImageBuffer constant_image(uint32_t w, uint32_t h, uint32_t channels, uint8_t value) {
    ImageBuffer img(w, h, channels);
    for (auto& s : img.samples) s = value;
    return img;
}

}  // namespace

TEST_CASE("tensorize/detensorize is a bit-exact inverse pair") {
    Rng rng(1);
    for (auto [w, h, c] : {std::tuple<uint32_t, uint32_t, uint32_t>{32, 32, 1},
                           {48, 48, 3},
                           {37, 53, 3},    // forces reflect padding
                           {5, 9, 1}}) {   // smaller than one patch
        ImageBuffer img(w, h, c);
        for (auto& s : img.samples) s = uint8_t(rng.next() & 0xFF);
        TensorizationInfo info;
        Tensor3 t = tensorize(img, {}, &info);
        CHECK(detensorize(t, info) == img);
    }
}

TEST_CASE("patch-stack shapes follow the descriptor arithmetic") {
    TensorizationInfo info;
    Tensor3 a = tensorize(constant_image(32, 32, 1, 7), {}, &info);
    CHECK(a.dims() == Dims3{16, 16, 4});
    CHECK(info.pad_x == 0);

    Tensor3 b = tensorize(constant_image(320, 320, 3, 7), {});
    CHECK(b.dims() == Dims3{16, 16, 1200});

    Tensor3 c = tensorize(constant_image(33, 17, 3, 7), {}, &info);
    CHECK(c.dims() == Dims3{16, 16, 18});  // padded to 48 x 32
    CHECK(info.pad_x == 15);
    CHECK(info.pad_y == 15);
}

TEST_CASE("tensorize normalizes samples into [0, 1]") {
    ImageBuffer img = constant_image(16, 16, 1, 255);
    Tensor3 t = tensorize(img, {});
    for (double v : t.data()) CHECK(v == 1.0);
}

TEST_CASE("effective ranks scale spatially and clamp on mode 3") {
    RateConfig c = make_config(1, 38, 37, 28, 5);
    // 16/40 scaling of the spatial ranks (rounded up), mode-3 rank kept.
    CHECK(effective_ranks(c, {16, 16, 1200}, Tensorization::kPatchStack) == Ranks3{16, 15, 28});
    // Clamp when the tensor is small.
    CHECK(effective_ranks(c, {16, 16, 4}, Tensorization::kPatchStack) == Ranks3{16, 15, 4});
    // Latent mode: nominal ranks clamped to dims only.
    CHECK(effective_ranks(c, {40, 40, 32}, Tensorization::kLatent) == Ranks3{38, 37, 28});
    CHECK(effective_ranks(c, {20, 40, 32}, Tensorization::kLatent) == Ranks3{20, 37, 28});
}

TEST_CASE("fitting a single-image corpus with one interval gives the magnitude mean") {
    std::vector<ImageBuffer> corpus = {synthetic_image(3, 48, 48, 1)};
    std::vector<RateConfig> configs = {make_config(1, 40, 40, 9, 1)};
    CodecInstance inst = CodecInstance::fit_images(corpus, configs);

    const auto& entry = inst.entries()[0];
    CHECK(entry.model.intervals == 1);

    Tensor3 t = tensorize(corpus[0], {});
    Ranks3 eff = effective_ranks(configs[0], t.dims(), Tensorization::kPatchStack);
    Tensor3 core = hooi(t, eff).factors.core;
    double mean = 0.0;
    for (double v : core.data()) mean += std::abs(v);
    mean /= double(core.size());
    CHECK(entry.model.representatives[0] == doctest::Approx(mean).epsilon(1e-12));
    CHECK(entry.sample_count == core.size());
}

TEST_CASE("refitting the same corpus reproduces the instance byte for byte") {
    std::vector<ImageBuffer> corpus = {synthetic_image(4, 48, 48, 3), synthetic_image(5, 48, 48, 3)};
    std::vector<RateConfig> configs = {make_config(1, 38, 37, 28, 4), make_config(2, 34, 30, 22, 3)};
    CodecInstance a = CodecInstance::fit_images(corpus, configs);
    CodecInstance b = CodecInstance::fit_images(corpus, configs);
    CHECK(a.to_bytes() == b.to_bytes());
}

TEST_CASE("fit pools exactly what a direct Lloyd fit over the corpus sees") {
    Rng rng(6);
    std::vector<Tensor3> corpus;
    for (int i = 0; i < 3; ++i) {
        Tensor3 t({10, 10, 10});
        for (double& v : t.data()) v = rng.normal() * 0.5;
        corpus.push_back(std::move(t));
    }
    std::vector<RateConfig> configs = {make_config(1, 6, 6, 6, 4)};
    CodecInstance inst = CodecInstance::fit(corpus, configs, Tensorization::kLatent);

    std::vector<double> pooled;
    for (const Tensor3& x : corpus) {
        Tensor3 core = hooi(x, {6, 6, 6}).factors.core;
        for (double v : core.data()) pooled.push_back(std::abs(v));
    }
    LloydFit direct = fit_lloyd(pooled, 4, 1e-10, 500);
    CHECK(inst.entries()[0].model.boundaries == direct.model.boundaries);
    CHECK(inst.entries()[0].model.representatives == direct.model.representatives);
}

TEST_CASE("instance files round trip and reject corruption") {
    std::vector<ImageBuffer> corpus = {synthetic_image(7, 48, 48, 1)};
    CodecInstance inst = CodecInstance::fit_images(corpus, {make_config(1, 20, 20, 9, 3)});
    std::vector<uint8_t> bytes = inst.to_bytes();
    CodecInstance back = CodecInstance::from_bytes(bytes);
    CHECK(back.to_bytes() == bytes);

    std::vector<uint8_t> corrupt = bytes;
    corrupt[10] ^= 0x10;
    CHECK_THROWS_AS(CodecInstance::from_bytes(corrupt), ParseError);

    auto path = std::filesystem::temp_directory_path() / "tdnc_test_instance.tdni";
    inst.save(path.string());
    CHECK(CodecInstance::load(path.string()).to_bytes() == bytes);
    std::filesystem::remove(path);
}

TEST_CASE("constant-color images reconstruct nearly exactly at any config") {
    std::vector<ImageBuffer> corpus = {synthetic_image(8, 64, 64, 3)};
    CodecInstance inst = CodecInstance::fit_images(corpus, {make_config(1, 34, 30, 22, 3)});

    ImageBuffer flat = constant_image(64, 64, 3, 183);
    std::vector<uint8_t> payload = compress(inst, flat, 1);
    ImageBuffer back = decompress(inst, payload);
    CHECK(psnr(flat, back) >= 50.0);
}

TEST_CASE("compression is deterministic end to end") {
    std::vector<ImageBuffer> corpus = {synthetic_image(9, 64, 64, 3)};
    CodecInstance inst = CodecInstance::fit_images(corpus, {make_config(1, 36, 35, 26, 4)});
    ImageBuffer img = synthetic_image(10, 64, 64, 3);
    std::vector<uint8_t> a = compress(inst, img, 1);
    std::vector<uint8_t> b = compress(inst, img, 1);
    CHECK(a == b);
    ImageBuffer da = decompress(inst, a);
    ImageBuffer db = decompress(inst, b);
    CHECK(da == db);
}

TEST_CASE("round trips preserve image geometry and finite quality") {
    std::vector<ImageBuffer> corpus = {synthetic_image(11, 80, 60, 3)};
    CodecInstance inst = CodecInstance::fit_images(corpus, {make_config(1, 38, 37, 28, 5)});
    ImageBuffer img = synthetic_image(12, 80, 60, 3);  // padding path included
    std::vector<uint8_t> payload = compress(inst, img, 1);
    ImageBuffer back = decompress(inst, payload);
    CHECK(back.width == img.width);
    CHECK(back.height == img.height);
    CHECK(back.channels == img.channels);
    double quality = psnr(img, back);
    CHECK(std::isfinite(quality));
    CHECK(quality > 0.0);
}

TEST_CASE("larger configs spend at least as many bits") {
    std::vector<ImageBuffer> corpus = {synthetic_image(13, 96, 96, 3),
                                       synthetic_image(14, 96, 96, 3)};
    CodecInstance inst = CodecInstance::fit_images(corpus, training_configs());
    inst.add_derived_config(make_config(5, 35, 32, 23, 4));
    inst.add_derived_config(make_config(6, 34, 30, 22, 2));

    ImageBuffer img = synthetic_image(15, 96, 96, 3);
    std::vector<size_t> sizes;
    for (const RateConfig& c : evaluation_configs())
        sizes.push_back(compress(inst, img, c.id).size());
    for (size_t i = 1; i < sizes.size(); ++i) CHECK(sizes[i] <= sizes[i - 1]);
}

TEST_CASE("zero tensors survive the whole pipeline") {
    std::vector<ImageBuffer> corpus = {synthetic_image(16, 48, 48, 1)};
    CodecInstance inst = CodecInstance::fit_images(corpus, {make_config(1, 20, 20, 6, 2)});
    ImageBuffer black = constant_image(48, 48, 1, 0);
    ImageBuffer back = decompress(inst, compress(inst, black, 1));
    for (uint8_t s : back.samples) CHECK(s == 0);
}

TEST_CASE("decoding against the wrong instance is an explicit error") {
    std::vector<ImageBuffer> corpus_a = {synthetic_image(17, 48, 48, 1)};
    std::vector<ImageBuffer> corpus_b = {synthetic_image(18, 48, 48, 1)};
    std::vector<RateConfig> configs = {make_config(1, 20, 20, 6, 3)};
    CodecInstance a = CodecInstance::fit_images(corpus_a, configs);
    CodecInstance b = CodecInstance::fit_images(corpus_b, configs);

    std::vector<uint8_t> payload = compress(a, corpus_a[0], 1);
    CHECK_THROWS_WITH_AS(decompress(b, payload), doctest::Contains("model"), std::runtime_error);

    CodecInstance empty_like = CodecInstance::fit_images(corpus_b, {make_config(9, 20, 20, 6, 3)});
    CHECK_THROWS_WITH_AS(decompress(empty_like, payload), doctest::Contains("config id"),
                         std::runtime_error);
    CHECK_THROWS_AS(compress(a, corpus_a[0], 42), MissingModelError);
}

TEST_CASE("embedded models decode with no instance lookup") {
    std::vector<ImageBuffer> corpus = {synthetic_image(19, 48, 48, 1)};
    CodecInstance inst = CodecInstance::fit_images(corpus, {make_config(1, 20, 20, 6, 3)});
    CompressOptions opts;
    opts.embed_model = true;
    std::vector<uint8_t> payload = compress(inst, corpus[0], 1, opts);

    // A fresh instance that has never seen this config can still decode it.
    CodecInstance other = CodecInstance::fit_images(corpus, {make_config(2, 10, 10, 3, 2)});
    ImageBuffer back = decompress(other, payload);
    CHECK(back.width == 48);
}

TEST_CASE("latent tensors use nominal ranks and spec-listed shapes") {
    Rng rng(20);
    // A 40x40x32 latent-like tensor with smooth structure.
    Tensor3 latent({40, 40, 32});
    for (uint32_t i = 0; i < 40; ++i)
        for (uint32_t j = 0; j < 40; ++j)
            for (uint32_t k = 0; k < 32; ++k)
                latent(i, j, k) = 0.5 + 0.4 * std::sin(0.2 * i + 0.08 * double(k)) *
                                            std::cos(0.15 * j + 0.3 * double(k)) +
                                  0.01 * rng.normal();
    for (double& v : latent.data()) v = std::clamp(v, 0.0, 1.0);

    std::vector<RateConfig> configs = {make_config(1, 38, 37, 28, 5)};
    CodecInstance inst = CodecInstance::fit({latent}, configs, Tensorization::kLatent);
    std::vector<uint8_t> payload = compress_tensor(inst, latent, 1);

    CompressedPayload parsed = deserialize(payload);
    CHECK(parsed.ranks == Ranks3{38, 37, 28});
    CHECK(parsed.tensorization.strategy == Tensorization::kLatent);

    TensorizationInfo info;
    Tensor3 back = decompress_tensor(inst, payload, &info);
    CHECK(back.dims() == latent.dims());
    CHECK(relative_error(latent, back) < 0.05);

    // Image decode must refuse a latent payload.
    CHECK_THROWS_AS(decompress(inst, payload), std::runtime_error);

    // Real payload bits stay within the analytic counting bound.
    CHECK(uint64_t(payload.size()) * 8 <= counting_bound_bits(parsed));
}

TEST_CASE("derived configs reuse or shrink fitted models deterministically") {
    std::vector<ImageBuffer> corpus = {synthetic_image(21, 64, 64, 3)};
    CodecInstance inst = CodecInstance::fit_images(corpus, training_configs());

    // Same interval count: the nearest fitted model is reused outright.
    inst.add_derived_config(make_config(5, 35, 32, 23, 4));
    CHECK(model_hash(inst.entry(5).model) == model_hash(inst.entry(2).model));

    // No fitted interval count matches: shrink the nearest larger model.
    inst.add_derived_config(make_config(6, 34, 30, 22, 2));
    const QuantizerModel& derived = inst.entry(6).model;
    CHECK(derived.intervals == 2);
    derived.validate();

    // Requesting more intervals than any fitted model is an error.
    CHECK_THROWS_AS(inst.add_derived_config(make_config(7, 34, 30, 22, 8)), std::invalid_argument);
    // Duplicate ids are rejected.
    CHECK_THROWS_AS(inst.add_derived_config(make_config(5, 1, 1, 1, 4)), std::invalid_argument);
}

TEST_CASE("rate control picks the largest config under the target") {
    std::vector<ImageBuffer> corpus = {synthetic_image(22, 64, 64, 3)};
    CodecInstance inst = CodecInstance::fit_images(corpus, training_configs());

    std::vector<double> bounds;
    for (const auto& e : inst.entries()) {
        Dims3 dims{16, 16, ((64 + 15) / 16) * ((64 + 15) / 16) * 3};
        Ranks3 eff = effective_ranks(e.config, dims, Tensorization::kPatchStack);
        bounds.push_back(double(worst_case_bits(dims, eff, e.config.intervals,
                                                e.config.factor_bits, false)) /
                         (64.0 * 64.0));
    }
    double biggest = *std::max_element(bounds.begin(), bounds.end());
    double smallest = *std::min_element(bounds.begin(), bounds.end());

    RateChoice top = rate_control(inst, biggest + 1.0, 64, 64, 3);
    CHECK(top.bound_bpp == doctest::Approx(biggest));
    CHECK_FALSE(top.overshoot);

    RateChoice bottom = rate_control(inst, smallest * 0.5, 64, 64, 3);
    CHECK(bottom.bound_bpp == doctest::Approx(smallest));
    CHECK(bottom.overshoot);

    // Monotone: a higher target never selects a smaller bound.
    double prev_bound = 0.0;
    for (double target = smallest * 0.8; target < biggest * 1.2; target += (biggest - smallest) / 23.0) {
        RateChoice c = rate_control(inst, target, 64, 64, 3);
        CHECK(c.bound_bpp >= prev_bound - 1e-12);
        prev_bound = c.bound_bpp;
    }
}

TEST_CASE("tensorize rejects unsupported descriptors and channel counts") {
    TensorizationDescriptor bad;
    bad.patch = 1;
    CHECK_THROWS_AS(tensorize(constant_image(8, 8, 1, 0), bad), std::invalid_argument);
    bad.patch = 16;
    bad.strategy = Tensorization::kLatent;
    CHECK_THROWS_AS(tensorize(constant_image(8, 8, 1, 0), bad), std::invalid_argument);
}
