// Command-line front end for the tdnc codec. Everything goes through the
// public C API in tdnc/tdnc.h; this file only adds argument handling, file
// discovery, CSV/SVG reporting and a small thread pool for sweeps.

#include "tdnc/tdnc.h"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

namespace fs = std::filesystem;

namespace {

[[noreturn]] void die(const std::string& message) {
    std::cerr << "tdnc: " << message << "\n";
    std::exit(1);
}

void check(tdnc_status status, const std::string& what) {
    if (status != TDNC_OK)
        die(what + ": " + tdnc_status_name(status) + " (" + tdnc_last_error() + ")");
}

bool has_suffix(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool looks_like_input(const std::string& name) {
    return has_suffix(name, ".png") || has_suffix(name, ".ppm") || has_suffix(name, ".pgm") ||
           has_suffix(name, ".tdt3");
}

std::vector<std::string> list_corpus(const std::string& dir) {
    if (!fs::is_directory(dir)) die("not a directory: " + dir);
    std::vector<std::string> paths;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && looks_like_input(e.path().filename().string()))
            paths.push_back(e.path().string());
    std::sort(paths.begin(), paths.end());  // deterministic corpus order
    return paths;
}

// Config file: one config per line, "R1 R2 R3 M [b_u]", '#' starts a comment.
std::vector<tdnc_rate_config> parse_configs(const std::string& path) {
    std::ifstream f(path);
    if (!f) die("cannot open config file: " + path);
    std::vector<tdnc_rate_config> configs;
    std::string line;
    uint32_t id = 1;
    size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ss(line);
        tdnc_rate_config c{};
        if (!(ss >> c.r1)) continue;  // blank line
        c.factor_bits = 16;
        if (!(ss >> c.r2 >> c.r3 >> c.intervals))
            die("config file line " + std::to_string(line_no) + ": expected R1 R2 R3 M [b_u]");
        ss >> c.factor_bits;
        c.id = id++;
        configs.push_back(c);
    }
    if (configs.empty()) die("config file has no configs: " + path);
    return configs;
}

struct OwnedInstance {
    tdnc_instance* ptr = nullptr;
    ~OwnedInstance() { tdnc_instance_free(ptr); }
};

struct OwnedImage {
    tdnc_image* ptr = nullptr;
    ~OwnedImage() { tdnc_image_free(ptr); }
};

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

size_t worker_count(size_t jobs) {
    size_t n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("TDNC_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1) n = size_t(v);
    }
    return std::min(n, jobs == 0 ? size_t(1) : jobs);
}

int cmd_fit(const std::string& corpus_dir, const std::string& config_path,
            const std::string& out_path) {
    std::vector<std::string> paths = list_corpus(corpus_dir);
    if (paths.empty()) die("no images or tensors found in " + corpus_dir);
    std::vector<tdnc_rate_config> configs = parse_configs(config_path);

    std::vector<const char*> cpaths;
    for (const auto& p : paths) cpaths.push_back(p.c_str());

    OwnedInstance inst;
    check(tdnc_fit(cpaths.data(), cpaths.size(), configs.data(), configs.size(), &inst.ptr),
          "fit failed");
    check(tdnc_instance_save(inst.ptr, out_path.c_str()), "cannot write instance");

    for (size_t i = 0; i < tdnc_instance_config_count(inst.ptr); ++i) {
        tdnc_rate_config c;
        check(tdnc_instance_config_at(inst.ptr, i, &c), "config readback");
        uint64_t samples = tdnc_instance_sample_count(inst.ptr, i);
        std::cout << "config " << c.id << ": ranks (" << c.r1 << ", " << c.r2 << ", " << c.r3
                  << "), M = " << c.intervals << ", b_u = " << c.factor_bits << ", fitted on "
                  << samples << " samples\n";
        if (samples < 1000ull * c.intervals)
            std::cerr << "warning: small sample pool (" << samples << ") for config " << c.id
                      << "; boundaries may be noisy\n";
    }
    std::cout << "wrote " << out_path << " (" << paths.size() << " corpus files)\n";
    return 0;
}

int cmd_compress(const std::string& in_path, const std::string& instance_path,
                 int64_t config_id, double target_bpp, const std::string& out_path) {
    OwnedInstance inst;
    check(tdnc_instance_load(instance_path.c_str(), &inst.ptr), "cannot load instance");

    uint8_t* payload = nullptr;
    size_t payload_size = 0;
    uint64_t pixels = 0;
    bool latent = has_suffix(in_path, ".tdt3");

    if (latent) {
        if (config_id < 0) die("latent inputs need an explicit --config");
        tdnc_tensor* tensor = nullptr;
        check(tdnc_tensor_load(in_path.c_str(), &tensor), "cannot load tensor");
        uint32_t d1, d2, d3;
        tdnc_tensor_dims(tensor, &d1, &d2, &d3);
        pixels = uint64_t(d1) * d2 * d3;  // reported per element in latent mode
        tdnc_status s = tdnc_compress_tensor(inst.ptr, tensor, uint32_t(config_id), &payload,
                                             &payload_size);
        tdnc_tensor_free(tensor);
        check(s, "compress failed");
    } else {
        OwnedImage img;
        check(tdnc_image_load(in_path.c_str(), &img.ptr), "cannot load image");
        pixels = uint64_t(tdnc_image_width(img.ptr)) * tdnc_image_height(img.ptr);
        if (config_id < 0) {
            uint32_t chosen;
            int overshoot = 0;
            check(tdnc_select_config(inst.ptr, target_bpp, tdnc_image_width(img.ptr),
                                     tdnc_image_height(img.ptr), tdnc_image_channels(img.ptr),
                                     &chosen, &overshoot),
                  "rate control failed");
            if (overshoot)
                std::cerr << "warning: target " << target_bpp
                          << " bpp is below the smallest config's bound; expect overshoot\n";
            config_id = chosen;
        }
        check(tdnc_compress_image(inst.ptr, img.ptr, uint32_t(config_id), &payload, &payload_size),
              "compress failed");
    }

    std::ofstream f(out_path, std::ios::binary);
    if (!f) die("cannot open for writing: " + out_path);
    f.write(reinterpret_cast<const char*>(payload), std::streamsize(payload_size));
    tdnc_buffer_free(payload);
    if (!f) die("write failed: " + out_path);

    double bpp = double(payload_size) * 8.0 / double(pixels);
    std::cout << "config " << config_id << ", " << payload_size << " bytes, " << bpp
              << (latent ? " bits/element\n" : " bpp\n");
    return 0;
}

std::vector<uint8_t> read_payload(const std::string& path) {
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f) die("cannot open: " + path);
    std::vector<uint8_t> data(size_t(f.tellg()));
    f.seekg(0);
    f.read(reinterpret_cast<char*>(data.data()), std::streamsize(data.size()));
    if (!f) die("read failed: " + path);
    return data;
}

int cmd_decompress(const std::string& in_path, const std::string& instance_path,
                   const std::string& out_path) {
    OwnedInstance inst;
    check(tdnc_instance_load(instance_path.c_str(), &inst.ptr), "cannot load instance");
    std::vector<uint8_t> payload = read_payload(in_path);

    tdnc_payload_info info;
    check(tdnc_payload_inspect(payload.data(), payload.size(), &info), "bad payload");

    if (info.latent) {
        tdnc_tensor* tensor = nullptr;
        check(tdnc_decompress_tensor(inst.ptr, payload.data(), payload.size(), &tensor),
              "decompress failed");
        tdnc_status s = tdnc_tensor_save(tensor, out_path.c_str());
        tdnc_tensor_free(tensor);
        check(s, "cannot write tensor");
    } else {
        OwnedImage img;
        check(tdnc_decompress_image(inst.ptr, payload.data(), payload.size(), &img.ptr),
              "decompress failed");
        check(tdnc_image_save(img.ptr, out_path.c_str()), "cannot write image");
    }
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int cmd_metrics(const std::string& ref_path, const std::string& test_path) {
    OwnedImage ref, test;
    check(tdnc_image_load(ref_path.c_str(), &ref.ptr), "cannot load reference");
    check(tdnc_image_load(test_path.c_str(), &test.ptr), "cannot load test image");

    double psnr_db = 0.0, ms = 0.0;
    check(tdnc_psnr(ref.ptr, test.ptr, &psnr_db), "psnr failed");
    check(tdnc_ms_ssim(ref.ptr, test.ptr, &ms), "ms-ssim failed");

    if (std::isinf(psnr_db)) std::cout << "psnr: lossless\n";
    else std::cout << "psnr: " << psnr_db << " dB\n";
    std::cout << "ms-ssim: " << ms << "\n";
    return 0;
}

struct SweepRow {
    std::string image;
    tdnc_rate_config config{};
    double bpp = 0.0, psnr_db = 0.0, ms_ssim = 0.0;
    double encode_ms = 0.0, decode_ms = 0.0;
    std::string log = "ok";
    bool valid = false;
};

std::string format_row(const SweepRow& r) {
    std::ostringstream ss;
    ss << r.image << "," << r.config.id << "," << r.config.r1 << "," << r.config.r2 << ","
       << r.config.r3 << "," << r.config.intervals << ",";
    auto num = [&ss](double v, int precision) {
        if (std::isinf(v)) { ss << "inf"; return; }
        ss.setf(std::ios::fixed);
        ss.precision(precision);
        ss << v;
        ss.unsetf(std::ios::fixed);
    };
    num(r.bpp, 6); ss << ",";
    num(r.psnr_db, 4); ss << ",";
    num(r.ms_ssim, 6); ss << ",";
    num(r.encode_ms, 3); ss << ",";
    num(r.decode_ms, 3); ss << ",";
    ss << r.log;
    return ss.str();
}

int cmd_sweep(const std::string& dir, const std::string& instance_path,
              const std::string& csv_path, const std::string& svg_path);

void write_svg(const std::string& path, const std::vector<SweepRow>& rows,
               const std::vector<SweepRow>& means);

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tdnc — multi-rate Tucker transform image codec"};
    app.require_subcommand(1);

    std::string corpus_dir, config_path, out_path, in_path, instance_path, ref_path, test_path;
    std::string csv_path, svg_path;
    int64_t config_id = -1;
    double target_bpp = -1.0;

    CLI::App* fit = app.add_subcommand("fit", "fit quantizer models over a corpus");
    fit->add_option("--corpus", corpus_dir, "directory of images or .tdt3 tensors")->required();
    fit->add_option("--configs", config_path, "config file: one 'R1 R2 R3 M [b_u]' per line")
        ->required();
    fit->add_option("--out", out_path, "output instance file")->required();

    CLI::App* compress = app.add_subcommand("compress", "compress an image or .tdt3 tensor");
    compress->add_option("--in", in_path, "input image (.png/.ppm/.pgm) or tensor (.tdt3)")
        ->required();
    compress->add_option("--instance", instance_path, "codec instance file")->required();
    CLI::Option* cfg_opt = compress->add_option("--config", config_id, "rate config id");
    CLI::Option* bpp_opt =
        compress->add_option("--target-bpp", target_bpp, "pick config by target bpp");
    cfg_opt->excludes(bpp_opt);
    compress->add_option("--out", out_path, "output .tdnc file")->required();

    CLI::App* decompress = app.add_subcommand("decompress", "decompress a .tdnc file");
    decompress->add_option("--in", in_path, "input .tdnc file")->required();
    decompress->add_option("--instance", instance_path, "codec instance file")->required();
    decompress->add_option("--out", out_path, "output image or .tdt3 tensor")->required();

    CLI::App* metrics = app.add_subcommand("metrics", "PSNR and MS-SSIM between two images");
    metrics->add_option("--ref", ref_path, "reference image")->required();
    metrics->add_option("--test", test_path, "test image")->required();

    CLI::App* sweep = app.add_subcommand("sweep", "rate-distortion sweep over a directory");
    sweep->add_option("--dir", corpus_dir, "directory of images")->required();
    sweep->add_option("--instance", instance_path, "codec instance file")->required();
    sweep->add_option("--out-csv", csv_path, "output CSV file")->required();
    sweep->add_option("--svg", svg_path, "optional SVG scatter plot");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*fit) return cmd_fit(corpus_dir, config_path, out_path);
        if (*compress) {
            if (config_id < 0 && target_bpp < 0) die("need --config or --target-bpp");
            return cmd_compress(in_path, instance_path, config_id, target_bpp, out_path);
        }
        if (*decompress) return cmd_decompress(in_path, instance_path, out_path);
        if (*metrics) return cmd_metrics(ref_path, test_path);
        if (*sweep) return cmd_sweep(corpus_dir, instance_path, csv_path, svg_path);
    } catch (const std::exception& e) {
        die(e.what());
    }
    return 1;
}

namespace {

int cmd_sweep(const std::string& dir, const std::string& instance_path,
              const std::string& csv_path, const std::string& svg_path) {
    OwnedInstance inst;
    check(tdnc_instance_load(instance_path.c_str(), &inst.ptr), "cannot load instance");

    std::vector<std::string> paths = list_corpus(dir);
    paths.erase(std::remove_if(paths.begin(), paths.end(),
                               [](const std::string& p) { return has_suffix(p, ".tdt3"); }),
                paths.end());
    if (paths.empty()) die("no images found in " + dir);

    size_t config_count = tdnc_instance_config_count(inst.ptr);
    std::vector<tdnc_rate_config> configs(config_count);
    for (size_t i = 0; i < config_count; ++i)
        check(tdnc_instance_config_at(inst.ptr, i, &configs[i]), "config readback");

    struct Job {
        size_t image_index, config_index;
    };
    std::vector<Job> jobs;
    for (size_t i = 0; i < paths.size(); ++i)
        for (size_t c = 0; c < config_count; ++c) jobs.push_back({i, c});

    std::vector<SweepRow> rows(jobs.size());
    std::atomic<size_t> next{0};
    std::mutex log_mutex;

    auto run_job = [&](const Job& job, SweepRow& row) {
        const std::string& path = paths[job.image_index];
        row.image = fs::path(path).filename().string();
        row.config = configs[job.config_index];

        OwnedImage img;
        if (tdnc_image_load(path.c_str(), &img.ptr) != TDNC_OK) {
            row.log = std::string("skipped: ") + tdnc_last_error();
            std::lock_guard<std::mutex> lock(log_mutex);
            std::cerr << "warning: skipping " << path << ": " << tdnc_last_error() << "\n";
            return;
        }

        uint8_t* payload = nullptr;
        size_t payload_size = 0;
        double t0 = now_ms();
        if (tdnc_compress_image(inst.ptr, img.ptr, row.config.id, &payload, &payload_size) !=
            TDNC_OK) {
            row.log = std::string("encode failed: ") + tdnc_last_error();
            return;
        }
        row.encode_ms = now_ms() - t0;

        OwnedImage decoded;
        t0 = now_ms();
        tdnc_status s = tdnc_decompress_image(inst.ptr, payload, payload_size, &decoded.ptr);
        row.decode_ms = now_ms() - t0;
        tdnc_buffer_free(payload);
        if (s != TDNC_OK) {
            row.log = std::string("decode failed: ") + tdnc_last_error();
            return;
        }

        uint64_t pixels = uint64_t(tdnc_image_width(img.ptr)) * tdnc_image_height(img.ptr);
        row.bpp = double(payload_size) * 8.0 / double(pixels);
        if (tdnc_psnr(img.ptr, decoded.ptr, &row.psnr_db) != TDNC_OK ||
            tdnc_ms_ssim(img.ptr, decoded.ptr, &row.ms_ssim) != TDNC_OK) {
            row.log = std::string("metrics failed: ") + tdnc_last_error();
            return;
        }
        row.valid = true;
    };

    size_t workers = worker_count(jobs.size());
    std::vector<std::thread> threads;
    for (size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&] {
            for (size_t j = next.fetch_add(1); j < jobs.size(); j = next.fetch_add(1))
                run_job(jobs[j], rows[j]);
        });
    }
    for (auto& t : threads) t.join();

    // Deterministic output order regardless of completion order.
    std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
        return std::tie(a.image, a.config.id) < std::tie(b.image, b.config.id);
    });

    std::vector<SweepRow> means;
    for (const tdnc_rate_config& c : configs) {
        SweepRow mean;
        mean.image = "(mean)";
        mean.config = c;
        size_t n = 0;
        for (const SweepRow& r : rows) {
            if (!r.valid || r.config.id != c.id) continue;
            mean.bpp += r.bpp;
            mean.psnr_db += r.psnr_db;
            mean.ms_ssim += r.ms_ssim;
            mean.encode_ms += r.encode_ms;
            mean.decode_ms += r.decode_ms;
            ++n;
        }
        if (n == 0) continue;
        mean.bpp /= double(n);
        mean.psnr_db /= double(n);
        mean.ms_ssim /= double(n);
        mean.encode_ms /= double(n);
        mean.decode_ms /= double(n);
        mean.valid = true;
        means.push_back(mean);
    }

    std::ofstream csv(csv_path);
    if (!csv) die("cannot open for writing: " + csv_path);
    csv << "# tdnc-sweep-csv-v1\n";
    csv << "image,config_id,r1,r2,r3,m,bpp,psnr_db,ms_ssim,encode_ms,decode_ms,log\n";
    for (const SweepRow& r : rows) csv << format_row(r) << "\n";
    for (const SweepRow& r : means) csv << format_row(r) << "\n";
    if (!csv) die("write failed: " + csv_path);

    if (!svg_path.empty()) write_svg(svg_path, rows, means);
    std::cout << "wrote " << csv_path << " (" << rows.size() << " rows, " << means.size()
              << " mean rows)\n";
    return 0;
}

void write_svg(const std::string& path, const std::vector<SweepRow>& rows,
               const std::vector<SweepRow>& means) {
    struct Panel {
        const char* title;
        double (*value)(const SweepRow&);
    };
    const Panel panels[2] = {
        {"PSNR (dB) vs bpp", [](const SweepRow& r) { return r.psnr_db; }},
        {"MS-SSIM vs bpp", [](const SweepRow& r) { return r.ms_ssim; }},
    };

    const double w = 440, h = 360, margin = 48;
    std::ostringstream svg;
    svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << 2 * w << "' height='" << h
        << "' font-family='sans-serif' font-size='11'>\n";

    for (int p = 0; p < 2; ++p) {
        double x0 = p * w + margin, y0 = h - margin;
        double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
        for (const SweepRow& r : rows) {
            if (!r.valid || std::isinf(panels[p].value(r))) continue;
            xmin = std::min(xmin, r.bpp); xmax = std::max(xmax, r.bpp);
            ymin = std::min(ymin, panels[p].value(r)); ymax = std::max(ymax, panels[p].value(r));
        }
        if (xmin > xmax) continue;
        if (xmax == xmin) xmax = xmin + 1;
        if (ymax == ymin) ymax = ymin + 1;
        double sx = (w - 2 * margin) / (xmax - xmin);
        double sy = (h - 2 * margin) / (ymax - ymin);
        auto px = [&](double bpp) { return x0 + (bpp - xmin) * sx; };
        auto py = [&](double v) { return y0 - (v - ymin) * sy; };

        svg << "<rect x='" << p * w + 1 << "' y='1' width='" << w - 2 << "' height='" << h - 2
            << "' fill='none' stroke='#ccc'/>\n";
        svg << "<text x='" << p * w + w / 2 << "' y='18' text-anchor='middle'>" << panels[p].title
            << "</text>\n";
        svg << "<line x1='" << x0 << "' y1='" << y0 << "' x2='" << x0 + (w - 2 * margin)
            << "' y2='" << y0 << "' stroke='#333'/>\n";
        svg << "<line x1='" << x0 << "' y1='" << y0 << "' x2='" << x0 << "' y2='" << margin
            << "' stroke='#333'/>\n";
        svg << "<text x='" << x0 << "' y='" << h - margin + 16 << "'>" << xmin << "</text>\n";
        svg << "<text x='" << x0 + (w - 2 * margin) << "' y='" << h - margin + 16
            << "' text-anchor='end'>" << xmax << "</text>\n";
        svg << "<text x='" << x0 - 4 << "' y='" << y0 << "' text-anchor='end'>" << ymin
            << "</text>\n";
        svg << "<text x='" << x0 - 4 << "' y='" << margin << "' text-anchor='end'>" << ymax
            << "</text>\n";

        for (const SweepRow& r : rows) {
            if (!r.valid || std::isinf(panels[p].value(r))) continue;
            svg << "<circle cx='" << px(r.bpp) << "' cy='" << py(panels[p].value(r))
                << "' r='2.5' fill='#4a82c4' fill-opacity='0.55'/>\n";
        }
        std::vector<const SweepRow*> line;
        for (const SweepRow& r : means)
            if (r.valid && !std::isinf(panels[p].value(r))) line.push_back(&r);
        std::sort(line.begin(), line.end(),
                  [](const SweepRow* a, const SweepRow* b) { return a->bpp < b->bpp; });
        svg << "<polyline fill='none' stroke='#c44' stroke-width='1.5' points='";
        for (const SweepRow* r : line) svg << px(r->bpp) << "," << py(panels[p].value(*r)) << " ";
        svg << "'/>\n";
    }
    svg << "</svg>\n";

    std::ofstream f(path);
    if (!f) die("cannot open for writing: " + path);
    f << svg.str();
    if (!f) die("write failed: " + path);
}

}  // namespace
