#include "tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace tdnc {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

void check_mode(int mode) {
    require(mode >= 1 && mode <= 3, "mode index must be 1, 2 or 3");
}

// The two modes other than `mode`, in ascending order.
std::pair<int, int> other_modes(int mode) {
    switch (mode) {
        case 1: return {2, 3};
        case 2: return {1, 3};
        default: return {1, 2};
    }
}

}  // namespace

uint32_t Dims3::operator[](int mode) const {
    switch (mode) {
        case 1: return d1;
        case 2: return d2;
        case 3: return d3;
        default: throw std::invalid_argument("mode index must be 1, 2 or 3");
    }
}

Tensor3::Tensor3(Dims3 dims) : dims_(dims), data_(dims.count(), 0.0) {
    require(dims.d1 > 0 && dims.d2 > 0 && dims.d3 > 0, "tensor dims must be positive");
}

Tensor3::Tensor3(Dims3 dims, std::vector<double> data) : dims_(dims), data_(std::move(data)) {
    require(dims.d1 > 0 && dims.d2 > 0 && dims.d3 > 0, "tensor dims must be positive");
    require(data_.size() == dims.count(), "tensor data length does not match dims");
    for (double v : data_)
        require(std::isfinite(v), "tensor entries must be finite");
}

Matrix unfold(const Tensor3& t, int mode) {
    check_mode(mode);
    const Dims3& d = t.dims();
    auto [lo, hi] = other_modes(mode);
    const uint32_t rows = d[mode], nlo = d[lo], nhi = d[hi];

    Matrix m(rows, size_t(nlo) * nhi);
    uint32_t idx[4] = {0, 0, 0, 0};  // 1-based mode indices
    for (uint32_t r = 0; r < rows; ++r) {
        idx[mode] = r;
        for (uint32_t j = 0; j < nhi; ++j) {
            idx[hi] = j;
            for (uint32_t i = 0; i < nlo; ++i) {
                idx[lo] = i;
                m(r, size_t(j) * nlo + i) = t(idx[1], idx[2], idx[3]);
            }
        }
    }
    return m;
}

Tensor3 fold(const Matrix& m, int mode, Dims3 dims) {
    check_mode(mode);
    auto [lo, hi] = other_modes(mode);
    const uint32_t rows = dims[mode], nlo = dims[lo], nhi = dims[hi];
    require(m.rows() == rows && size_t(m.cols()) == size_t(nlo) * nhi,
            "matrix shape inconsistent with dims and mode");

    Tensor3 t(dims);
    uint32_t idx[4] = {0, 0, 0, 0};
    for (uint32_t r = 0; r < rows; ++r) {
        idx[mode] = r;
        for (uint32_t j = 0; j < nhi; ++j) {
            idx[hi] = j;
            for (uint32_t i = 0; i < nlo; ++i) {
                idx[lo] = i;
                t(idx[1], idx[2], idx[3]) = m(r, size_t(j) * nlo + i);
            }
        }
    }
    return t;
}

Tensor3 mode_n_product(const Tensor3& t, const Matrix& b, int mode) {
    check_mode(mode);
    require(b.cols() == t.dims()[mode], "matrix columns must match tensor mode dimension");

    Matrix product = b * unfold(t, mode);
    Dims3 out = t.dims();
    switch (mode) {
        case 1: out.d1 = uint32_t(b.rows()); break;
        case 2: out.d2 = uint32_t(b.rows()); break;
        default: out.d3 = uint32_t(b.rows()); break;
    }
    return fold(product, mode, out);
}

Tensor3 multi_mode_product_except(const Tensor3& t, const std::array<Matrix, 3>& factors,
                                  int skip_mode, bool transpose) {
    require(skip_mode >= 0 && skip_mode <= 3, "skip mode must be 0 (none), 1, 2 or 3");
    Tensor3 result = t;
    for (int n = 1; n <= 3; ++n) {
        if (n == skip_mode) continue;
        const Matrix& f = factors[n - 1];
        result = transpose ? mode_n_product(result, f.transpose(), n)
                           : mode_n_product(result, f, n);
    }
    return result;
}

namespace {

Matrix gram_singular_basis(const Matrix& m, int rank);

}  // namespace

Matrix leading_left_singular_vectors(const Matrix& m, int rank) {
    require(m.rows() > 0 && m.cols() > 0, "matrix must be non-empty");
    require(rank >= 1 && rank <= std::min(m.rows(), m.cols()),
            "rank out of range for matrix shape");
    return gram_singular_basis(m, rank);
}

Matrix leading_left_singular_subspace(const Matrix& m, int rank) {
    require(m.rows() > 0 && m.cols() > 0, "matrix must be non-empty");
    require(rank >= 1 && rank <= m.rows(), "rank exceeds row count");
    return gram_singular_basis(m, rank);
}

namespace {

Matrix gram_singular_basis(const Matrix& m, int rank) {
    require(m.allFinite(), "matrix entries must be finite");

    Matrix gram = Matrix::Zero(m.rows(), m.rows());
    gram.selfadjointView<Eigen::Lower>().rankUpdate(m);

    Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("eigendecomposition failed");

    // Eigenvalues come out ascending; take the top `rank` in descending order.
    const Matrix& vecs = es.eigenvectors();
    Matrix u(m.rows(), rank);
    for (int k = 0; k < rank; ++k)
        u.col(k) = vecs.col(m.rows() - 1 - k);

    // Sign convention: largest-magnitude entry of each column positive
    // (first such entry wins on ties).
    for (int k = 0; k < rank; ++k) {
        Eigen::Index at = 0;
        u.col(k).cwiseAbs().maxCoeff(&at);
        if (u(at, k) < 0.0) u.col(k) = -u.col(k);
    }
    return u;
}

}  // namespace

double frobenius_norm(const Tensor3& t) {
    double acc = 0.0;
    for (double v : t.data()) acc += v * v;
    return std::sqrt(acc);
}

namespace {

constexpr char kTensorMagic[4] = {'T', 'D', 'T', '3'};
constexpr uint8_t kTensorVersion = 1;

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(uint8_t(v));
    out.push_back(uint8_t(v >> 8));
    out.push_back(uint8_t(v >> 16));
    out.push_back(uint8_t(v >> 24));
}

uint32_t get_u32(const uint8_t* p) {
    return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 | uint32_t(p[3]) << 24;
}

}  // namespace

std::vector<uint8_t> tensor_to_bytes(const Tensor3& t) {
    std::vector<uint8_t> out;
    out.reserve(17 + 4 * t.size());
    out.insert(out.end(), kTensorMagic, kTensorMagic + 4);
    out.push_back(kTensorVersion);
    put_u32(out, t.dims().d1);
    put_u32(out, t.dims().d2);
    put_u32(out, t.dims().d3);
    for (double v : t.data()) {
        float f = float(v);
        uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32(out, bits);
    }
    return out;
}

Tensor3 tensor_from_bytes(const uint8_t* data, size_t size) {
    if (size < 17) throw std::runtime_error("TDT3: file truncated in header");
    if (std::memcmp(data, kTensorMagic, 4) != 0) throw std::runtime_error("TDT3: bad magic");
    if (data[4] != kTensorVersion) throw std::runtime_error("TDT3: unsupported version");

    Dims3 dims{get_u32(data + 5), get_u32(data + 9), get_u32(data + 13)};
    if (dims.d1 == 0 || dims.d2 == 0 || dims.d3 == 0)
        throw std::runtime_error("TDT3: zero dimension");
    size_t n = dims.count();
    if (size != 17 + 4 * n) throw std::runtime_error("TDT3: payload length mismatch");

    std::vector<double> values(n);
    for (size_t i = 0; i < n; ++i) {
        uint32_t bits = get_u32(data + 17 + 4 * i);
        float f;
        std::memcpy(&f, &bits, 4);
        values[i] = double(f);
    }
    return Tensor3(dims, std::move(values));
}

void save_tensor(const Tensor3& t, const std::string& path) {
    std::vector<uint8_t> bytes = tensor_to_bytes(t);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
}

Tensor3 load_tensor(const std::string& path) {
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f) throw std::runtime_error("cannot open: " + path);
    auto size = size_t(f.tellg());
    f.seekg(0);
    std::vector<uint8_t> bytes(size);
    f.read(reinterpret_cast<char*>(bytes.data()), std::streamsize(size));
    if (!f) throw std::runtime_error("read failed: " + path);
    return tensor_from_bytes(bytes.data(), bytes.size());
}

}  // namespace tdnc
