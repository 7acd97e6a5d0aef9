#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace tdnc {

using Matrix = Eigen::MatrixXd;

struct Dims3 {
    uint32_t d1 = 0, d2 = 0, d3 = 0;

    size_t count() const { return size_t(d1) * d2 * d3; }
    uint32_t operator[](int mode) const;  // mode in {1,2,3}
    bool operator==(const Dims3&) const = default;
};

/// Dense 3-order tensor, row-major over (i1, i2, i3):
/// flat index = (i1 * d2 + i2) * d3 + i3.
class Tensor3 {
  public:
    Tensor3() = default;
    explicit Tensor3(Dims3 dims);                            // zero-filled
    Tensor3(Dims3 dims, std::vector<double> data);           // validates size and finiteness

    const Dims3& dims() const { return dims_; }
    size_t size() const { return data_.size(); }

    double operator()(uint32_t i1, uint32_t i2, uint32_t i3) const {
        return data_[(size_t(i1) * dims_.d2 + i2) * dims_.d3 + i3];
    }
    double& operator()(uint32_t i1, uint32_t i2, uint32_t i3) {
        return data_[(size_t(i1) * dims_.d2 + i2) * dims_.d3 + i3];
    }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool operator==(const Tensor3&) const = default;

  private:
    Dims3 dims_;
    std::vector<double> data_;
};

// Mode-n unfolding. Rows index mode n; among the remaining two modes the
// lower-numbered one varies fastest along columns, i.e. for n = 2 the column
// of element (i1, i2, i3) is i1 + d1 * i3. This convention is fixed so that
// bitstreams are stable across runs.
Matrix unfold(const Tensor3& t, int mode);

// Inverse of unfold for the same convention; bit-exact round trip.
Tensor3 fold(const Matrix& m, int mode, Dims3 dims);

// Tensor-times-matrix along one mode: result replaces dim n with b.rows().
Tensor3 mode_n_product(const Tensor3& t, const Matrix& b, int mode);

// Applies the given factor per mode in ascending mode order, skipping
// `skip_mode` (0 = apply all three). With `transpose`, each factor is applied
// transposed. Never materializes a Kronecker product.
Tensor3 multi_mode_product_except(const Tensor3& t, const std::array<Matrix, 3>& factors,
                                  int skip_mode, bool transpose);

// Leading `rank` left singular vectors via eigendecomposition of the
// rows-by-rows Gram matrix M*M^T. Columns are orthonormal, ordered by
// non-increasing singular value, and sign-fixed so the largest-magnitude
// entry of each column is positive. Requires rank <= min(rows, cols).
Matrix leading_left_singular_vectors(const Matrix& m, int rank);

// Same computation but allows rank up to rows: columns beyond the matrix
// rank come from the Gram eigenbasis, a deterministic orthonormal completion.
Matrix leading_left_singular_subspace(const Matrix& m, int rank);

double frobenius_norm(const Tensor3& t);

// Raw tensor file format "TDT3": magic, u8 version, three u32 LE dims,
// then d1*d2*d3 LE 32-bit floats in the row-major order above.
void save_tensor(const Tensor3& t, const std::string& path);
Tensor3 load_tensor(const std::string& path);

std::vector<uint8_t> tensor_to_bytes(const Tensor3& t);
Tensor3 tensor_from_bytes(const uint8_t* data, size_t size);

}  // namespace tdnc
