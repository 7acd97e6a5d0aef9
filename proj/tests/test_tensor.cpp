#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "tensor.hpp"
#include "testutil.hpp"

#include <filesystem>

using namespace tdnc;
using namespace tdnc::test;

namespace {

// x_{i1 i2 i3} = i1 + 2(i2 - 1) + 4(i3 - 1) with 1-based indices.
Tensor3 counting_tensor() {
    Tensor3 x({2, 2, 2});
    for (uint32_t i1 = 0; i1 < 2; ++i1)
        for (uint32_t i2 = 0; i2 < 2; ++i2)
            for (uint32_t i3 = 0; i3 < 2; ++i3) x(i1, i2, i3) = (i1 + 1) + 2.0 * i2 + 4.0 * i3;
    return x;
}

}  // namespace

TEST_CASE("unfold of the counting tensor matches the hand enumeration") {
    Matrix m = unfold(counting_tensor(), 1);
    REQUIRE(m.rows() == 2);
    REQUIRE(m.cols() == 4);
    // Lower-numbered remaining mode varies fastest along columns.
    double want0[4] = {1, 3, 5, 7};
    double want1[4] = {2, 4, 6, 8};
    for (int j = 0; j < 4; ++j) {
        CHECK(m(0, j) == want0[j]);
        CHECK(m(1, j) == want1[j]);
    }
}

TEST_CASE("fold reproduces the hand enumeration from its unfolding") {
    Tensor3 x = counting_tensor();
    Tensor3 back = fold(unfold(x, 1), 1, x.dims());
    CHECK(back == x);
}

TEST_CASE("fold inverts unfold bit-exactly for every mode") {
    Rng rng(11);
    for (int rep = 0; rep < 10; ++rep) {
        Dims3 dims{uint32_t(rng.range(1, 6)), uint32_t(rng.range(1, 6)), uint32_t(rng.range(1, 6))};
        Tensor3 x = random_tensor(rng, dims);
        for (int n = 1; n <= 3; ++n) CHECK(fold(unfold(x, n), n, dims) == x);
    }
}

TEST_CASE("unfold of the zero tensor is the zero matrix") {
    Tensor3 z({3, 4, 5});
    for (int n = 1; n <= 3; ++n) {
        Matrix m = unfold(z, n);
        CHECK(m.rows() == int(z.dims()[n]));
        CHECK(m.cols() == int(60 / z.dims()[n]));
        CHECK(m.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("fold accepts a 1xK matrix for a unit mode") {
    Matrix m(1, 6);
    for (int j = 0; j < 6; ++j) m(0, j) = j + 1;
    Tensor3 t = fold(m, 1, {1, 2, 3});
    CHECK(unfold(t, 1) == m);
}

TEST_CASE("unfold and fold reject invalid arguments") {
    Tensor3 x({2, 2, 2});
    CHECK_THROWS_AS(unfold(x, 0), std::invalid_argument);
    CHECK_THROWS_AS(unfold(x, 4), std::invalid_argument);
    CHECK_THROWS_AS(fold(Matrix::Zero(2, 3), 1, {2, 2, 2}), std::invalid_argument);
}

TEST_CASE("tensor construction validates size and finiteness") {
    CHECK_THROWS_AS(Tensor3({2, 2, 2}, std::vector<double>(7)), std::invalid_argument);
    std::vector<double> bad(8, 0.0);
    bad[3] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(Tensor3({2, 2, 2}, bad), std::invalid_argument);
    CHECK_THROWS_AS(Tensor3({0, 2, 2}), std::invalid_argument);
}

TEST_CASE("mode product with the identity matrix is the identity map") {
    Rng rng(22);
    Tensor3 x = random_tensor(rng, {4, 3, 5});
    for (int n = 1; n <= 3; ++n) {
        Tensor3 y = mode_n_product(x, Matrix::Identity(x.dims()[n], x.dims()[n]), n);
        CHECK(y == x);
    }
}

TEST_CASE("mode-3 product with a summing row vector adds the frontal slices") {
    Tensor3 x = counting_tensor();
    Matrix ones(1, 2);
    ones << 1, 1;
    Tensor3 y = mode_n_product(x, ones, 3);
    REQUIRE(y.dims() == Dims3{2, 2, 1});
    CHECK(y(0, 0, 0) == 6.0);  // 1 + 5
    for (uint32_t i = 0; i < 2; ++i)
        for (uint32_t j = 0; j < 2; ++j) CHECK(y(i, j, 0) == x(i, j, 0) + x(i, j, 1));
}

TEST_CASE("mode product matches the elementwise definition") {
    Rng rng(33);
    for (int rep = 0; rep < 8; ++rep) {
        Dims3 dims{uint32_t(rng.range(2, 5)), uint32_t(rng.range(2, 5)), uint32_t(rng.range(2, 5))};
        Tensor3 x = random_tensor(rng, dims);
        int n = rng.range(1, 3);
        Matrix b = random_matrix(rng, rng.range(1, 6), int(dims[n]));
        Tensor3 got = mode_n_product(x, b, n);
        Tensor3 want = mode_product_reference(x, b, n);
        CHECK(max_abs_diff(got, want) < 1e-12);
    }
}

TEST_CASE("mode products on distinct modes commute") {
    Rng rng(44);
    Tensor3 x = random_tensor(rng, {4, 4, 4});
    Matrix a = random_matrix(rng, 3, 4), b = random_matrix(rng, 5, 4);
    Tensor3 p = mode_n_product(mode_n_product(x, a, 1), b, 2);
    Tensor3 q = mode_n_product(mode_n_product(x, b, 2), a, 1);
    CHECK(relative_error(p, q) < 1e-12);
}

TEST_CASE("mode product rejects a dimension mismatch") {
    Tensor3 x({2, 3, 4});
    CHECK_THROWS_AS(mode_n_product(x, Matrix::Zero(2, 5), 1), std::invalid_argument);
}

TEST_CASE("multi-mode product with identity factors is the identity") {
    Rng rng(55);
    Tensor3 x = random_tensor(rng, {3, 4, 2});
    std::array<Matrix, 3> id = {Matrix::Identity(3, 3), Matrix::Identity(4, 4),
                                Matrix::Identity(2, 2)};
    for (int skip = 0; skip <= 3; ++skip) CHECK(multi_mode_product_except(x, id, skip, false) == x);
}

TEST_CASE("multi-mode product equals the explicit Kronecker construction") {
    Rng rng(66);
    SUBCASE("3x3x3, skip mode 2") {
        Tensor3 x = random_tensor(rng, {3, 3, 3});
        std::array<Matrix, 3> f = {random_matrix(rng, 2, 3), random_matrix(rng, 3, 3),
                                   random_matrix(rng, 4, 3)};
        Tensor3 got = multi_mode_product_except(x, f, 2, false);
        Tensor3 want = multi_mode_except_kronecker(x, f, 2, false);
        CHECK(relative_error(want, got) < 1e-10);
    }
    SUBCASE("random shapes, every skip, both transpose flags") {
        for (int rep = 0; rep < 12; ++rep) {
            Dims3 dims{uint32_t(rng.range(2, 4)), uint32_t(rng.range(2, 4)),
                       uint32_t(rng.range(2, 4))};
            Tensor3 x = random_tensor(rng, dims);
            bool transpose = rep % 2 == 0;
            int skip = 1 + rep % 3;
            std::array<Matrix, 3> f;
            for (int n = 1; n <= 3; ++n) {
                int other = rng.range(1, 4);
                f[n - 1] = transpose ? random_matrix(rng, int(dims[n]), other)
                                     : random_matrix(rng, other, int(dims[n]));
            }
            Tensor3 got = multi_mode_product_except(x, f, skip, transpose);
            Tensor3 want = multi_mode_except_kronecker(x, f, skip, transpose);
            CHECK(max_abs_diff(got, want) < 1e-10);
        }
    }
}

TEST_CASE("multi-mode product with one nontrivial factor reduces to a single mode product") {
    Rng rng(77);
    Tensor3 x = random_tensor(rng, {3, 4, 5});
    Matrix b = random_matrix(rng, 2, 4);
    std::array<Matrix, 3> f = {Matrix::Identity(3, 3), b, Matrix::Identity(5, 5)};
    Tensor3 got = multi_mode_product_except(x, f, 1, false);
    Tensor3 want = mode_n_product(x, b, 2);
    CHECK(got == want);
}

TEST_CASE("leading left singular vectors of the identity are basis vectors") {
    Matrix u = leading_left_singular_vectors(Matrix::Identity(3, 3), 2);
    REQUIRE(u.rows() == 3);
    REQUIRE(u.cols() == 2);
    // Any two basis vectors qualify; require orthonormality and the sign rule.
    CHECK((u.transpose() * u - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
    for (int k = 0; k < 2; ++k) CHECK(u.col(k).cwiseAbs().maxCoeff() == doctest::Approx(1.0));
}

TEST_CASE("rank-1 matrix yields its normalized column") {
    Rng rng(88);
    Matrix a = random_matrix(rng, 5, 1), b = random_matrix(rng, 7, 1);
    Matrix m = a * b.transpose();
    Matrix u = leading_left_singular_vectors(m, 1);
    Matrix expected = a / a.norm();
    Eigen::Index at = 0;
    expected.col(0).cwiseAbs().maxCoeff(&at);
    if (expected(at, 0) < 0) expected = -expected;
    CHECK((u - expected).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("projection residual matches the full-SVD tail") {
    Rng rng(99);
    Matrix m = random_matrix(rng, 4, 20);
    Matrix u = leading_left_singular_vectors(m, 3);
    CHECK((u.transpose() * u - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-8);

    double residual = (m - u * (u.transpose() * m)).norm();
    std::vector<double> sv = singular_values(m);
    double tail = 0.0;
    for (size_t i = 3; i < sv.size(); ++i) tail += sv[i] * sv[i];
    CHECK(residual == doctest::Approx(std::sqrt(tail)).epsilon(1e-8));
}

TEST_CASE("singular vector columns come in non-increasing singular value order") {
    Rng rng(111);
    Matrix m = random_matrix(rng, 6, 30);
    Matrix u = leading_left_singular_vectors(m, 6);
    std::vector<double> projected;
    for (int k = 0; k < 6; ++k) projected.push_back((m.transpose() * u.col(k)).norm());
    for (int k = 1; k < 6; ++k) CHECK(projected[size_t(k)] <= projected[size_t(k) - 1] + 1e-9);
}

TEST_CASE("leading singular vectors reject bad ranks and non-finite input") {
    Matrix m = Matrix::Zero(3, 5);
    CHECK_THROWS_AS(leading_left_singular_vectors(m, 0), std::invalid_argument);
    CHECK_THROWS_AS(leading_left_singular_vectors(m, 4), std::invalid_argument);
    m(1, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(leading_left_singular_vectors(m, 1), std::invalid_argument);
}

TEST_CASE("frobenius norm basics") {
    Tensor3 z({2, 2, 2});
    CHECK(frobenius_norm(z) == 0.0);
    Tensor3 ones({2, 2, 2}, std::vector<double>(8, 1.0));
    CHECK(frobenius_norm(ones) == doctest::Approx(std::sqrt(8.0)).epsilon(1e-15));
}

TEST_CASE("frobenius norm is invariant under orthogonal mode products") {
    Rng rng(123);
    Tensor3 x = random_tensor(rng, {4, 5, 3});
    for (int n = 1; n <= 3; ++n) {
        Matrix q = random_orthonormal(rng, int(x.dims()[n]), int(x.dims()[n]));
        Tensor3 y = mode_n_product(x, q, n);
        CHECK(frobenius_norm(y) == doctest::Approx(frobenius_norm(x)).epsilon(1e-12));
    }
}

TEST_CASE("tensor file round trip and error paths") {
    Rng rng(321);
    Tensor3 x = random_tensor(rng, {3, 2, 4});
    // Values must be f32-exact to round trip bit-identically.
    for (double& v : x.data()) v = double(float(v));

    auto path = std::filesystem::temp_directory_path() / "tdnc_test_tensor.tdt3";
    save_tensor(x, path.string());
    Tensor3 back = load_tensor(path.string());
    CHECK(back == x);

    std::vector<uint8_t> bytes = tensor_to_bytes(x);
    bytes[0] ^= 0xFF;
    CHECK_THROWS_WITH_AS(tensor_from_bytes(bytes.data(), bytes.size()),
                         doctest::Contains("magic"), std::runtime_error);
    bytes[0] ^= 0xFF;
    CHECK_THROWS_AS(tensor_from_bytes(bytes.data(), bytes.size() - 3), std::runtime_error);
    std::filesystem::remove(path);
}
