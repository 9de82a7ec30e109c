#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ucc/matrix.hpp"

#include <random>

using namespace ucc;

TEST_CASE("matmul matches a hand-computed product") {
    Matrix a(2, 3, {1, 2, 3, 4, 5, 6});
    Matrix b(3, 2, {7, 8, 9, 10, 11, 12});
    Matrix c = matmul(a, b);
    CHECK(c.rows() == 2);
    CHECK(c.cols() == 2);
    CHECK(c(0, 0) == doctest::Approx(58).epsilon(1e-15));
    CHECK(c(0, 1) == doctest::Approx(64).epsilon(1e-15));
    CHECK(c(1, 0) == doctest::Approx(139).epsilon(1e-15));
    CHECK(c(1, 1) == doctest::Approx(154).epsilon(1e-15));
}

TEST_CASE("matmul rejects mismatched shapes") {
    Matrix a(2, 3);
    Matrix b(2, 2);
    CHECK_THROWS_AS(matmul(a, b), ShapeError);
}

TEST_CASE("matmul_tn and matmul_nt agree with explicit transposes") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix a(4, 3), b(4, 5);
    for (double& v : a.data()) v = u(rng);
    for (double& v : b.data()) v = u(rng);

    Matrix tn = matmul_tn(a, b);
    Matrix tn_ref = matmul(transpose(a), b);
    REQUIRE(tn.same_shape(tn_ref));
    for (std::size_t i = 0; i < tn.size(); ++i)
        CHECK(tn.data()[i] == doctest::Approx(tn_ref.data()[i]).epsilon(1e-13));

    Matrix c(5, 3);
    for (double& v : c.data()) v = u(rng);
    Matrix nt = matmul_nt(a, c);  // a [4x3] * c^T [3x5]
    Matrix nt_ref = matmul(a, transpose(c));
    REQUIRE(nt.same_shape(nt_ref));
    for (std::size_t i = 0; i < nt.size(); ++i)
        CHECK(nt.data()[i] == doctest::Approx(nt_ref.data()[i]).epsilon(1e-13));
}

TEST_CASE("all_finite flags infinities and NaN") {
    Matrix m(2, 2, {1, 2, 3, 4});
    CHECK(all_finite(m));
    m(1, 1) = std::numeric_limits<double>::infinity();
    CHECK_FALSE(all_finite(m));
    m(1, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_FALSE(all_finite(m));
}

TEST_CASE("l1_distance sums absolute differences") {
    Matrix a(2, 2, {1, 2, 3, 4});
    Matrix b(2, 2, {2, 2, 1, 5});
    CHECK(l1_distance(a, b) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK_THROWS_AS(l1_distance(a, Matrix(1, 2)), ShapeError);
}
