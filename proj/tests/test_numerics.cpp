#include "deqcert/errors.hpp"
#include "deqcert/numerics.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

using namespace deqcert;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(rows, cols);
    for (double& v : m.data()) v = rng.normal();
    return m;
}

} // namespace

TEST_CASE("matrix construction validates shape and finiteness") {
    CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>{1, 2, 3}), DimensionError);
    CHECK_THROWS_AS(Matrix(1, 2, std::vector<double>{1, std::nan("")}), NumericalError);
    const Matrix m(2, 3, std::vector<double>{1, 2, 3, 4, 5, 6});
    CHECK(m(1, 2) == 6);
    CHECK(m.transpose()(2, 1) == 6);
    CHECK(m.frobenius_norm() == doctest::Approx(std::sqrt(91.0)));
}

TEST_CASE("matrix products match explicit loops") {
    const Matrix a = random_matrix(4, 3, 1);
    const Matrix b = random_matrix(3, 5, 2);
    const Matrix c = a * b;
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < 3; ++k) s += a(i, k) * b(k, j);
            CHECK(c(i, j) == doctest::Approx(s).epsilon(1e-14));
        }
    const Vector x{1.0, -2.0, 0.5};
    const Vector y = multiply(a, x);
    const Vector expect = oracle::matvec(a, x);
    for (std::size_t i = 0; i < 4; ++i) CHECK(y[i] == doctest::Approx(expect[i]).epsilon(1e-14));
    CHECK_THROWS_AS(multiply(a, Vector{1.0}), DimensionError);
}

TEST_CASE("vector norms") {
    CHECK(norm2(Vector{3, 4}) == 5.0);
    CHECK(norm1(Vector{3, -4}) == 7.0);
    CHECK(norm2(Vector{1e200, 1e200}) == doctest::Approx(std::sqrt(2.0) * 1e200));
    CHECK(distance(Vector{1, 1}, Vector{4, 5}) == 5.0);
}

TEST_CASE("power method on the identity returns exactly one") {
    Rng rng(1);
    const PowerResult r = power_method(Matrix::identity(5), 100, rng);
    CHECK(r.sigma_max == 1.0);
}

TEST_CASE("power method on diag(3, 1)") {
    Rng rng(2);
    const Matrix m(2, 2, std::vector<double>{3, 0, 0, 1});
    CHECK(power_method(m, 100, rng).sigma_max == doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("power method on a random 50x50 matrix matches the Jacobi oracle") {
    const Matrix m = random_matrix(50, 50, 7);
    Rng rng(7);
    PowerOptions options;
    options.max_iters = 200000;
    options.rel_tol = 1e-14;
    const double sigma = power_method(m, rng, options).sigma_max;
    const double truth = oracle::spectral_norm(m);
    CHECK(std::abs(sigma - truth) <= 1e-6 * truth);
    CHECK(sigma <= truth * (1.0 + 1e-12));
}

TEST_CASE("power method with squarings agrees with plain iteration") {
    const Matrix m = random_matrix(30, 20, 9);
    Rng a(3), b(3);
    PowerOptions plain;
    plain.max_iters = 200000;
    plain.rel_tol = 1e-14;
    PowerOptions squared = plain;
    squared.squarings = 12;
    const PowerResult r1 = power_method(m, a, plain);
    const PowerResult r2 = power_method(m, b, squared);
    CHECK(r2.sigma_max == doctest::Approx(r1.sigma_max).epsilon(1e-10));
    CHECK(r2.iterations <= r1.iterations);
}

TEST_CASE("power method lower-bounds the spectral norm at every iteration") {
    const Matrix m = random_matrix(12, 12, 21);
    const double truth = oracle::spectral_norm(m);
    Rng rng(4);
    PowerOptions options;
    options.keep_history = true;
    options.max_iters = 50;
    options.rel_tol = 0.0;
    const PowerResult r = power_method(m, rng, options);
    REQUIRE(r.history.size() == 50);
    for (double rq : r.history) CHECK(std::sqrt(rq) <= truth * (1.0 + 1e-12));
}

TEST_CASE("power method edge cases") {
    Rng rng(5);
    const PowerResult zero = power_method(Matrix(3, 3), 10, rng);
    CHECK(zero.sigma_max == 0.0);
    CHECK(zero.residual == 0.0);
    Matrix bad(2, 2);
    bad(0, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(power_method(bad, 10, rng), NumericalError);
}

TEST_CASE("rng is reproducible and its streams are independent of draw history") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    CHECK(a.position() == 100);
    Rng c(42);
    const Rng child_before = c.child(3);
    for (int i = 0; i < 10; ++i) c.normal();
    Rng x = child_before;
    Rng y = c.child(3);
    for (int i = 0; i < 10; ++i) CHECK(x.uniform() == y.uniform());
    CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
}

TEST_CASE("rng draws match the standard mt19937_64 sequence") {
    // The standard fixes the 10000th output of a default-seeded engine.
    std::mt19937_64 reference;
    reference.discard(9999);
    Rng rng(5489u);
    for (int i = 0; i < 9999; ++i) rng.next_u64();
    CHECK(rng.next_u64() == 9981545732273789042ULL);
    CHECK(reference() == 9981545732273789042ULL);
}

TEST_CASE("uniform and normal draws have the right moments") {
    Rng rng(11);
    double su = 0.0, sn = 0.0, sn2 = 0.0;
    const int count = 200000;
    for (int i = 0; i < count; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        su += u;
        const double z = rng.normal();
        sn += z;
        sn2 += z * z;
    }
    CHECK(su / count == doctest::Approx(0.5).epsilon(0.01));
    CHECK(std::abs(sn / count) < 0.01);
    CHECK(sn2 / count == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("integrate: constant and linear integrands") {
    QuadratureSpec spec;
    spec.lower = 0.0;
    spec.upper = 2.0;
    CHECK(integrate([](double) { return 1.0; }, spec).value == doctest::Approx(2.0).epsilon(1e-14));
    spec.upper = 1.0;
    CHECK(integrate([](double r) { return r; }, spec).value == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("integrate: log singularity at zero matches a refined trapezoid oracle") {
    const auto f = [](double r) { return std::sqrt(std::log1p(1.0 / r)); };
    QuadratureSpec spec;
    spec.lower = 0.0;
    spec.upper = 1.0;
    spec.singular_at_zero = true;
    const QuadratureResult r = integrate(f, spec);
    const double truth = oracle::trapezoid(f, 0.0, 1.0, 1e-10);
    CHECK(std::abs(r.value - truth) <= 1e-6);
    CHECK(std::isfinite(r.value));
    CHECK(r.slice > 0.0);
}

TEST_CASE("integrate: slice bound callback replaces the endpoint estimate") {
    const auto f = [](double r) { return std::sqrt(std::log1p(1.0 / r)); };
    QuadratureSpec spec;
    spec.upper = 1.0;
    spec.singular_at_zero = true;
    spec.slice_bound = [](double eps) { return 10.0 * eps; };
    const QuadratureResult r = integrate(f, spec);
    CHECK(r.slice == doctest::Approx(10.0 * 1e-6));
}

TEST_CASE("integrate: non-finite integrand names the abscissa") {
    QuadratureSpec spec;
    spec.lower = 0.0;
    spec.upper = 1.0;
    try {
        integrate([](double r) { return r > 0.5 ? std::nan("") : 1.0; }, spec);
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("r = 0.") != std::string::npos);
    }
}

TEST_CASE("gauss-legendre rule integrates polynomials of degree 31 exactly") {
    const GaussRule& rule = gauss_legendre_16();
    double s = 0.0, w = 0.0;
    for (std::size_t i = 0; i < 16; ++i) {
        s += rule.weights[i] * std::pow(rule.nodes[i], 30);
        w += rule.weights[i];
    }
    CHECK(w == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(s == doctest::Approx(2.0 / 31.0).epsilon(1e-13));
}

TEST_CASE("sample_on_norm_sphere hits the target norm") {
    Rng rng(3);
    CHECK(sample_on_norm_sphere(3, 3, 1.0, rng).frobenius_norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sample_on_norm_sphere(7, 2, 2.5, rng).frobenius_norm() == doctest::Approx(2.5).epsilon(1e-12));
    CHECK_THROWS_AS(sample_on_norm_sphere(2, 2, 0.0, rng), std::invalid_argument);
}

TEST_CASE("cholesky, spd inverse and LU solve") {
    const Matrix a = random_matrix(6, 6, 13);
    const Matrix spd = a.transpose() * a + Matrix::identity(6);
    const auto l = cholesky(spd);
    REQUIRE(l);
    const Matrix back = *l * l->transpose();
    for (std::size_t i = 0; i < 36; ++i) CHECK(back.data()[i] == doctest::Approx(spd.data()[i]).epsilon(1e-12));
    CHECK_FALSE(cholesky(-1.0 * Matrix::identity(3)));
    const Matrix prod = spd * spd_inverse(spd);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j) CHECK(prod(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-10));

    const Vector b{1, 2, 3, 4, 5, 6};
    const Vector x = LuDecomposition(a).solve(b);
    const Vector ax = oracle::matvec(a, x);
    for (std::size_t i = 0; i < 6; ++i) CHECK(ax[i] == doctest::Approx(b[i]).epsilon(1e-10));
    CHECK_THROWS_AS(LuDecomposition(Matrix(2, 2)), NumericalError);
}

TEST_CASE("sample_on_norm_sphere in one dimension and under a fixed seed") {
    Rng rng(8);
    for (int i = 0; i < 20; ++i) CHECK(std::abs(sample_on_norm_sphere(1, 1, 2.0, rng)(0, 0)) == 2.0);
    Rng a(99), b(99);
    CHECK(sample_on_norm_sphere(4, 2, 1.0, a) == sample_on_norm_sphere(4, 2, 1.0, b));
}
