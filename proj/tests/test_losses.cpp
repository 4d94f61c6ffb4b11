#include "deqcert/errors.hpp"
#include "deqcert/losses.hpp"
#include "oracles.hpp"

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <doctest.h>

#include <cmath>

using namespace deqcert;

namespace {

Vector one_hot(std::size_t n, std::size_t hot) {
    Vector v(n, 0.0);
    v[hot] = 1.0;
    return v;
}

Vector random_vector(std::size_t n, double scale, Rng& rng) {
    Vector v(n);
    for (double& x : v) x = scale * rng.normal();
    return v;
}

double precise_ce(const Vector& logits, std::size_t hot) {
    using big = boost::multiprecision::cpp_dec_float_50;
    big sum = 0;
    for (double z : logits) sum += exp(big(z));
    return (log(sum) - big(logits[hot])).convert_to<double>();
}

} // namespace

TEST_CASE("loss names and Lipschitz constants") {
    CHECK(LossSpec{LossKind::l1}.lipschitz_constant() == 1.0);
    CHECK(LossSpec{LossKind::cross_entropy_softmax}.lipschitz_constant() == 2.0);
    CHECK(parse_loss(to_string(LossKind::cross_entropy_softmax)) == LossKind::cross_entropy_softmax);
    CHECK_THROWS_AS(parse_loss("hinge"), ConfigError);
}

TEST_CASE("l1 loss examples") {
    CHECK(l1_loss(Vector{1, 2, 3}, Vector{1, 2, 3}) == 0.0);
    CHECK(l1_loss(Vector{1, 0}, Vector{0, 1}) == 2.0);
    Rng rng(1);
    const Vector a = random_vector(7, 1.0, rng);
    const Vector b = random_vector(7, 1.0, rng);
    double s = 0.0;
    for (std::size_t i = 0; i < 7; ++i) s += std::abs(a[i] - b[i]);
    CHECK(l1_loss(a, b) == doctest::Approx(s).epsilon(1e-15));
    CHECK_THROWS_AS(l1_loss(Vector{1}, Vector{1, 2}), DimensionError);
    CHECK(l1_subgradient(Vector{1, 0, -1}, Vector{0, 0, 0}) == Vector{1, 0, -1});
}

TEST_CASE("cross entropy examples") {
    CHECK(ce_softmax_loss(Vector(10, 0.7), one_hot(10, 3)) == doctest::Approx(std::log(10.0)).epsilon(1e-15));
    double previous = INFINITY;
    for (double t : {0.0, 1.0, 5.0, 20.0, 100.0, 1000.0}) {
        const double loss = ce_softmax_loss(Vector{t, 0, 0}, one_hot(3, 0));
        CHECK(loss < previous);
        CHECK(loss >= 0.0);
        previous = loss;
    }
    CHECK(previous < 1e-300);
    CHECK(std::isfinite(ce_softmax_loss(Vector{1000, -1000}, one_hot(2, 1))));
    CHECK_THROWS_AS(ce_softmax_loss(Vector{0, 0}, Vector{0.5, 0.5}), DataError);
}

TEST_CASE("cross entropy matches a 50-digit oracle") {
    Rng rng(2);
    for (int t = 0; t < 200; ++t) {
        const Vector z = random_vector(10, 5.0, rng);
        const std::size_t hot = static_cast<std::size_t>(t % 10);
        const double truth = precise_ce(z, hot);
        CHECK(std::abs(ce_softmax_loss(z, one_hot(10, hot)) - truth) <= 1e-12 * std::max(1.0, truth));
    }
}

TEST_CASE("cross entropy gradient") {
    const Vector g = ce_softmax_grad(Vector{0, 0}, one_hot(2, 0));
    CHECK(g[0] == doctest::Approx(-0.5));
    CHECK(g[1] == doctest::Approx(0.5));
    Rng rng(3);
    for (int t = 0; t < 500; ++t) {
        const Vector z = random_vector(6, 3.0, rng);
        const Vector y = one_hot(6, static_cast<std::size_t>(t % 6));
        const Vector grad = ce_softmax_grad(z, y);
        CHECK(norm2(grad) <= 2.0);
        const Vector fd = oracle::central_difference([&](const Vector& v) { return ce_softmax_loss(v, y); }, z, 1e-6);
        for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(grad[i] - fd[i]) <= 1e-5);
    }
}

TEST_CASE("two-point Lipschitz property of both losses") {
    Rng rng(4);
    for (int t = 0; t < 10000; ++t) {
        const Vector a = random_vector(5, 2.0, rng);
        const Vector b = random_vector(5, 2.0, rng);
        const Vector y = one_hot(5, static_cast<std::size_t>(t % 5));
        REQUIRE(std::abs(ce_softmax_loss(a, y) - ce_softmax_loss(b, y)) <= 2.0 * distance(a, b) + 1e-12);
        Vector diff = subtract(a, b);
        REQUIRE(std::abs(l1_loss(a, y) - l1_loss(b, y)) <= norm1(diff) + 1e-12);
    }
}

TEST_CASE("evaluate and gradient dispatch") {
    const LossSpec l1{LossKind::l1};
    const LossSpec ce{LossKind::cross_entropy_softmax};
    CHECK(evaluate(l1, Vector{2, 0}, Vector{0, 1}) == 3.0);
    CHECK(evaluate(ce, Vector{0, 0}, one_hot(2, 1)) == doctest::Approx(std::log(2.0)));
    CHECK(gradient(l1, Vector{2, 0}, Vector{0, 1}) == Vector{1, -1});
    CHECK(softmax(Vector{0, 0, 0, 0})[2] == doctest::Approx(0.25));
    CHECK(hot_index(one_hot(4, 2)) == 2);
    CHECK_THROWS_AS(hot_index(Vector{1, 1}), DataError);
}
