#include "deqcert/errors.hpp"
#include "deqcert/experiments.hpp"

#include <doctest.h>

#include <cmath>

using namespace deqcert;

namespace {

OperatorSpec small_spec(Family family = Family::contractive) {
    OperatorSpec spec;
    spec.family = family;
    spec.state_dim = 6;
    spec.input_dim = 4;
    spec.output_dim = 3;
    spec.final_layer = FinalLayer::linear;
    return spec;
}

Sampler blob_sampler(std::size_t m, std::size_t classes, std::uint64_t seed) {
    Rng rng(seed);
    const BlobModel model = make_blob_model(m, classes, 0.3, rng);
    return [model](std::size_t count, Rng& r) { return sample_blobs(model, count, r); };
}

const LossSpec ce{LossKind::cross_entropy_softmax};

} // namespace

TEST_CASE("train_final_layer leaves phi unchanged with no steps or zero rate") {
    const OperatorSpec spec = small_spec();
    Rng rng(1);
    const ParamSet theta = sample_params(spec, rng);
    const Dataset data = blob_sampler(4, 3, 1)(60, rng);
    TrainConfig cfg;
    cfg.steps = 0;
    CHECK(train_final_layer(spec, theta, data, ce, cfg) == *theta.phi);
    cfg.steps = 20;
    cfg.lr = 0.0;
    CHECK(train_final_layer(spec, theta, data, ce, cfg) == *theta.phi);
}

TEST_CASE("train_final_layer reduces the cross-entropy training loss and stays in the ball") {
    const OperatorSpec spec = small_spec();
    Rng rng(2);
    const ParamSet theta = sample_params(spec, rng);
    const Dataset data = blob_sampler(4, 3, 2)(300, rng);
    const auto features = fixed_points(compile(spec, theta), data.inputs);
    const double before = mean_loss(spec, theta, features, data.targets, ce);
    TrainConfig cfg;
    const Matrix phi = train_final_layer(spec, theta, features, data.targets, ce, cfg);
    ParamSet tuned = theta;
    tuned.phi = phi;
    CHECK(mean_loss(spec, tuned, features, data.targets, ce) < before);
    CHECK(phi.frobenius_norm() <= cfg.radius * (1.0 + 1e-12));
}

TEST_CASE("train_final_layer errors") {
    OperatorSpec identity = small_spec();
    identity.final_layer = FinalLayer::identity;
    identity.output_dim = identity.state_dim;
    Rng rng(3);
    const ParamSet theta = sample_params(identity, rng);
    const Dataset data = blob_sampler(4, 6, 3)(30, rng);
    CHECK_THROWS_AS(train_final_layer(identity, theta, data, ce, TrainConfig{}), ConfigError);

    const OperatorSpec spec = small_spec();
    const ParamSet linear = sample_params(spec, rng);
    const Dataset three = blob_sampler(4, 3, 3)(30, rng);
    TrainConfig cfg;
    cfg.divergence = 1e-6;
    try {
        train_final_layer(spec, linear, three, ce, cfg);
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("step 0") != std::string::npos);
    }
}

TEST_CASE("measure_gap is zero when held-out equals train") {
    const OperatorSpec spec = small_spec(Family::mon);
    const auto thetas = sample_thetas(spec, 5, 4);
    Rng rng(4);
    const Dataset data = blob_sampler(4, 3, 4)(100, rng);
    const GapReport report = measure_gap(spec, thetas, data, data, ce);
    REQUIRE(report.rows.size() == 5);
    for (const GapRow& row : report.rows) CHECK(row.gap == 0.0);
    CHECK(report.max_gap == 0.0);
    CHECK(report.failures == 0);
}

TEST_CASE("measure_gap of a constant predictor matches a scalar-loop oracle") {
    OperatorSpec spec = small_spec();
    Rng rng(5);
    ParamSet theta = sample_params(spec, rng);
    auto& w = std::get<ContractiveWeights>(theta.psi);
    w.U = Matrix(6, 4);
    w.b = Matrix(6, 1);
    theta = certify(spec, theta);
    const LossSpec l1{LossKind::l1};
    const Sampler sampler = blob_sampler(4, 3, 5);
    const Dataset train = sampler(90, rng);
    Dataset held = sampler(300, rng);
    for (Vector& y : held.targets) y[0] *= 2.0;
    const GapReport report = measure_gap(spec, std::span(&theta, 1), train, held, l1);
    double a = 0.0, b = 0.0;
    for (const Vector& y : train.targets)
        for (double v : y) a += std::abs(v);
    for (const Vector& y : held.targets)
        for (double v : y) b += std::abs(v);
    const double expect = std::abs(a / 90.0 - b / 300.0);
    CHECK(report.rows.at(0).gap == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("measure_gap does not depend on evaluation order") {
    const OperatorSpec spec = small_spec();
    auto thetas = sample_thetas(spec, 6, 6);
    Rng rng(6);
    const Sampler sampler = blob_sampler(4, 3, 6);
    const Dataset train = sampler(80, rng);
    const Dataset held = sampler(320, rng);
    const GapReport forward = measure_gap(spec, thetas, train, held, ce, 1);
    std::reverse(thetas.begin(), thetas.end());
    const GapReport backward = measure_gap(spec, thetas, train, held, ce, 3);
    CHECK(forward.max_gap == backward.max_gap);
    for (std::size_t i = 0; i < 6; ++i) CHECK(forward.rows[i].gap == backward.rows[5 - i].gap);
}

TEST_CASE("gaps stay below the bound for 100 random thetas") {
    const OperatorSpec spec = small_spec();
    const Sampler sampler = blob_sampler(4, 3, 7);
    Rng rng(7);
    const Dataset train = sampler(200, rng);
    const Dataset held = sampler(800, rng);
    EstimateOptions options;
    options.seed = 7;
    const auto thetas = sample_thetas(spec, 100, 7);
    const ConstantsReport constants = estimate_constants(spec, thetas, train, ce, options);
    const BoundReport bound = generalization_bound(constants, chain_for(constants), param_count(spec), 200, 1e-2);
    const GapReport gaps = measure_gap(spec, thetas, train, held, ce);
    CHECK(gaps.rows.size() == 100);
    for (const GapRow& row : gaps.rows) CHECK(row.gap <= bound.total_excess);
}

TEST_CASE("sweep: monotone bound curves with gaps below them") {
    SweepConfig cfg;
    cfg.n_grid = {50, 200, 800};
    cfg.p_grid = {40, 80, 160};
    cfg.loss = ce;
    cfg.n_theta = 10;
    cfg.with_gaps = true;
    cfg.train_final_layer = true;
    cfg.trained_thetas = 2;
    cfg.train.steps = 50;
    cfg.seed = 8;
    const SweepResult r = sweep(small_spec(), blob_sampler(4, 3, 8), cfg);
    REQUIRE(r.cells.size() == 9);
    for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t i = 0; i < 3; ++i) {
            const SweepCell& cell = r.cells[j * 3 + i];
            CHECK(cell.n_samples == cfg.n_grid[j]);
            CHECK(cell.p == cfg.p_grid[i]);
            if (j > 0) CHECK(cell.bound.total_excess < r.cells[(j - 1) * 3 + i].bound.total_excess);
            if (i > 0) CHECK(cell.bound.total_excess > r.cells[j * 3 + i - 1].bound.total_excess);
            REQUIRE(cell.max_gap_random);
            REQUIRE(cell.max_gap_trained);
            CHECK(*cell.max_gap_random <= cell.bound.total_excess);
            CHECK(*cell.max_gap_trained <= cell.bound.total_excess);
        }
    CHECK(r.gap_failures == 0);
}

TEST_CASE("sweep: doubling p scales the Rademacher term by root two") {
    SweepConfig cfg;
    cfg.n_grid = {1000};
    cfg.p_grid = {500, 1000};
    cfg.loss = ce;
    cfg.n_theta = 4;
    cfg.seed = 9;
    const SweepResult r = sweep(small_spec(), blob_sampler(4, 3, 9), cfg);
    const double ratio = r.cells[1].bound.term_rademacher / r.cells[0].bound.term_rademacher;
    CHECK(std::abs(ratio / std::sqrt(2.0) - 1.0) < 0.05);
}

TEST_CASE("sweep: a single cell reduces to generalization_bound and measure_gap") {
    SweepConfig cfg;
    cfg.n_grid = {120};
    cfg.p_grid = {77};
    cfg.loss = ce;
    cfg.n_theta = 5;
    cfg.with_gaps = true;
    cfg.seed = 10;
    const OperatorSpec spec = small_spec();
    const Sampler sampler = blob_sampler(4, 3, 10);
    const SweepResult r = sweep(spec, sampler, cfg);
    REQUIRE(r.cells.size() == 1);
    const BoundReport direct = generalization_bound(r.constants, r.lipschitz, 77, 120, cfg.delta);
    CHECK(r.cells[0].bound.total_excess == direct.total_excess);
    CHECK_FALSE(r.cells[0].max_gap_trained);
    CHECK(r.constants.theta_samples == 5);
    CHECK(r.constants.data_samples == 120);

    const auto thetas = sample_thetas(spec, 5, 10);
    Rng train_rng(derive_seed(10, {0x706f6f6c, 0}));
    Rng held_rng(derive_seed(10, {0x706f6f6c, 1}));
    const Dataset train = sampler(120, train_rng);
    const Dataset held = sampler(480, held_rng);
    CHECK(*r.cells[0].max_gap_random == measure_gap(spec, thetas, train, held, ce).max_gap);
}

TEST_CASE("sweep configuration errors and default p grid") {
    CHECK(default_p_grid(458) == std::vector<std::size_t>{115, 458, 1832});
    SweepConfig cfg;
    cfg.n_grid = {};
    CHECK_THROWS_AS(sweep(small_spec(), blob_sampler(4, 3, 11), cfg), ConfigError);
    cfg.n_grid = {10};
    cfg.p_grid = {0};
    CHECK_THROWS_AS(sweep(small_spec(), blob_sampler(4, 3, 11), cfg), ConfigError);
}
