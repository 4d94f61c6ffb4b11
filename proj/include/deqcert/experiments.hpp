#pragma once

// Final-layer training, empirical generalization gaps and (N, p) sweeps.

#include "deqcert/bound.hpp"
#include "deqcert/constants.hpp"
#include "deqcert/data.hpp"
#include "deqcert/losses.hpp"
#include "deqcert/operators.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace deqcert {

// Fixed points x*_{psi,d} for every input of the dataset.
std::vector<Vector> fixed_points(const CompiledOperator& op, std::span<const Vector> inputs,
                                 const SolveConfig& cfg = {});

// Mean loss of P_phi(x) over paired features and targets.
double mean_loss(const OperatorSpec& spec, const ParamSet& params, std::span<const Vector> features,
                 std::span<const Vector> targets, const LossSpec& loss);

struct TrainConfig {
    std::size_t steps = 200;
    double lr = 0.5;
    double radius = 1.0;      // Frobenius ball for phi
    double divergence = 1e6;  // abort when the loss reaches this value
};

// Full-batch (sub)gradient descent on phi with psi frozen.
Matrix train_final_layer(const OperatorSpec& spec, const ParamSet& params, std::span<const Vector> features,
                         std::span<const Vector> targets, const LossSpec& loss, const TrainConfig& cfg);
Matrix train_final_layer(const OperatorSpec& spec, const ParamSet& params, const Dataset& data, const LossSpec& loss,
                         const TrainConfig& cfg, const SolveConfig& solve_cfg = {});

struct GapRow {
    std::size_t theta = 0;
    double train_loss = 0.0;
    double heldout_loss = 0.0;
    double gap = 0.0;
};

struct GapReport {
    std::vector<GapRow> rows;
    double max_gap = 0.0;
    std::size_t n_train = 0;
    std::size_t n_heldout = 0;
    std::size_t failures = 0;   // thetas skipped after a solver failure
};

GapReport measure_gap(const OperatorSpec& spec, std::span<const ParamSet> thetas, const Dataset& train,
                      const Dataset& heldout, const LossSpec& loss, std::size_t threads = 0,
                      const SolveConfig& cfg = {});

// Draws `count` samples from a fixed distribution.
using Sampler = std::function<Dataset(std::size_t count, Rng& rng)>;

struct SweepConfig {
    std::vector<std::size_t> n_grid{100, 1000, 10000};
    std::vector<std::size_t> p_grid;   // empty: ceil(p/4), p, 4p for the architecture's p
    double delta = 1e-2;
    LossSpec loss;
    std::size_t n_theta = default_theta_samples;
    bool with_gaps = false;
    bool train_final_layer = false;
    std::size_t trained_thetas = 5;
    TrainConfig train;
    std::uint64_t seed = 0;
    std::size_t threads = 0;
    std::size_t heldout_cap = 100000;
    SolveConfig solve;
};

struct SweepCell {
    std::size_t n_samples = 0;
    std::size_t p = 0;
    BoundReport bound;
    std::optional<double> max_gap_random;
    std::optional<double> max_gap_trained;
};

struct SweepResult {
    ConstantsReport constants;
    LipschitzChain lipschitz;
    std::vector<SweepCell> cells;   // n_grid-major, then p_grid
    std::size_t gap_failures = 0;
};

std::vector<std::size_t> default_p_grid(std::size_t p);

// Draws one training pool of size max(N) and one disjoint held-out pool of
// size min(4 max(N), heldout_cap), estimates constants on the training pool
// with a shared theta set, then evaluates every cell. Gaps at N use the first
// N training and the first min(4N, pool) held-out samples.
SweepResult sweep(const OperatorSpec& spec, const Sampler& sampler, const SweepConfig& cfg);

} // namespace deqcert
