#include "deqcert/experiments.hpp"

#include "deqcert/errors.hpp"
#include "deqcert/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace deqcert {

namespace {

constexpr std::uint64_t pool_stream = 0x706f6f6c;
// Rounding in a unit-norm phi must not trigger a projection.
constexpr double projection_slack = 1e-12;

ParamSet with_phi(const ParamSet& params, Matrix phi) {
    ParamSet out = params;
    out.phi = std::move(phi);
    return out;
}

double gap_at(const OperatorSpec& spec, const ParamSet& params, std::span<const Vector> train_x,
              std::span<const Vector> train_y, std::span<const Vector> held_x, std::span<const Vector> held_y,
              const LossSpec& loss) {
    return std::abs(mean_loss(spec, params, train_x, train_y, loss) - mean_loss(spec, params, held_x, held_y, loss));
}

} // namespace

std::vector<Vector> fixed_points(const CompiledOperator& op, std::span<const Vector> inputs, const SolveConfig& cfg) {
    return solve_batch(op, inputs, cfg);
}

double mean_loss(const OperatorSpec& spec, const ParamSet& params, std::span<const Vector> features,
                 std::span<const Vector> targets, const LossSpec& loss) {
    if (features.size() != targets.size()) throw DimensionError("mean_loss: feature and target counts differ");
    if (features.empty()) throw DataError("mean_loss: empty sample");
    double sum = 0.0;
    for (std::size_t i = 0; i < features.size(); ++i)
        sum += evaluate(loss, final_apply(spec, params, features[i]), targets[i]);
    return sum / static_cast<double>(features.size());
}

Matrix train_final_layer(const OperatorSpec& spec, const ParamSet& params, std::span<const Vector> features,
                         std::span<const Vector> targets, const LossSpec& loss, const TrainConfig& cfg) {
    if (spec.final_layer != FinalLayer::linear || !params.phi)
        throw ConfigError("train_final_layer: requires a linear final layer");
    if (features.size() != targets.size()) throw DimensionError("train_final_layer: feature and target counts differ");
    if (features.empty()) throw DataError("train_final_layer: empty training set");
    if (!(cfg.lr >= 0.0) || !(cfg.radius >= 0.0)) throw ConfigError("train_final_layer: lr and radius must be >= 0");

    Matrix phi = *params.phi;
    const std::size_t n = phi.rows();
    const std::size_t k = phi.cols();
    const double scale = 1.0 / static_cast<double>(features.size());
    Matrix grad(n, k);
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        std::fill(grad.data().begin(), grad.data().end(), 0.0);
        double total = 0.0;
        for (std::size_t i = 0; i < features.size(); ++i) {
            const Vector z = multiply(phi, features[i]);
            total += evaluate(loss, z, targets[i]);
            const Vector g = gradient(loss, z, targets[i]);
            for (std::size_t r = 0; r < n; ++r) {
                if (g[r] == 0.0) continue;
                for (std::size_t c = 0; c < k; ++c) grad(r, c) += g[r] * features[i][c];
            }
        }
        if (!(total * scale < cfg.divergence)) {
            std::ostringstream msg;
            msg << "train_final_layer: loss diverged at step " << step;
            throw NumericalError(msg.str());
        }
        phi -= (cfg.lr * scale) * grad;
        const double norm = phi.frobenius_norm();
        if (norm > cfg.radius * (1.0 + projection_slack)) phi *= cfg.radius / norm;
    }
    return phi;
}

Matrix train_final_layer(const OperatorSpec& spec, const ParamSet& params, const Dataset& data, const LossSpec& loss,
                         const TrainConfig& cfg, const SolveConfig& solve_cfg) {
    const auto features = fixed_points(compile(spec, params), data.inputs, solve_cfg);
    return train_final_layer(spec, params, features, data.targets, loss, cfg);
}

GapReport measure_gap(const OperatorSpec& spec, std::span<const ParamSet> thetas, const Dataset& train,
                      const Dataset& heldout, const LossSpec& loss, std::size_t threads, const SolveConfig& cfg) {
    if (train.size() == 0 || heldout.size() == 0) throw DataError("measure_gap: empty train or held-out set");
    std::vector<std::optional<GapRow>> rows(thetas.size());
    parallel_for(thetas.size(), threads, [&](std::size_t t) {
        try {
            const CompiledOperator op = compile(spec, thetas[t]);
            const auto train_x = fixed_points(op, train.inputs, cfg);
            const auto held_x = fixed_points(op, heldout.inputs, cfg);
            GapRow row;
            row.theta = t;
            row.train_loss = mean_loss(spec, thetas[t], train_x, train.targets, loss);
            row.heldout_loss = mean_loss(spec, thetas[t], held_x, heldout.targets, loss);
            row.gap = std::abs(row.train_loss - row.heldout_loss);
            rows[t] = row;
        } catch (const NonConvergence&) {
            rows[t].reset();
        }
    });

    GapReport report;
    report.n_train = train.size();
    report.n_heldout = heldout.size();
    for (const auto& row : rows) {
        if (!row) {
            ++report.failures;
            continue;
        }
        report.max_gap = std::max(report.max_gap, row->gap);
        report.rows.push_back(*row);
    }
    return report;
}

std::vector<std::size_t> default_p_grid(std::size_t p) { return {(p + 3) / 4, p, 4 * p}; }

SweepResult sweep(const OperatorSpec& spec, const Sampler& sampler, const SweepConfig& cfg) {
    spec.validate();
    if (cfg.n_grid.empty()) throw ConfigError("sweep: empty N grid");
    for (std::size_t n : cfg.n_grid)
        if (n == 0) throw ConfigError("sweep: N grid entries must be >= 1");
    const std::vector<std::size_t> p_grid = cfg.p_grid.empty() ? default_p_grid(param_count(spec)) : cfg.p_grid;
    for (std::size_t p : p_grid)
        if (p == 0) throw ConfigError("sweep: p grid entries must be >= 1");
    if (cfg.train_final_layer && spec.final_layer != FinalLayer::linear)
        throw ConfigError("sweep: final-layer training needs a linear final layer");

    const std::size_t max_n = *std::max_element(cfg.n_grid.begin(), cfg.n_grid.end());
    Rng train_rng(derive_seed(cfg.seed, {pool_stream, 0}));
    const Dataset train = sampler(max_n, train_rng);

    EstimateOptions options{cfg.n_theta, cfg.seed, cfg.threads, cfg.solve};
    const auto thetas = sample_thetas(spec, cfg.n_theta, cfg.seed, cfg.threads);

    SweepResult result;
    result.constants = estimate_constants(spec, thetas, train, cfg.loss, options);
    result.lipschitz = chain_for(result.constants);

    const std::size_t grid_n = cfg.n_grid.size();
    std::vector<double> gap_random(grid_n, 0.0);
    std::vector<double> gap_trained(grid_n, 0.0);
    if (cfg.with_gaps) {
        const std::size_t held_n = std::min(4 * max_n, cfg.heldout_cap);
        Rng held_rng(derive_seed(cfg.seed, {pool_stream, 1}));
        const Dataset heldout = sampler(held_n, held_rng);
        const std::size_t trained = cfg.train_final_layer ? std::min(cfg.trained_thetas, thetas.size()) : 0;

        std::vector<std::vector<double>> random_rows(thetas.size());
        std::vector<std::vector<double>> trained_rows(thetas.size());
        std::vector<char> failed(thetas.size(), 0);
        parallel_for(thetas.size(), cfg.threads, [&](std::size_t t) {
            std::vector<Vector> train_x;
            std::vector<Vector> held_x;
            try {
                const CompiledOperator op = compile(spec, thetas[t]);
                train_x = fixed_points(op, train.inputs, cfg.solve);
                held_x = fixed_points(op, heldout.inputs, cfg.solve);
            } catch (const NonConvergence&) {
                failed[t] = 1;
                return;
            }
            const std::span<const Vector> tx(train_x), ty(train.targets), hx(held_x), hy(heldout.targets);
            for (std::size_t j = 0; j < grid_n; ++j) {
                const std::size_t n = cfg.n_grid[j];
                const std::size_t h = std::min(4 * n, held_n);
                random_rows[t].push_back(
                    gap_at(spec, thetas[t], tx.first(n), ty.first(n), hx.first(h), hy.first(h), cfg.loss));
                if (t < trained) {
                    Matrix phi = train_final_layer(spec, thetas[t], tx.first(n), ty.first(n), cfg.loss, cfg.train);
                    const ParamSet tuned = with_phi(thetas[t], std::move(phi));
                    trained_rows[t].push_back(
                        gap_at(spec, tuned, tx.first(n), ty.first(n), hx.first(h), hy.first(h), cfg.loss));
                }
            }
        });
        for (std::size_t t = 0; t < thetas.size(); ++t) {
            if (failed[t]) {
                ++result.gap_failures;
                continue;
            }
            for (std::size_t j = 0; j < grid_n; ++j) {
                gap_random[j] = std::max(gap_random[j], random_rows[t][j]);
                if (!trained_rows[t].empty()) gap_trained[j] = std::max(gap_trained[j], trained_rows[t][j]);
            }
        }
    }

    for (std::size_t j = 0; j < grid_n; ++j) {
        for (std::size_t p : p_grid) {
            SweepCell cell;
            cell.n_samples = cfg.n_grid[j];
            cell.p = p;
            cell.bound = generalization_bound(result.constants, result.lipschitz, p,
                                              static_cast<double>(cfg.n_grid[j]), cfg.delta);
            if (cfg.with_gaps) {
                cell.max_gap_random = gap_random[j];
                if (cfg.train_final_layer) cell.max_gap_trained = gap_trained[j];
            }
            result.cells.push_back(std::move(cell));
        }
    }
    return result;
}

} // namespace deqcert
