#include "deqcert/fixed_point.hpp"

#include "deqcert/errors.hpp"

#include <cmath>
#include <optional>
#include <sstream>

namespace deqcert {

void SolveConfig::validate() const {
    if (!(tolerance > 0.0)) throw ConfigError("SolveConfig: tolerance must be > 0");
    if (max_iters < 1) throw ConfigError("SolveConfig: max_iters must be >= 1");
}

FixedPointResult solve_map(const StepFunction& step, std::size_t dim, double contraction, const SolveConfig& cfg) {
    cfg.validate();
    if (!(contraction >= 0.0 && contraction < 1.0))
        throw ContractionViolation("solve: contraction factor must lie in [0, 1)", contraction);

    FixedPointResult result;
    result.contraction = contraction;
    Vector x(dim, 0.0);
    Vector next(dim, 0.0);
    for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
        step(x, next);
        const double update = distance(next, x);
        if (!std::isfinite(update)) throw NumericalError("solve: iterate became non-finite");
        x.swap(next);
        if (it == 1) result.first_update = update;
        if (cfg.record_updates) result.updates.push_back(update);
        result.iterations = it;
        result.update_norm = update;
        if (update <= cfg.tolerance) {
            result.x = std::move(x);
            const double gap = 1.0 - contraction;
            result.a_priori_bound = std::pow(contraction, static_cast<double>(it)) / gap * result.first_update;
            result.a_posteriori_bound = contraction / gap * update;
            return result;
        }
    }
    std::ostringstream msg;
    msg << "solve: no convergence after " << cfg.max_iters << " iterations (last update " << result.update_norm
        << ", tolerance " << cfg.tolerance << ")";
    throw NonConvergence(msg.str(), std::move(x), result.update_norm);
}

FixedPointResult solve(const CompiledOperator& op, std::span<const double> d, const SolveConfig& cfg) {
    if (d.size() != op.input_map.cols()) throw DimensionError("solve: input length does not match the operator");
    const Vector bias = op.bias(d);
    return solve_map([&](std::span<const double> x, std::span<double> out) { op.step(x, bias, out); },
                     op.state_dim(), op.contraction, cfg);
}

FixedPointResult solve(const OperatorSpec& spec, const ParamSet& params, std::span<const double> d,
                       const SolveConfig& cfg) {
    return solve(compile(spec, params), d, cfg);
}

std::vector<Vector> solve_batch(const CompiledOperator& op, std::span<const Vector> inputs, const SolveConfig& cfg) {
    cfg.validate();
    std::vector<Vector> out;
    out.reserve(inputs.size());
    std::optional<LuDecomposition> lu;
    if (!op.activation) lu.emplace(Matrix::identity(op.state_dim()) - op.linear);
    Vector next(op.state_dim());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (inputs[i].size() != op.input_map.cols()) throw DimensionError("solve: input length does not match the operator");
        try {
            if (lu) {
                const Vector bias = op.bias(inputs[i]);
                Vector x = lu->solve(bias);
                op.step(x, bias, next);
                if (distance(next, x) <= cfg.tolerance) {
                    out.push_back(std::move(x));
                    continue;
                }
            }
            out.push_back(solve(op, inputs[i], cfg).x);
        } catch (const NonConvergence& e) {
            std::ostringstream msg;
            msg << "sample " << i << ": " << e.what();
            throw NonConvergence(msg.str(), e.last_iterate(), e.update_norm());
        }
    }
    return out;
}

PerturbationCheck perturbation_check(const OperatorSpec& spec, const ParamSet& first, const ParamSet& second,
                                     std::span<const double> d, double lipschitz, const SolveConfig& cfg) {
    const FixedPointResult a = solve(spec, first, d, cfg);
    const FixedPointResult b = solve(spec, second, d, cfg);
    PerturbationCheck out;
    out.lhs = distance(a.x, b.x);
    out.psi_distance = psi_distance(first, second);
    out.rhs = lipschitz * out.psi_distance;
    return out;
}

} // namespace deqcert
