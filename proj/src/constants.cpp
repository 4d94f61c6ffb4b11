#include "deqcert/constants.hpp"

#include "deqcert/errors.hpp"
#include "deqcert/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace deqcert {

std::string to_string(Provenance provenance) {
    switch (provenance) {
    case Provenance::estimated: return "estimated";
    case Provenance::analytic: return "analytic";
    case Provenance::declared: return "declared";
    }
    return "unknown";
}

Provenance parse_provenance(std::string_view name) {
    if (name == "estimated") return Provenance::estimated;
    if (name == "analytic") return Provenance::analytic;
    if (name == "declared") return Provenance::declared;
    throw ConfigError("unknown provenance '" + std::string(name) + "'");
}

void ConstantsReport::validate() const {
    const std::pair<const char*, double> values[] = {
        {"c_d", c_d}, {"c_out", c_out}, {"c_out_T", c_out_T}, {"c_ell", c_ell}, {"alpha", alpha},
        {"c_params_phi", c_params_phi}, {"c_params_psi", c_params_psi}, {"c_params", c_params}, {"l_ell", l_ell}};
    for (const auto& [name, value] : values) {
        if (!(value >= 0.0) || !std::isfinite(value))
            throw ConfigError(std::string("constants: ") + name + " must be finite and >= 0");
    }
    if (!(l_x > 0.0 && l_x < 1.0)) throw ConfigError("constants: l_x must lie in (0, 1)");
    if (std::abs(c_params - std::hypot(c_params_phi, c_params_psi)) > 1e-12 * std::max(1.0, c_params))
        throw ConfigError("constants: c_params does not match its two factors");
}

std::vector<ParamSet> sample_thetas(const OperatorSpec& spec, std::size_t count, std::uint64_t seed,
                                    std::size_t threads) {
    spec.validate();
    std::vector<ParamSet> thetas(count);
    parallel_for(count, threads, [&](std::size_t i) {
        Rng rng(derive_seed(seed, {theta_stream, i}));
        thetas[i] = sample_params(spec, rng);
    });
    return thetas;
}

double estimate_c_d(std::span<const Vector> inputs) {
    if (inputs.empty()) throw DataError("estimate_c_d: empty dataset");
    double best = 0.0;
    for (const Vector& d : inputs) best = std::max(best, norm2(d));
    return best;
}

FixedPointMaxima scan_fixed_points(const OperatorSpec& spec, std::span<const ParamSet> thetas, const Dataset& data,
                                   const std::optional<LossSpec>& loss, std::size_t threads,
                                   const SolveConfig& solve_cfg) {
    if (data.size() == 0) throw DataError("constants: empty dataset");
    if (thetas.empty()) throw ConfigError("constants: no theta samples");
    if (loss && data.target_dim() != spec.output_dim)
        throw DataError("constants: target dimension does not match the output dimension");

    std::vector<FixedPointMaxima> per_theta(thetas.size());
    parallel_for(thetas.size(), threads, [&](std::size_t t) {
        const ParamSet& params = thetas[t];
        const CompiledOperator op = compile(spec, params);
        FixedPointMaxima& acc = per_theta[t];
        acc.l_x = *params.contraction;
        acc.alpha = spec.family == Family::contractive ? 0.0 : params.step;
        std::vector<Vector> points;
        try {
            points = solve_batch(op, data.inputs, solve_cfg);
        } catch (const NonConvergence& e) {
            std::ostringstream msg;
            msg << "constants: solve failed at theta " << t << ", " << e.what();
            throw NonConvergence(msg.str(), e.last_iterate(), e.update_norm());
        }
        for (std::size_t i = 0; i < data.size(); ++i) {
            acc.c_out_T = std::max(acc.c_out_T, norm2(points[i]));
            const Vector out = final_apply(spec, params, points[i]);
            acc.c_out = std::max(acc.c_out, norm2(out));
            if (loss) acc.c_ell = std::max(acc.c_ell, std::abs(evaluate(*loss, out, data.targets[i])));
        }
    });

    FixedPointMaxima total;
    for (const FixedPointMaxima& acc : per_theta) {
        total.c_out_T = std::max(total.c_out_T, acc.c_out_T);
        total.c_out = std::max(total.c_out, acc.c_out);
        total.c_ell = std::max(total.c_ell, acc.c_ell);
        total.l_x = std::max(total.l_x, acc.l_x);
        total.alpha = std::max(total.alpha, acc.alpha);
    }
    return total;
}

OutputBounds estimate_c_out(const OperatorSpec& spec, const Dataset& data, const EstimateOptions& options) {
    const auto thetas = sample_thetas(spec, options.n_theta, options.seed, options.threads);
    const FixedPointMaxima raw = scan_fixed_points(spec, thetas, data, std::nullopt, options.threads, options.solve);
    return {safety_factor * raw.c_out, safety_factor * raw.c_out_T};
}

double estimate_c_ell(const LossSpec& loss, const OperatorSpec& spec, const Dataset& data,
                      const EstimateOptions& options) {
    const auto thetas = sample_thetas(spec, options.n_theta, options.seed, options.threads);
    return safety_factor * scan_fixed_points(spec, thetas, data, loss, options.threads, options.solve).c_ell;
}

double estimate_l_x(const OperatorSpec& spec, const ParamSet& params) { return contraction_factor(spec, params); }

double declared_c_params_psi(Family family) { return std::sqrt(static_cast<double>(psi_block_count(family))); }

double declared_c_params_phi(FinalLayer layer) { return layer == FinalLayer::linear ? 1.0 : 0.0; }

ConstantsReport estimate_constants(const OperatorSpec& spec, std::span<const ParamSet> thetas, const Dataset& data,
                                   const LossSpec& loss, const EstimateOptions& options) {
    spec.validate();
    data.validate();
    if (data.input_dim() != spec.input_dim)
        throw DataError("constants: dataset input dimension does not match the operator");

    const FixedPointMaxima raw = scan_fixed_points(spec, thetas, data, loss, options.threads, options.solve);

    ConstantsReport report;
    report.family = spec.family;
    report.final_layer = spec.final_layer;
    report.loss = loss.kind;
    report.k = spec.state_dim;
    report.m = spec.input_dim;
    report.n = spec.output_dim;
    report.param_count = param_count(spec);
    report.c_d = estimate_c_d(data.inputs);
    report.c_out = safety_factor * raw.c_out;
    report.c_out_T = safety_factor * raw.c_out_T;
    report.c_ell = safety_factor * raw.c_ell;
    report.l_x = raw.l_x;
    report.alpha = raw.alpha;
    report.c_params_psi = declared_c_params_psi(spec.family);
    report.c_params_phi = declared_c_params_phi(spec.final_layer);
    report.c_params = std::hypot(report.c_params_phi, report.c_params_psi);
    report.l_ell = loss.lipschitz_constant();
    report.theta_samples = thetas.size();
    report.data_samples = data.size();
    report.seed = options.seed;
    report.provenance = {
        {"c_d", Provenance::estimated},        {"c_out", Provenance::estimated},
        {"c_out_T", Provenance::estimated},    {"c_ell", Provenance::estimated},
        {"l_x", Provenance::estimated},        {"alpha", Provenance::declared},
        {"c_params_phi", Provenance::declared}, {"c_params_psi", Provenance::declared},
        {"c_params", Provenance::declared},    {"l_ell", Provenance::analytic},
    };
    return report;
}

ConstantsReport estimate_constants(const OperatorSpec& spec, const Dataset& data, const LossSpec& loss,
                                   const EstimateOptions& options) {
    const auto thetas = sample_thetas(spec, options.n_theta, options.seed, options.threads);
    return estimate_constants(spec, thetas, data, loss, options);
}

} // namespace deqcert
