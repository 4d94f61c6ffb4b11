#include "deqcert/verify.hpp"

#include "deqcert/bound.hpp"
#include "deqcert/constants.hpp"
#include "deqcert/data.hpp"
#include "deqcert/errors.hpp"
#include "deqcert/fixed_point.hpp"
#include "deqcert/losses.hpp"
#include "deqcert/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace deqcert {

namespace {

constexpr double perturbation_slack = 2e-9;
constexpr double contraction_slack = 1e-12;
constexpr double input_radius = 2.0;
constexpr double state_radius = 5.0;

std::uint64_t family_key(Family family) { return static_cast<std::uint64_t>(family) + 1; }

Matrix perturb_block(const Matrix& block, double scale, Rng& rng) {
    Matrix out = block;
    const double unit = block.frobenius_norm() / std::sqrt(static_cast<double>(block.size()));
    for (double& v : out.data()) v += scale * unit * rng.normal();
    const double norm = out.frobenius_norm();
    if (norm > 0.0) out *= block.frobenius_norm() / norm;
    return out;
}

double log_uniform(double lo, double hi, Rng& rng) { return std::exp(rng.uniform(std::log(lo), std::log(hi))); }

// Worst ratio over per-index results, skipping empty slots.
CheckResult collect(std::string name, const std::vector<std::optional<double>>& ratios, double limit) {
    CheckResult r;
    r.name = std::move(name);
    for (const auto& v : ratios) {
        if (!v) {
            ++r.skipped;
            continue;
        }
        ++r.trials;
        r.worst_ratio = std::max(r.worst_ratio, *v);
    }
    r.passed = r.trials > 0 && r.worst_ratio <= limit;
    return r;
}

// Greedy net: a point becomes a center unless it lies within r of one.
std::size_t greedy_cover(const std::vector<Vector>& points, double r) {
    std::vector<const Vector*> centers;
    for (const Vector& p : points) {
        const bool covered =
            std::any_of(centers.begin(), centers.end(), [&](const Vector* c) { return distance(*c, p) <= r; });
        if (!covered) centers.push_back(&p);
    }
    return centers.size();
}

} // namespace

OperatorSpec verification_spec(Family family, std::uint64_t seed) {
    OperatorSpec spec;
    spec.family = family;
    spec.state_dim = 30;
    spec.input_dim = 20;
    spec.output_dim = 30;
    spec.final_layer = FinalLayer::identity;
    if (family == Family::lgd) {
        Rng rng(derive_seed(seed, {0x666f7277}));
        spec.forward = random_forward_operator(spec.input_dim, spec.state_dim, rng);
    }
    spec.validate();
    return spec;
}

ParamSet perturb_params(const OperatorSpec& spec, const ParamSet& base, double scale, Rng& rng) {
    ParamSet out = base;
    out.admissible = false;
    out.contraction.reset();
    std::visit(
        [&](auto& w) {
            using T = std::decay_t<decltype(w)>;
            if constexpr (std::is_same_v<T, ContractiveWeights>) {
                w.W = perturb_block(w.W, scale, rng);
                w.U = perturb_block(w.U, scale, rng);
                w.b = perturb_block(w.b, scale, rng);
            } else if constexpr (std::is_same_v<T, MonWeights>) {
                w.A = perturb_block(w.A, scale, rng);
                w.B = perturb_block(w.B, scale, rng);
                w.U = perturb_block(w.U, scale, rng);
                w.b = perturb_block(w.b, scale, rng);
            } else {
                w.R = perturb_block(w.R, scale, rng);
            }
        },
        out.psi);
    return certify(spec, std::move(out));
}

Vector random_ball_vector(std::size_t dim, double max_norm, Rng& rng) {
    Vector v(dim);
    double n = 0.0;
    while (n == 0.0) {
        for (double& x : v) x = rng.normal();
        n = norm2(v);
    }
    const double radius = rng.uniform(0.0, max_norm);
    for (double& x : v) x *= radius / n;
    return v;
}

double l_psi_at(const OperatorSpec& spec, const ParamSet& params, double x_norm, double d_norm) {
    switch (spec.family) {
    case Family::contractive: return l_psi_contractive(x_norm, d_norm);
    case Family::mon: return l_psi_mon(params.step, declared_c_params_psi(Family::mon), x_norm, d_norm);
    case Family::lgd: return l_psi_lgd(params.step, x_norm, declared_c_params_psi(Family::lgd));
    }
    return 0.0;
}

double tolerance_for_error(double contraction, double error) { return error * (1.0 - contraction); }

CheckResult check_perturbation(Family family, const VerifyOptions& options) {
    const OperatorSpec spec = verification_spec(family, options.seed);
    std::vector<std::optional<double>> ratios(options.pairs);
    parallel_for(options.pairs, options.threads, [&](std::size_t i) {
        Rng rng(derive_seed(options.seed, {0x7065727475, family_key(family), i}));
        const ParamSet first = sample_params(spec, rng);
        ParamSet second;
        try {
            second = perturb_params(spec, first, log_uniform(1e-3, 1.0, rng), rng);
        } catch (const CertificationError&) {
            return;
        }
        const Vector d = random_ball_vector(spec.input_dim, input_radius, rng);
        const double l_x = std::max(*first.contraction, *second.contraction);
        SolveConfig cfg;
        cfg.tolerance = tolerance_for_error(l_x, 0.25 * perturbation_slack);
        cfg.max_iters = 10'000'000;
        const std::vector<Vector> batch{d};
        const Vector a = solve_batch(compile(spec, first), batch, cfg).front();
        const Vector b = solve_batch(compile(spec, second), batch, cfg).front();
        const double x_norm = std::max(norm2(a), norm2(b));
        const double lipschitz = l_psi_at(spec, first, x_norm, norm2(d)) / (1.0 - l_x);
        const double lhs = distance(a, b);
        const double rhs = lipschitz * psi_distance(first, second);
        ratios[i] = lhs / (rhs + perturbation_slack);
    });
    return collect("fixed-point perturbation (" + to_string(family) + ")", ratios, 1.0);
}

CheckResult check_psi_lipschitz(Family family, const VerifyOptions& options) {
    const OperatorSpec spec = verification_spec(family, options.seed);
    std::vector<std::optional<double>> ratios(options.samples);
    parallel_for(options.samples, options.threads, [&](std::size_t i) {
        Rng rng(derive_seed(options.seed, {0x707369, family_key(family), i}));
        const ParamSet first = sample_params(spec, rng);
        ParamSet second;
        try {
            second = perturb_params(spec, first, log_uniform(1e-3, 1.0, rng), rng);
        } catch (const CertificationError&) {
            return;
        }
        const Vector d = random_ball_vector(spec.input_dim, input_radius, rng);
        const Vector x = random_ball_vector(spec.state_dim, state_radius, rng);
        const double lhs = distance(apply(spec, first, x, d), apply(spec, second, x, d));
        const double rhs = l_psi_at(spec, first, norm2(x), norm2(d)) * psi_distance(first, second);
        if (rhs > 0.0) ratios[i] = lhs / rhs;
    });
    return collect("psi-Lipschitz (" + to_string(family) + ")", ratios, 1.0);
}

CheckResult check_contraction(Family family, const VerifyOptions& options) {
    const OperatorSpec spec = verification_spec(family, options.seed);
    const std::size_t thetas = 4;
    const std::size_t per_theta = std::max<std::size_t>(1, options.samples / thetas);
    std::vector<std::optional<double>> ratios(thetas * per_theta);
    parallel_for(thetas, options.threads, [&](std::size_t t) {
        Rng rng(derive_seed(options.seed, {0x636f6e74, family_key(family), t}));
        const ParamSet params = sample_params(spec, rng);
        const Vector d = random_ball_vector(spec.input_dim, input_radius, rng);
        for (std::size_t s = 0; s < per_theta; ++s) {
            const Vector x1 = random_ball_vector(spec.state_dim, state_radius, rng);
            const Vector x2 = random_ball_vector(spec.state_dim, state_radius, rng);
            const double gap = distance(x1, x2);
            if (gap == 0.0) continue;
            ratios[t * per_theta + s] =
                distance(apply(spec, params, x1, d), apply(spec, params, x2, d)) / (*params.contraction * gap);
        }
    });
    return collect("contraction (" + to_string(family) + ")", ratios, 1.0 + contraction_slack);
}

CheckResult check_covering(std::size_t p, const VerifyOptions&) {
    if (p != 1 && p != 2) throw ConfigError("check_covering: p must be 1 or 2");
    // 1-D contractive layer with W = 0.5 fixed; psi = b (p = 1) or (u, b) (p = 2).
    OperatorSpec spec;
    spec.family = Family::contractive;
    spec.state_dim = spec.input_dim = spec.output_dim = 1;
    const std::vector<double> inputs{0.5, -1.0, 2.0};
    const double c_params = 1.0;
    const double l_x = 0.5;

    std::vector<Vector> outputs;
    const auto add_point = [&](double u, double b) {
        ParamSet params;
        params.psi = ContractiveWeights{Matrix(1, 1, 0.5), Matrix(1, 1, u), Matrix(1, 1, b)};
        params = certify(spec, std::move(params));
        Vector m;
        for (double d : inputs) m.push_back(solve(spec, params, Vector{d}).x[0]);
        outputs.push_back(std::move(m));
    };
    if (p == 1) {
        const int steps = 10000;
        for (int j = 0; j <= steps; ++j) add_point(1.0, -c_params + 2.0 * c_params * j / steps);
    } else {
        const int steps = 120;
        for (int a = 0; a < steps; ++a) {
            for (int b = 0; b < steps; ++b) {
                const double u = -c_params + 2.0 * c_params * (a + 0.5) / steps;
                const double v = -c_params + 2.0 * c_params * (b + 0.5) / steps;
                if (std::hypot(u, v) <= c_params) add_point(u, v);
            }
        }
    }

    // Lipschitz constant of psi -> (x*(d_1), ..., x*(d_N)) in the stacked norm.
    double l_hat_sq = 0.0;
    for (double d : inputs) {
        const double l_psi = p == 1 ? 1.0 : std::sqrt(d * d + 1.0);
        l_hat_sq += std::pow(l_psi / (1.0 - l_x), 2);
    }
    const double l_hat = std::sqrt(l_hat_sq);

    std::vector<std::optional<double>> ratios;
    for (double r : {0.05, 0.1, 0.5, 1.0, 2.0}) {
        const double count = static_cast<double>(greedy_cover(outputs, r));
        ratios.push_back(count / covering_bound(r, l_hat, c_params, p));
    }
    CheckResult result = collect("covering number (p=" + std::to_string(p) + ")", ratios, 1.0);
    result.trials = outputs.size();
    return result;
}

CheckResult check_dudley(const VerifyOptions& options) {
    const std::size_t sets = 50;
    std::vector<std::optional<double>> ratios(sets);
    parallel_for(sets, options.threads, [&](std::size_t i) {
        Rng rng(derive_seed(options.seed, {0x6475646c, i}));
        const double l_ell = rng.uniform() < 0.5 ? 1.0 : 2.0;
        const double c_out = log_uniform(0.1, 10.0, rng);
        const double l_hat = log_uniform(0.1, 10.0, rng);
        const double c_params = log_uniform(0.5, 3.0, rng);
        const auto p = static_cast<std::size_t>(std::ceil(log_uniform(1.0, 1e4, rng)));
        const double n = std::round(log_uniform(10.0, 1e6, rng));
        ratios[i] = rademacher_integral(l_ell, c_out, l_hat, c_params, p, n) /
                    rademacher_closed(l_ell, c_out, l_hat, c_params, p, n);
    });
    return collect("Dudley integral vs closed form", ratios, 1.0);
}

CheckResult check_ce_gradient_norm(const VerifyOptions& options) {
    const std::size_t count = options.samples * 10;
    std::vector<std::optional<double>> ratios(count);
    parallel_for(count, options.threads, [&](std::size_t i) {
        Rng rng(derive_seed(options.seed, {0x6365, i}));
        const auto classes = 2 + static_cast<std::size_t>(rng.uniform() * 19.0);
        const double scale = log_uniform(0.1, 30.0, rng);
        Vector z(classes);
        for (double& v : z) v = scale * rng.normal();
        Vector y(classes, 0.0);
        y[static_cast<std::size_t>(rng.uniform() * static_cast<double>(classes))] = 1.0;
        ratios[i] = norm2(ce_softmax_grad(z, y)) / 2.0;
    });
    return collect("cross-entropy gradient norm", ratios, 1.0);
}

std::vector<CheckResult> run_verification(const VerifyOptions& options) {
    std::vector<CheckResult> results;
    for (Family f : {Family::contractive, Family::mon, Family::lgd}) results.push_back(check_perturbation(f, options));
    for (Family f : {Family::contractive, Family::mon, Family::lgd}) results.push_back(check_psi_lipschitz(f, options));
    for (Family f : {Family::contractive, Family::mon, Family::lgd}) results.push_back(check_contraction(f, options));
    results.push_back(check_covering(1, options));
    results.push_back(check_covering(2, options));
    results.push_back(check_dudley(options));
    results.push_back(check_ce_gradient_norm(options));
    return results;
}

} // namespace deqcert
