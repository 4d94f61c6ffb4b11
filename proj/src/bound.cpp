#include "deqcert/bound.hpp"

#include "deqcert/errors.hpp"

#include <cmath>
#include <initializer_list>

namespace deqcert {

namespace {

void require_nonnegative(std::initializer_list<double> values, const char* what) {
    for (double v : values) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ConfigError(std::string(what) + ": inputs must be finite and >= 0");
    }
}

void require_counts(std::size_t p, double n_samples, const char* what) {
    if (p < 1) throw ConfigError(std::string(what) + ": p must be >= 1");
    if (!(n_samples >= 1.0) || !std::isfinite(n_samples))
        throw ConfigError(std::string(what) + ": N must be >= 1");
}

} // namespace

double l_psi_contractive(double c_out_T, double c_d) {
    require_nonnegative({c_out_T, c_d}, "l_psi_contractive");
    return std::sqrt(c_out_T * c_out_T + c_d * c_d + 1.0);
}

double l_psi_mon(double alpha, double c_params, double c_out_T, double c_d) {
    require_nonnegative({alpha, c_params, c_out_T, c_d}, "l_psi_mon");
    return alpha * std::sqrt(4.0 * (c_params * c_params + 1.0) * c_out_T * c_out_T + c_d * c_d + 1.0);
}

double l_psi_lgd(double alpha, double c_out_T, double c_params_psi) {
    require_nonnegative({alpha, c_out_T, c_params_psi}, "l_psi_lgd");
    return 2.0 * alpha * c_out_T * c_params_psi;
}

LipschitzChain chain(double l_psi, double l_x, const FinalLayerBound& final_layer) {
    require_nonnegative({l_psi, final_layer.c_params_phi, final_layer.c_out_T}, "chain");
    if (!(l_x >= 0.0 && l_x < 1.0)) throw CertificationError("chain: l_x must lie in [0, 1)");
    LipschitzChain c;
    c.l_psi = l_psi;
    c.l_x = l_x;
    c.l = l_psi / (1.0 - l_x);
    if (final_layer.kind == FinalLayer::identity) {
        c.l_p_x = 1.0;
        c.l_p_phi = 0.0;
        c.l_hat = c.l;
    } else {
        c.l_p_x = final_layer.c_params_phi;
        c.l_p_phi = final_layer.c_out_T;
        c.l_hat = std::hypot(c.l_p_x * c.l, c.l_p_phi);
    }
    return c;
}

LipschitzChain chain_for(const ConstantsReport& k) {
    double l_psi = 0.0;
    switch (k.family) {
    case Family::contractive: l_psi = l_psi_contractive(k.c_out_T, k.c_d); break;
    case Family::mon: l_psi = l_psi_mon(k.alpha, k.c_params_psi, k.c_out_T, k.c_d); break;
    case Family::lgd: l_psi = l_psi_lgd(k.alpha, k.c_out_T, k.c_params_psi); break;
    }
    const FinalLayerBound final_layer = k.final_layer == FinalLayer::identity
                                            ? FinalLayerBound::identity()
                                            : FinalLayerBound::linear(k.c_params_phi, k.c_out_T);
    return chain(l_psi, k.l_x, final_layer);
}

double log_covering_bound(double r, double l_hat, double c_params, std::size_t p) {
    if (!(r > 0.0)) throw ConfigError("covering_bound: r must be > 0");
    require_nonnegative({l_hat, c_params}, "covering_bound");
    if (p < 1) throw ConfigError("covering_bound: p must be >= 1");
    return static_cast<double>(p) * std::log1p(2.0 * l_hat * c_params / r);
}

double covering_bound(double r, double l_hat, double c_params, std::size_t p) {
    return std::exp(log_covering_bound(r, l_hat, c_params, p));
}

double rademacher_closed(double l_ell, double c_out, double l_hat, double c_params, std::size_t p,
                         double n_samples) {
    require_nonnegative({l_ell, c_out, l_hat, c_params}, "rademacher_closed");
    require_counts(p, n_samples, "rademacher_closed");
    if (c_out == 0.0) return 0.0;
    const double root_n = std::sqrt(n_samples);
    const double ratio = 4.0 * l_hat * c_params / (root_n * c_out);
    return 4.0 * l_ell * c_out * std::sqrt(static_cast<double>(p)) / root_n * std::sqrt(1.0 + std::log1p(ratio));
}

QuadratureResult rademacher_integral_detail(double l_ell, double c_out, double l_hat, double c_params, std::size_t p,
                                            double n_samples, QuadratureSpec quad) {
    require_nonnegative({l_ell, c_out, l_hat, c_params}, "rademacher_integral");
    require_counts(p, n_samples, "rademacher_integral");
    const double beta = 2.0 * l_hat * c_params;
    if (c_out == 0.0 || beta == 0.0 || l_ell == 0.0) return {};

    const double pd = static_cast<double>(p);
    quad.lower = 0.0;
    quad.upper = std::sqrt(n_samples) * c_out / 2.0;
    quad.singular_at_zero = true;
    // Cauchy-Schwarz on [0, eps] with the exact integral of log(1 + beta/r).
    quad.slice_bound = [pd, beta](double eps) {
        return std::sqrt(eps * pd * (eps * std::log1p(beta / eps) + beta * std::log1p(eps / beta)));
    };
    const auto integrand = [pd, beta](double r) { return std::sqrt(pd * std::log1p(beta / r)); };
    QuadratureResult result = integrate(integrand, quad);
    const double scale = 8.0 * l_ell / n_samples;
    result.value *= scale;
    result.error_estimate *= scale;
    result.slice *= scale;
    return result;
}

double rademacher_integral(double l_ell, double c_out, double l_hat, double c_params, std::size_t p,
                           double n_samples, const QuadratureSpec& quad) {
    return rademacher_integral_detail(l_ell, c_out, l_hat, c_params, p, n_samples, quad).value;
}

BoundReport generalization_bound(const ConstantsReport& constants, const LipschitzChain& lipschitz, std::size_t p,
                                 double n_samples, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("generalization_bound: delta must lie in (0, 1)");
    require_counts(p, n_samples, "generalization_bound");
    require_nonnegative({constants.c_ell}, "generalization_bound");

    BoundReport report;
    report.n_samples = n_samples;
    report.p = p;
    report.delta = delta;
    report.term_rademacher = 2.0 * rademacher_closed(constants.l_ell, constants.c_out, lipschitz.l_hat,
                                                     constants.c_params, p, n_samples);
    report.term_confidence = 4.0 * constants.c_ell * std::sqrt(2.0 * std::log(4.0 / delta) / n_samples);
    report.total_excess = report.term_rademacher + report.term_confidence;
    report.constants = constants;
    report.lipschitz = lipschitz;
    return report;
}

} // namespace deqcert
