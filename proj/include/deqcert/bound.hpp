#pragma once

// Lipschitz constants of the implicit model, the covering-number bound and
// the Rademacher-complexity generalization bound.

#include "deqcert/constants.hpp"
#include "deqcert/numerics.hpp"
#include "deqcert/operators.hpp"

#include <cstddef>

namespace deqcert {

struct LipschitzChain {
    double l_psi = 0.0;
    double l_x = 0.0;
    double l = 0.0;        // l_psi / (1 - l_x)
    double l_p_x = 0.0;
    double l_p_phi = 0.0;
    double l_hat = 0.0;    // sqrt((l_p_x l)^2 + l_p_phi^2)
};

// Psi-Lipschitz constants of one operator application at a fixed point.
double l_psi_contractive(double c_out_T, double c_d);
double l_psi_mon(double alpha, double c_params, double c_out_T, double c_d);
double l_psi_lgd(double alpha, double c_out_T, double c_params_psi);

struct FinalLayerBound {
    FinalLayer kind = FinalLayer::identity;
    double c_params_phi = 0.0;
    double c_out_T = 0.0;

    static FinalLayerBound identity() { return {}; }
    static FinalLayerBound linear(double c_params_phi, double c_out_T) {
        return {FinalLayer::linear, c_params_phi, c_out_T};
    }
};

LipschitzChain chain(double l_psi, double l_x, const FinalLayerBound& final_layer);
// Family formula evaluated on the report's constants.
LipschitzChain chain_for(const ConstantsReport& constants);

// (1 + 2 l_hat c_params / r)^p and its logarithm.
double log_covering_bound(double r, double l_hat, double c_params, std::size_t p);
double covering_bound(double r, double l_hat, double c_params, std::size_t p);

// 4 l_ell c_out sqrt(p/N) sqrt(1 + log(1 + 4 l_hat c_params / (sqrt(N) c_out))).
double rademacher_closed(double l_ell, double c_out, double l_hat, double c_params, std::size_t p, double n_samples);

// (8 l_ell / N) * integral over [0, sqrt(N) c_out / 2] of sqrt(log covering_bound(r)).
QuadratureResult rademacher_integral_detail(double l_ell, double c_out, double l_hat, double c_params, std::size_t p,
                                            double n_samples, QuadratureSpec quad = {});
double rademacher_integral(double l_ell, double c_out, double l_hat, double c_params, std::size_t p,
                           double n_samples, const QuadratureSpec& quad = {});

struct BoundReport {
    double n_samples = 0.0;
    std::size_t p = 0;
    double delta = 0.0;
    double term_rademacher = 0.0;   // 2 * rademacher_closed
    double term_confidence = 0.0;   // 4 c_ell sqrt(2 log(4/delta) / N)
    double total_excess = 0.0;
    ConstantsReport constants;
    LipschitzChain lipschitz;
};

BoundReport generalization_bound(const ConstantsReport& constants, const LipschitzChain& lipschitz, std::size_t p,
                                 double n_samples, double delta);

} // namespace deqcert
