#pragma once

// Executable Monte-Carlo checks of the inequalities behind the bound. Each
// check reports the worst ratio empirical/analytic, which must stay <= 1.

#include "deqcert/numerics.hpp"
#include "deqcert/operators.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace deqcert {

struct VerifyOptions {
    std::uint64_t seed = 0;
    std::size_t pairs = 200;       // fixed-point perturbation pairs per family
    std::size_t samples = 2000;    // two-point samples for the cheaper checks
    std::size_t threads = 0;
};

struct CheckResult {
    std::string name;
    double worst_ratio = 0.0;
    std::size_t trials = 0;
    std::size_t skipped = 0;   // perturbed parameters that failed certification
    bool passed = false;
};

// k=30, m=20, identity final layer (n = k). LGD gets a random 20x30 forward operator.
OperatorSpec verification_spec(Family family, std::uint64_t seed);

// Adds Gaussian noise of relative size `scale` to every psi block, renormalizes
// each block to unit Frobenius norm, keeps the step and phi, and certifies.
ParamSet perturb_params(const OperatorSpec& spec, const ParamSet& base, double scale, Rng& rng);

// Uniform direction, radius uniform in [0, max_norm].
Vector random_ball_vector(std::size_t dim, double max_norm, Rng& rng);

// Psi-Lipschitz constant of one application at state x and input d, for the
// declared parameter bounds of the family.
double l_psi_at(const OperatorSpec& spec, const ParamSet& params, double x_norm, double d_norm);

// Update (or one-step residual) tolerance that keeps the distance to the
// exact fixed point below `error`: both are at most tol / (1 - contraction).
double tolerance_for_error(double contraction, double error);

CheckResult check_perturbation(Family family, const VerifyOptions& options);
CheckResult check_psi_lipschitz(Family family, const VerifyOptions& options);
CheckResult check_contraction(Family family, const VerifyOptions& options);
CheckResult check_covering(std::size_t p, const VerifyOptions& options);
CheckResult check_dudley(const VerifyOptions& options);
CheckResult check_ce_gradient_norm(const VerifyOptions& options);

std::vector<CheckResult> run_verification(const VerifyOptions& options);

} // namespace deqcert
