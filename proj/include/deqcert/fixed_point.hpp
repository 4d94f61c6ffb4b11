#pragma once

// Banach iteration x_{k+1} = T(x_k; d) from x_0 = 0, stopped on the update norm.

#include "deqcert/numerics.hpp"
#include "deqcert/operators.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace deqcert {

struct SolveConfig {
    double tolerance = 1e-10;      // on ||x_{k+1} - x_k||
    std::size_t max_iters = 100000;
    bool record_updates = false;

    void validate() const;
};

struct FixedPointResult {
    Vector x;
    std::size_t iterations = 0;
    double update_norm = 0.0;     // ||x_K - x_{K-1}||
    double first_update = 0.0;    // ||x_1 - x_0||
    double contraction = 0.0;
    // L^K / (1 - L) * ||x_1 - x_0||, dominates ||x_K - x*||.
    double a_priori_bound = 0.0;
    // L / (1 - L) * ||x_K - x_{K-1}||, also dominates ||x_K - x*||.
    double a_posteriori_bound = 0.0;
    std::vector<double> updates;  // every update norm, if requested
};

using StepFunction = std::function<void(std::span<const double> x, std::span<double> out)>;

// Generic solver for a map with a known contraction factor.
FixedPointResult solve_map(const StepFunction& step, std::size_t dim, double contraction, const SolveConfig& cfg);

FixedPointResult solve(const CompiledOperator& op, std::span<const double> d, const SolveConfig& cfg = {});
FixedPointResult solve(const OperatorSpec& spec, const ParamSet& params, std::span<const double> d,
                       const SolveConfig& cfg = {});

// Fixed points for many inputs of one operator. Affine operators (no
// activation) are solved directly from (I - linear) x = bias and the result
// is accepted only if one further step moves it by at most the tolerance;
// otherwise each input is iterated. A failure names the sample index.
std::vector<Vector> solve_batch(const CompiledOperator& op, std::span<const Vector> inputs,
                                const SolveConfig& cfg = {});

struct PerturbationCheck {
    double lhs = 0.0;         // ||x*_1 - x*_2||
    double rhs = 0.0;         // L * ||psi_1 - psi_2||
    double psi_distance = 0.0;
};

// Both sides of the fixed-point perturbation inequality for two certified
// parameter sets of one spec, given the Lipschitz constant L = L_psi / (1 - L_x).
PerturbationCheck perturbation_check(const OperatorSpec& spec, const ParamSet& first, const ParamSet& second,
                                     std::span<const double> d, double lipschitz, const SolveConfig& cfg = {});

} // namespace deqcert
