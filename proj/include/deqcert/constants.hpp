#pragma once

// Sampled estimates of the norm bounds that enter the generalization bound.

#include "deqcert/data.hpp"
#include "deqcert/fixed_point.hpp"
#include "deqcert/losses.hpp"
#include "deqcert/operators.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace deqcert {

inline constexpr double safety_factor = 1.05;
inline constexpr std::size_t default_theta_samples = 100;

enum class Provenance { estimated, analytic, declared };
std::string to_string(Provenance provenance);
Provenance parse_provenance(std::string_view name);

struct ConstantsReport {
    Family family = Family::contractive;
    FinalLayer final_layer = FinalLayer::identity;
    LossKind loss = LossKind::l1;
    std::size_t k = 0;
    std::size_t m = 0;
    std::size_t n = 0;
    std::size_t param_count = 0;  // p of the architecture

    double c_d = 0.0;
    double c_out = 0.0;
    double c_out_T = 0.0;
    double c_ell = 0.0;
    double l_x = 0.0;           // largest contraction factor over the sampled thetas
    double alpha = 0.0;         // largest step over the sampled thetas (MON, LGD)
    double c_params_phi = 0.0;
    double c_params_psi = 0.0;
    double c_params = 0.0;      // sqrt(c_params_phi^2 + c_params_psi^2)
    double l_ell = 0.0;
    double safety = safety_factor;

    std::size_t theta_samples = 0;
    std::size_t data_samples = 0;
    std::uint64_t seed = 0;
    std::map<std::string, Provenance> provenance;

    // Throws ConfigError when an invariant fails.
    void validate() const;
};

struct EstimateOptions {
    std::size_t n_theta = default_theta_samples;
    std::uint64_t seed = 0;
    std::size_t threads = 0;
    SolveConfig solve;
};

// Raw maxima over (theta, d), before the safety factor.
struct FixedPointMaxima {
    double c_out_T = 0.0;
    double c_out = 0.0;
    double c_ell = 0.0;   // 0 unless a loss was given
    double l_x = 0.0;
    double alpha = 0.0;
};

// theta_i is drawn by sample_params from the stream derive_seed(seed, {theta_stream, i}).
inline constexpr std::uint64_t theta_stream = 0x7468657461;
std::vector<ParamSet> sample_thetas(const OperatorSpec& spec, std::size_t count, std::uint64_t seed,
                                    std::size_t threads = 0);

double estimate_c_d(std::span<const Vector> inputs);

// Solves for every (theta, d). A solver failure is rethrown as NonConvergence
// naming the theta and sample indices.
FixedPointMaxima scan_fixed_points(const OperatorSpec& spec, std::span<const ParamSet> thetas, const Dataset& data,
                                   const std::optional<LossSpec>& loss, std::size_t threads = 0,
                                   const SolveConfig& solve = {});

struct OutputBounds {
    double c_out = 0.0;
    double c_out_T = 0.0;
};

// Sampled suprema times the safety factor.
OutputBounds estimate_c_out(const OperatorSpec& spec, const Dataset& data, const EstimateOptions& options);
double estimate_c_ell(const LossSpec& loss, const OperatorSpec& spec, const Dataset& data,
                      const EstimateOptions& options);
double estimate_l_x(const OperatorSpec& spec, const ParamSet& params);

// sqrt(#psi blocks) and, for a linear final layer, 1 for phi.
double declared_c_params_psi(Family family);
double declared_c_params_phi(FinalLayer layer);

ConstantsReport estimate_constants(const OperatorSpec& spec, std::span<const ParamSet> thetas, const Dataset& data,
                                   const LossSpec& loss, const EstimateOptions& options);
ConstantsReport estimate_constants(const OperatorSpec& spec, const Dataset& data, const LossSpec& loss,
                                   const EstimateOptions& options);

} // namespace deqcert
