#pragma once

// Fixed-point operator families T_psi(x; d), the final layer P_phi, parameter
// sampling under unit-norm block constraints, and contraction certificates.

#include "deqcert/numerics.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace deqcert {

enum class Family { contractive, mon, lgd };
enum class FinalLayer { identity, linear };

std::string to_string(Family family);
std::string to_string(FinalLayer layer);
Family parse_family(std::string_view name);
FinalLayer parse_final_layer(std::string_view name);

struct Activation {
    enum class Kind { relu, leaky_relu };
    Kind kind = Kind::relu;
    double slope = 0.01;

    double operator()(double v) const noexcept {
        if (v >= 0.0) return v;
        return kind == Kind::relu ? 0.0 : slope * v;
    }
};

std::string to_string(const Activation& activation);
Activation parse_activation(std::string_view name, double slope = 0.01);

struct OperatorSpec {
    Family family = Family::contractive;
    std::size_t state_dim = 0;   // k
    std::size_t input_dim = 0;   // m
    std::size_t output_dim = 0;  // n
    Activation activation;
    double monotonicity = 0.1;     // MON strong monotonicity parameter
    double spectral_target = 0.99; // contractive layer: cap on ||W||_2 after sampling
    std::size_t reg_rows = 0;      // LGD: rows of R, 0 means state_dim
    Matrix forward;                // LGD: fixed forward operator A, input_dim x state_dim
    FinalLayer final_layer = FinalLayer::identity;
    std::optional<double> step;    // MON/LGD step alpha; sampled rule when empty

    void validate() const;
    std::size_t regularizer_rows() const noexcept { return reg_rows == 0 ? state_dim : reg_rows; }
};

struct ContractiveWeights {
    Matrix W;  // k x k
    Matrix U;  // k x m
    Matrix b;  // k x 1
};

struct MonWeights {
    Matrix A;  // k x k
    Matrix B;  // k x k
    Matrix U;  // k x m
    Matrix b;  // k x 1
};

struct LgdWeights {
    Matrix R;  // n1 x k
};

struct NamedBlock {
    std::string name;
    const Matrix* value;
};

struct ParamSet {
    std::variant<ContractiveWeights, MonWeights, LgdWeights> psi;
    std::optional<Matrix> phi;  // n x k, present iff the final layer is linear
    double step = 0.0;          // alpha for MON and LGD, unused for the contractive layer

    // Filled by check_admissible / certify.
    bool admissible = false;
    std::optional<double> contraction;

    Family family() const noexcept;
    std::vector<NamedBlock> psi_blocks() const;
    double psi_norm() const;
    double phi_norm() const;
    double norm() const;  // sqrt(||psi||^2 + ||phi||^2)
    bool certified() const noexcept { return admissible && contraction.has_value(); }
};

// Euclidean distance between the stacked psi blocks of two parameter sets.
double psi_distance(const ParamSet& a, const ParamSet& b);
double phi_distance(const ParamSet& a, const ParamSet& b);

std::size_t psi_block_count(Family family);
std::size_t param_count(const OperatorSpec& spec);

// W = (1 - m) I - A^T A + B - B^T.
Matrix mon_build_W(const Matrix& A, const Matrix& B, double monotonicity);

// Shape checks plus the family's step/norm conditions; throws
// CertificationError. Returns a copy with `admissible` set.
ParamSet check_admissible(const OperatorSpec& spec, ParamSet params);
// check_admissible followed by contraction_factor; throws ContractionViolation
// when the factor is not below 1.
ParamSet certify(const OperatorSpec& spec, ParamSet params);

// Contractive layer: ||W||_2. MON: ||I - alpha(I - W)||_2. LGD: ||I - alpha(A^T A + R^T R)||_2,
// evaluated as max |1 - alpha lambda| over the extreme eigenvalues of A^T A + R^T R.
// Every norm comes from power iteration run to convergence.
double contraction_factor(const OperatorSpec& spec, const ParamSet& params);

// Power-iteration budget used for certification. The relative-change stop
// ends the iteration long before this in well-separated cases.
inline constexpr int certification_power_iters = 200000;
inline constexpr int certification_squarings = 16;
inline constexpr double contraction_ceiling = 1.0 - 1e-9;
inline constexpr double lgd_conditioning_floor = 1e-8;

Vector contractive_apply(const OperatorSpec& spec, const ParamSet& params, std::span<const double> x,
                         std::span<const double> d);
Vector mon_apply(const OperatorSpec& spec, const ParamSet& params, std::span<const double> x,
                 std::span<const double> d);
Vector lgd_apply(const OperatorSpec& spec, const ParamSet& params, std::span<const double> x,
                 std::span<const double> d);
// Dispatches on the family.
Vector apply(const OperatorSpec& spec, const ParamSet& params, std::span<const double> x,
             std::span<const double> d);
Vector final_apply(const OperatorSpec& spec, const ParamSet& params, std::span<const double> x);

// Unit Frobenius norm per psi block (and phi when linear); certified on return.
ParamSet sample_params(const OperatorSpec& spec, Rng& rng);

// Every family is x -> act(linear * x + input_map * d + offset), with the
// activation absent for LGD. Compiling once per parameter set keeps the
// solver loop to one matrix-vector product per iteration.
struct CompiledOperator {
    Matrix linear;
    Matrix input_map;
    Vector offset;
    std::optional<Activation> activation;
    double contraction = 0.0;

    std::size_t state_dim() const noexcept { return linear.rows(); }
    Vector bias(std::span<const double> d) const;
    void step(std::span<const double> x, std::span<const double> bias, std::span<double> out) const;
    Vector operator()(std::span<const double> x, std::span<const double> d) const;
};

// Requires certified params.
CompiledOperator compile(const OperatorSpec& spec, const ParamSet& params);

} // namespace deqcert
