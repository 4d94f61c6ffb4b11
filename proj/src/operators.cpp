#include "deqcert/operators.hpp"

#include "deqcert/errors.hpp"

#include <cmath>
#include <sstream>

namespace deqcert {

std::string to_string(Family family) {
    switch (family) {
    case Family::contractive: return "contractive";
    case Family::mon: return "mon";
    case Family::lgd: return "lgd";
    }
    return "unknown";
}

std::string to_string(FinalLayer layer) { return layer == FinalLayer::identity ? "identity" : "linear"; }

Family parse_family(std::string_view name) {
    if (name == "contractive") return Family::contractive;
    if (name == "mon") return Family::mon;
    if (name == "lgd") return Family::lgd;
    throw ConfigError("unknown operator family '" + std::string(name) + "' (expected contractive|mon|lgd)");
}

FinalLayer parse_final_layer(std::string_view name) {
    if (name == "identity") return FinalLayer::identity;
    if (name == "linear") return FinalLayer::linear;
    throw ConfigError("unknown final layer '" + std::string(name) + "' (expected identity|linear)");
}

std::string to_string(const Activation& activation) {
    return activation.kind == Activation::Kind::relu ? "relu" : "leaky_relu";
}

Activation parse_activation(std::string_view name, double slope) {
    Activation a;
    a.slope = slope;
    if (name == "relu") {
        a.kind = Activation::Kind::relu;
    } else if (name == "leaky_relu") {
        a.kind = Activation::Kind::leaky_relu;
    } else {
        throw ConfigError("unknown activation '" + std::string(name) + "' (expected relu|leaky_relu)");
    }
    return a;
}

void OperatorSpec::validate() const {
    if (state_dim == 0 || input_dim == 0 || output_dim == 0)
        throw DimensionError("OperatorSpec: dimensions must be positive");
    if (final_layer == FinalLayer::identity && state_dim != output_dim)
        throw DimensionError("OperatorSpec: identity final layer requires state_dim == output_dim");
    if (activation.kind == Activation::Kind::leaky_relu && !(activation.slope >= 0.0 && activation.slope <= 1.0))
        throw ConfigError("OperatorSpec: leaky ReLU slope must lie in [0, 1] to stay 1-Lipschitz");
    if (family == Family::mon && !(monotonicity > 0.0 && monotonicity <= 1.0))
        throw ConfigError("OperatorSpec: MON monotonicity must lie in (0, 1]");
    if (family == Family::contractive && !(spectral_target > 0.0 && spectral_target < 1.0))
        throw ConfigError("OperatorSpec: spectral target must lie in (0, 1)");
    if (family == Family::lgd && (forward.rows() != input_dim || forward.cols() != state_dim)) {
        std::ostringstream msg;
        msg << "OperatorSpec: LGD forward operator must be " << input_dim << "x" << state_dim << ", got "
            << forward.rows() << "x" << forward.cols();
        throw DimensionError(msg.str());
    }
}

// ---------------------------------------------------------------------------
// ParamSet
// ---------------------------------------------------------------------------

Family ParamSet::family() const noexcept {
    if (std::holds_alternative<ContractiveWeights>(psi)) return Family::contractive;
    if (std::holds_alternative<MonWeights>(psi)) return Family::mon;
    return Family::lgd;
}

std::vector<NamedBlock> ParamSet::psi_blocks() const {
    if (const auto* c = std::get_if<ContractiveWeights>(&psi)) return {{"W", &c->W}, {"U", &c->U}, {"b", &c->b}};
    if (const auto* m = std::get_if<MonWeights>(&psi))
        return {{"A", &m->A}, {"B", &m->B}, {"U", &m->U}, {"b", &m->b}};
    return {{"R", &std::get<LgdWeights>(psi).R}};
}

double ParamSet::psi_norm() const {
    double acc = 0.0;
    for (const auto& block : psi_blocks()) {
        const double n = block.value->frobenius_norm();
        acc += n * n;
    }
    return std::sqrt(acc);
}

double ParamSet::phi_norm() const { return phi ? phi->frobenius_norm() : 0.0; }

double ParamSet::norm() const { return std::hypot(psi_norm(), phi_norm()); }

double psi_distance(const ParamSet& a, const ParamSet& b) {
    if (a.family() != b.family()) throw DimensionError("psi_distance: parameter sets of different families");
    const auto ba = a.psi_blocks();
    const auto bb = b.psi_blocks();
    double acc = 0.0;
    for (std::size_t i = 0; i < ba.size(); ++i) {
        const double d = distance(ba[i].value->data(), bb[i].value->data());
        acc += d * d;
    }
    return std::sqrt(acc);
}

double phi_distance(const ParamSet& a, const ParamSet& b) {
    if (a.phi.has_value() != b.phi.has_value()) throw DimensionError("phi_distance: final layers differ");
    return a.phi ? distance(a.phi->data(), b.phi->data()) : 0.0;
}

std::size_t psi_block_count(Family family) {
    switch (family) {
    case Family::contractive: return 3;
    case Family::mon: return 4;
    case Family::lgd: return 1;
    }
    return 0;
}

std::size_t param_count(const OperatorSpec& spec) {
    const std::size_t k = spec.state_dim;
    const std::size_t m = spec.input_dim;
    std::size_t p = 0;
    switch (spec.family) {
    case Family::contractive: p = k * k + k * m + k; break;
    case Family::mon: p = 2 * k * k + k * m + k; break;
    case Family::lgd: p = spec.regularizer_rows() * k; break;
    }
    if (spec.final_layer == FinalLayer::linear) p += spec.output_dim * k;
    return p;
}

Matrix mon_build_W(const Matrix& A, const Matrix& B, double monotonicity) {
    if (A.rows() != A.cols() || B.rows() != B.cols() || A.rows() != B.rows())
        throw DimensionError("mon_build_W: A and B must be square and of equal size");
    const std::size_t k = A.rows();
    Matrix W = A.transpose() * A;
    W *= -1.0;
    for (std::size_t i = 0; i < k; ++i) {
        W(i, i) += 1.0 - monotonicity;
        for (std::size_t j = 0; j < k; ++j) W(i, j) += B(i, j) - B(j, i);
    }
    return W;
}

// ---------------------------------------------------------------------------
// Certification
// ---------------------------------------------------------------------------

namespace {

constexpr std::uint64_t certification_seed = 0x6365727469667931ULL;

double spectral_norm(const Matrix& m) {
    Rng rng(certification_seed);
    PowerOptions options;
    options.max_iters = certification_power_iters;
    options.rel_tol = 1e-13;
    options.squarings = certification_squarings;
    return power_method(m, rng, options).sigma_max;
}

void require_shape(const Matrix& m, std::size_t rows, std::size_t cols, const char* name) {
    if (m.rows() != rows || m.cols() != cols) {
        std::ostringstream msg;
        msg << "block " << name << " must be " << rows << "x" << cols << ", got " << m.rows() << "x" << m.cols();
        throw DimensionError(msg.str());
    }
}

Matrix lgd_hessian(const OperatorSpec& spec, const Matrix& R) {
    return spec.forward.transpose() * spec.forward + R.transpose() * R;
}

Matrix identity_minus(double alpha, const Matrix& m) {
    Matrix out = -alpha * m;
    for (std::size_t i = 0; i < out.rows(); ++i) out(i, i) += 1.0;
    return out;
}

// I - alpha (I - W) = (1 - alpha) I + alpha W
Matrix mon_iteration_matrix(const Matrix& W, double alpha) {
    Matrix F = alpha * W;
    for (std::size_t i = 0; i < F.rows(); ++i) F(i, i) += 1.0 - alpha;
    return F;
}

Matrix identity_minus_w(const Matrix& W) {
    Matrix M = -1.0 * W;
    for (std::size_t i = 0; i < M.rows(); ++i) M(i, i) += 1.0;
    return M;
}

void check_shapes(const OperatorSpec& spec, const ParamSet& params) {
    spec.validate();
    if (params.family() != spec.family)
        throw DimensionError("parameter set family " + to_string(params.family()) + " does not match spec family " +
                             to_string(spec.family));
    const std::size_t k = spec.state_dim;
    const std::size_t m = spec.input_dim;
    std::visit(
        [&](const auto& w) {
            using T = std::decay_t<decltype(w)>;
            if constexpr (std::is_same_v<T, ContractiveWeights>) {
                require_shape(w.W, k, k, "W");
                require_shape(w.U, k, m, "U");
                require_shape(w.b, k, 1, "b");
            } else if constexpr (std::is_same_v<T, MonWeights>) {
                require_shape(w.A, k, k, "A");
                require_shape(w.B, k, k, "B");
                require_shape(w.U, k, m, "U");
                require_shape(w.b, k, 1, "b");
            } else {
                require_shape(w.R, spec.regularizer_rows(), k, "R");
            }
        },
        params.psi);
    if (spec.final_layer == FinalLayer::linear) {
        if (!params.phi) throw DimensionError("linear final layer requires a phi block");
        require_shape(*params.phi, spec.output_dim, k, "phi");
    } else if (params.phi) {
        throw DimensionError("identity final layer takes no phi block");
    }
}

void require_admissible(const ParamSet& params) {
    if (!params.admissible)
        throw CertificationError("parameter set has not been certified; call check_admissible or certify");
}

} // namespace

ParamSet check_admissible(const OperatorSpec& spec, ParamSet params) {
    check_shapes(spec, params);
    switch (spec.family) {
    case Family::contractive: {
        const double w = spectral_norm(std::get<ContractiveWeights>(params.psi).W);
        if (!(w < 1.0)) {
            std::ostringstream msg;
            msg << "contractive layer: ||W||_2 = " << w << " is not below 1";
            throw CertificationError(msg.str());
        }
        break;
    }
    case Family::mon: {
        const auto& mw = std::get<MonWeights>(params.psi);
        const Matrix W = mon_build_W(mw.A, mw.B, spec.monotonicity);
        const double n = spectral_norm(identity_minus_w(W));
        const double upper = n > 0.0 ? 2.0 * spec.monotonicity / (n * n) : INFINITY;
        if (!(params.step >= 0.0 && params.step <= upper)) {
            std::ostringstream msg;
            msg << "MON: step " << params.step << " outside the admissible interval [0, " << upper << "]";
            throw CertificationError(msg.str());
        }
        break;
    }
    case Family::lgd: {
        const Matrix H = lgd_hessian(spec, std::get<LgdWeights>(params.psi).R);
        const double lmax = spectral_norm(H);
        if (!(lmax > 0.0)) throw CertificationError("LGD: A^T A + R^T R vanishes");
        if (!(params.step > 0.0 && params.step < 2.0 / lmax)) {
            std::ostringstream msg;
            msg << "LGD: step " << params.step << " outside the open interval (0, " << 2.0 / lmax << ")";
            throw CertificationError(msg.str());
        }
        // Positive definiteness of H - floor * lambda_max I, decided exactly by Cholesky.
        if (!cholesky(H - (lgd_conditioning_floor * lmax) * Matrix::identity(H.rows()))) {
            std::ostringstream msg;
            msg << "LGD: lambda_min(A^T A + R^T R) is below " << lgd_conditioning_floor
                << " * lambda_max = " << lgd_conditioning_floor * lmax;
            throw CertificationError(msg.str());
        }
        break;
    }
    }
    params.admissible = true;
    return params;
}

double contraction_factor(const OperatorSpec& spec, const ParamSet& params) {
    double factor = 0.0;
    switch (spec.family) {
    case Family::contractive:
        factor = spectral_norm(std::get<ContractiveWeights>(params.psi).W);
        break;
    case Family::mon: {
        const auto& mw = std::get<MonWeights>(params.psi);
        factor = spectral_norm(mon_iteration_matrix(mon_build_W(mw.A, mw.B, spec.monotonicity), params.step));
        break;
    }
    case Family::lgd: {
        // I - alpha H is symmetric, so its norm is attained at an extreme eigenvalue of H. The
        // smallest one comes from power iteration on H^{-1}, whose leading gap is far wider
        // than that of I - alpha H.
        const Matrix H = lgd_hessian(spec, std::get<LgdWeights>(params.psi).R);
        const double lmax = spectral_norm(H);
        const double lmin = 1.0 / spectral_norm(spd_inverse(H));
        factor = std::max(std::abs(1.0 - params.step * lmax), std::abs(1.0 - params.step * lmin));
        break;
    }
    }
    if (!(factor < contraction_ceiling)) {
        std::ostringstream msg;
        msg << to_string(spec.family) << ": contraction factor " << factor << " is not below 1";
        throw ContractionViolation(msg.str(), factor);
    }
    return factor;
}

ParamSet certify(const OperatorSpec& spec, ParamSet params) {
    params = check_admissible(spec, std::move(params));
    params.contraction = contraction_factor(spec, params);
    return params;
}

// ---------------------------------------------------------------------------
// Application
// ---------------------------------------------------------------------------

namespace {

void require_lengths(const OperatorSpec& spec, std::span<const double> x, std::span<const double> d) {
    if (x.size() != spec.state_dim || d.size() != spec.input_dim) {
        std::ostringstream msg;
        msg << "operator input lengths x=" << x.size() << ", d=" << d.size() << " do not match k=" << spec.state_dim
            << ", m=" << spec.input_dim;
        throw DimensionError(msg.str());
    }
}

} // namespace

Vector contractive_apply(const OperatorSpec& spec, const ParamSet& params, std::span<const double> x,
                         std::span<const double> d) {
    require_lengths(spec, x, d);
    const auto* w = std::get_if<ContractiveWeights>(&params.psi);
    if (!w) throw DimensionError("contractive_apply: parameter set is not a contractive layer");
    require_admissible(params);
    Vector wx = multiply(w->W, x);
    const Vector ud = multiply(w->U, d);
    for (std::size_t i = 0; i < wx.size(); ++i) wx[i] = spec.activation(wx[i] + ud[i] + w->b(i, 0));
    return wx;
}

Vector mon_apply(const OperatorSpec& spec, const ParamSet& params, std::span<const double> x,
                 std::span<const double> d) {
    require_lengths(spec, x, d);
    const auto* w = std::get_if<MonWeights>(&params.psi);
    if (!w) throw DimensionError("mon_apply: parameter set is not a MON");
    require_admissible(params);
    const double alpha = params.step;
    const Vector wx = multiply(mon_build_W(w->A, w->B, spec.monotonicity), x);
    const Vector ud = multiply(w->U, d);
    Vector out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double affine = x[i] - alpha * (x[i] - wx[i]) + alpha * (ud[i] + w->b(i, 0));
        out[i] = spec.activation(affine);
    }
    return out;
}

Vector lgd_apply(const OperatorSpec& spec, const ParamSet& params, std::span<const double> x,
                 std::span<const double> d) {
    require_lengths(spec, x, d);
    const auto* w = std::get_if<LgdWeights>(&params.psi);
    if (!w) throw DimensionError("lgd_apply: parameter set is not an LGD regulariser");
    require_admissible(params);
    Vector residual = multiply(spec.forward, x);
    for (std::size_t i = 0; i < residual.size(); ++i) residual[i] -= d[i];
    const Vector data_grad = multiply_transpose(spec.forward, residual);
    const Vector reg_grad = multiply_transpose(w->R, multiply(w->R, x));
    Vector out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - params.step * (data_grad[i] + reg_grad[i]);
    return out;
}

Vector apply(const OperatorSpec& spec, const ParamSet& params, std::span<const double> x,
             std::span<const double> d) {
    switch (spec.family) {
    case Family::contractive: return contractive_apply(spec, params, x, d);
    case Family::mon: return mon_apply(spec, params, x, d);
    case Family::lgd: return lgd_apply(spec, params, x, d);
    }
    throw DimensionError("apply: unknown family");
}

Vector final_apply(const OperatorSpec& spec, const ParamSet& params, std::span<const double> x) {
    if (x.size() != spec.state_dim) throw DimensionError("final_apply: state length does not match k");
    if (spec.final_layer == FinalLayer::identity) {
        if (spec.state_dim != spec.output_dim) throw DimensionError("final_apply: identity layer requires k == n");
        return Vector(x.begin(), x.end());
    }
    if (!params.phi) throw DimensionError("final_apply: linear final layer without phi");
    return multiply(*params.phi, x);
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

ParamSet sample_params(const OperatorSpec& spec, Rng& rng) {
    spec.validate();
    const std::size_t k = spec.state_dim;
    const std::size_t m = spec.input_dim;
    ParamSet params;
    switch (spec.family) {
    case Family::contractive: {
        ContractiveWeights w{sample_on_norm_sphere(k, k, 1.0, rng), sample_on_norm_sphere(k, m, 1.0, rng),
                             sample_on_norm_sphere(k, 1, 1.0, rng)};
        const double sigma = spectral_norm(w.W);
        if (sigma > spec.spectral_target) w.W *= spec.spectral_target / sigma;
        params.psi = std::move(w);
        break;
    }
    case Family::mon: {
        MonWeights w{sample_on_norm_sphere(k, k, 1.0, rng), sample_on_norm_sphere(k, k, 1.0, rng),
                     sample_on_norm_sphere(k, m, 1.0, rng), sample_on_norm_sphere(k, 1, 1.0, rng)};
        if (spec.step) {
            params.step = *spec.step;
        } else {
            const double n = spectral_norm(identity_minus_w(mon_build_W(w.A, w.B, spec.monotonicity)));
            params.step = spec.monotonicity / (n * n);
        }
        params.psi = std::move(w);
        break;
    }
    case Family::lgd: {
        LgdWeights w{sample_on_norm_sphere(spec.regularizer_rows(), k, 1.0, rng)};
        params.step = spec.step ? *spec.step : 1.0 / spectral_norm(lgd_hessian(spec, w.R));
        params.psi = std::move(w);
        break;
    }
    }
    if (spec.final_layer == FinalLayer::linear) params.phi = sample_on_norm_sphere(spec.output_dim, k, 1.0, rng);
    return certify(spec, std::move(params));
}

// ---------------------------------------------------------------------------
// Compiled form
// ---------------------------------------------------------------------------

Vector CompiledOperator::bias(std::span<const double> d) const {
    Vector out = multiply(input_map, d);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += offset[i];
    return out;
}

void CompiledOperator::step(std::span<const double> x, std::span<const double> bias, std::span<double> out) const {
    multiply_into(linear, x, out);
    if (activation) {
        const Activation act = *activation;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = act(out[i] + bias[i]);
    } else {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += bias[i];
    }
}

Vector CompiledOperator::operator()(std::span<const double> x, std::span<const double> d) const {
    const Vector b = bias(d);
    Vector out(state_dim());
    step(x, b, out);
    return out;
}

CompiledOperator compile(const OperatorSpec& spec, const ParamSet& params) {
    if (!params.certified()) throw CertificationError("compile: parameter set is not certified");
    check_shapes(spec, params);
    CompiledOperator op;
    op.contraction = *params.contraction;
    const std::size_t k = spec.state_dim;
    switch (spec.family) {
    case Family::contractive: {
        const auto& w = std::get<ContractiveWeights>(params.psi);
        op.linear = w.W;
        op.input_map = w.U;
        op.offset.assign(w.b.data().begin(), w.b.data().end());
        op.activation = spec.activation;
        break;
    }
    case Family::mon: {
        const auto& w = std::get<MonWeights>(params.psi);
        op.linear = mon_iteration_matrix(mon_build_W(w.A, w.B, spec.monotonicity), params.step);
        op.input_map = params.step * w.U;
        op.offset.resize(k);
        for (std::size_t i = 0; i < k; ++i) op.offset[i] = params.step * w.b(i, 0);
        op.activation = spec.activation;
        break;
    }
    case Family::lgd: {
        op.linear = identity_minus(params.step, lgd_hessian(spec, std::get<LgdWeights>(params.psi).R));
        op.input_map = params.step * spec.forward.transpose();
        op.offset.assign(k, 0.0);
        break;
    }
    }
    return op;
}

} // namespace deqcert
