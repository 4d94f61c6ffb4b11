#pragma once

// Dense linear algebra, power iteration, quadrature and a seedable random
// source shared by every other module. Everything here is pure given its
// inputs (including the Rng state).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace deqcert {

using Vector = std::vector<double>;

// Row-major dense matrix with finite entries.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    // Throws DimensionError if entries.size() != rows*cols and NumericalError
    // if any entry is not finite.
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

    static Matrix identity(std::size_t n);
    static Matrix column(std::span<const double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    Matrix transpose() const;
    double frobenius_norm() const;
    bool all_finite() const;

    Matrix& operator+=(const Matrix& other);
    Matrix& operator-=(const Matrix& other);
    Matrix& operator*=(double s);

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(double s, Matrix a);
Matrix operator*(const Matrix& a, const Matrix& b);

// y = M x
Vector multiply(const Matrix& m, std::span<const double> x);
void multiply_into(const Matrix& m, std::span<const double> x, std::span<double> out);
// y = M^T x
Vector multiply_transpose(const Matrix& m, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);
double norm1(std::span<const double> v);
double distance(std::span<const double> a, std::span<const double> b);
Vector subtract(std::span<const double> a, std::span<const double> b);

// ---------------------------------------------------------------------------
// Random source.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. Uniform and normal variates are derived from raw 64-bit draws by
// hand (53-bit mantissa fill and Box-Muller) because the standard
// distributions are implementation-defined.
// ---------------------------------------------------------------------------
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t position() const noexcept { return position_; }

    std::uint64_t next_u64();
    double uniform();                          // [0, 1)
    double uniform(double lo, double hi);
    double normal();

    // Independent stream keyed by `stream`; does not depend on how many
    // draws this generator has made.
    Rng child(std::uint64_t stream) const;

private:
    std::uint64_t seed_;
    std::uint64_t position_ = 0;
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

// ---------------------------------------------------------------------------
// Spectral norm by power iteration on M^T M.
// ---------------------------------------------------------------------------
struct PowerOptions {
    int max_iters = 100;
    double rel_tol = 1e-12;       // early stop on relative change of the estimate
    bool keep_history = false;
    // Repeated squarings of M^T M applied to the random start vector. Each
    // squaring doubles the exponent of the eigenvalue ratio the iteration
    // starts from, which matters when the top singular values are close.
    int squarings = 0;
};

struct PowerResult {
    double sigma_max = 0.0;       // lower bound on ||M||_2
    double residual = 0.0;        // last relative change of the estimate
    int iterations = 0;
    std::vector<double> history;  // Rayleigh quotients of M^T M, if requested
};

PowerResult power_method(const Matrix& m, Rng& rng, const PowerOptions& options = {});
PowerResult power_method(const Matrix& m, int iters, Rng& rng);

// Lower-triangular L with L L^T = A, or nullopt if A is not positive definite.
std::optional<Matrix> cholesky(const Matrix& a);
// Inverse of a symmetric positive definite matrix; NumericalError otherwise.
Matrix spd_inverse(const Matrix& a);

// LU factorization with partial pivoting of a square matrix.
class LuDecomposition {
public:
    // Throws NumericalError when a pivot vanishes.
    explicit LuDecomposition(const Matrix& a);
    Vector solve(std::span<const double> b) const;

private:
    Matrix lu_;
    std::vector<std::size_t> perm_;
};

// ---------------------------------------------------------------------------
// Composite 16-point Gauss-Legendre quadrature with panel doubling.
//
// With `singular_at_zero` and lower == 0 the slice [0, eps], eps = upper*1e-6,
// is not sampled. Its contribution comes from `slice_bound(eps)` when given,
// otherwise from eps*f(eps). Panels on [eps, upper] are graded geometrically.
// ---------------------------------------------------------------------------
struct QuadratureSpec {
    double lower = 0.0;
    double upper = 1.0;
    int panels = 8;
    bool singular_at_zero = false;
    double rel_tol = 1e-8;
    int max_doublings = 14;
    std::function<double(double)> slice_bound;
};

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;  // |I_2n - I_n| at the accepted refinement
    int panels = 0;
    double slice = 0.0;           // contribution of [0, eps] (0 unless singular)
};

QuadratureResult integrate(const std::function<double(double)>& f, const QuadratureSpec& spec);

// 16-point Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
const GaussRule& gauss_legendre_16();

// Standard normal entries rescaled to the given Frobenius norm.
Matrix sample_on_norm_sphere(std::size_t rows, std::size_t cols, double target_norm, Rng& rng);

} // namespace deqcert
