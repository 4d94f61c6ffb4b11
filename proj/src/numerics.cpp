#include "deqcert/numerics.hpp"

#include "deqcert/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace deqcert {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        std::ostringstream msg;
        msg << op << ": shape mismatch " << a.rows() << "x" << a.cols() << " vs " << b.rows() << "x"
            << b.cols();
        throw DimensionError(msg.str());
    }
}

} // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows_ * cols_) {
        std::ostringstream msg;
        msg << "Matrix: " << data_.size() << " entries given for shape " << rows_ << "x" << cols_;
        throw DimensionError(msg.str());
    }
    if (!all_finite()) throw NumericalError("Matrix: non-finite entry");
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::column(std::span<const double> values) {
    return Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

double Matrix::frobenius_norm() const { return norm2(data_); }

bool Matrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix& Matrix::operator+=(const Matrix& other) {
    require_same_shape(*this, other, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
    require_same_shape(*this, other, "operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Matrix& Matrix::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        std::ostringstream msg;
        msg << "matrix product: " << a.rows() << "x" << a.cols() << " times " << b.rows() << "x" << b.cols();
        throw DimensionError(msg.str());
    }
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    }
    return c;
}

void multiply_into(const Matrix& m, std::span<const double> x, std::span<double> out) {
    if (x.size() != m.cols() || out.size() != m.rows())
        throw DimensionError("multiply: vector length does not match matrix shape");
    const std::size_t cols = m.cols();
    const double* row = m.data().data();
    for (std::size_t i = 0; i < m.rows(); ++i, row += cols) {
        double acc = 0.0;
        for (std::size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
        out[i] = acc;
    }
}

Vector multiply(const Matrix& m, std::span<const double> x) {
    Vector out(m.rows());
    multiply_into(m, x, out);
    return out;
}

Vector multiply_transpose(const Matrix& m, std::span<const double> x) {
    if (x.size() != m.rows()) throw DimensionError("multiply_transpose: vector length does not match");
    Vector out(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double xi = x[i];
        for (std::size_t j = 0; j < m.cols(); ++j) out[j] += m(i, j) * xi;
    }
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm2(std::span<const double> v) {
    // Scaled accumulation so that very large or tiny entries do not overflow.
    double scale = 0.0;
    for (double x : v) scale = std::max(scale, std::abs(x));
    if (scale == 0.0 || !std::isfinite(scale)) return scale;
    double acc = 0.0;
    for (double x : v) {
        const double y = x / scale;
        acc += y * y;
    }
    return scale * std::sqrt(acc);
}

double norm1(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += std::abs(x);
    return acc;
}

double distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("distance: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

Vector subtract(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("subtract: length mismatch");
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

// ---------------------------------------------------------------------------
// Rng
// ---------------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = splitmix64(master);
    for (std::uint64_t p : path) s = splitmix64(s ^ splitmix64(p + 0x632be59bd9b4e019ULL));
    return s;
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

std::uint64_t Rng::next_u64() {
    ++position_;
    return engine_();
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
    if (spare_) {
        const double z = *spare_;
        spare_.reset();
        return z;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    return radius * std::cos(angle);
}

Rng Rng::child(std::uint64_t stream) const { return Rng(derive_seed(seed_, {stream})); }

// ---------------------------------------------------------------------------
// Power iteration
// ---------------------------------------------------------------------------

PowerResult power_method(const Matrix& m, Rng& rng, const PowerOptions& options) {
    if (options.max_iters < 1) throw std::invalid_argument("power_method: iters must be >= 1");
    if (!m.all_finite()) throw NumericalError("power_method: non-finite matrix entry");

    PowerResult result;
    if (m.empty() || m.frobenius_norm() == 0.0) return result;

    Vector v(m.cols());
    double nv = 0.0;
    while (nv == 0.0) {
        for (double& x : v) x = rng.normal();
        nv = norm2(v);
    }
    for (double& x : v) x /= nv;

    if (options.squarings > 0) {
        Matrix g = m.transpose() * m;
        for (int s = 0; s < options.squarings; ++s) {
            g = g * g;
            const double scale = g.frobenius_norm();
            if (!(scale > 0.0) || !std::isfinite(scale)) break;
            g *= 1.0 / scale;
        }
        Vector w = multiply(g, v);
        const double nw = norm2(w);
        if (nw > 0.0 && std::isfinite(nw))
            for (std::size_t i = 0; i < v.size(); ++i) v[i] = w[i] / nw;
    }

    Vector u(m.rows());
    double previous = 0.0;
    for (int it = 0; it < options.max_iters; ++it) {
        multiply_into(m, v, u);
        const double sigma = norm2(u);  // sqrt of the Rayleigh quotient v^T M^T M v
        result.iterations = it + 1;
        if (options.keep_history) result.history.push_back(sigma * sigma);
        if (sigma == 0.0) {
            result.sigma_max = 0.0;
            result.residual = 0.0;
            return result;
        }
        result.residual = it == 0 ? 1.0 : std::abs(sigma - previous) / sigma;
        result.sigma_max = sigma;
        if (it > 0 && result.residual < options.rel_tol) break;
        previous = sigma;

        Vector w = multiply_transpose(m, u);
        const double nw = norm2(w);
        if (nw == 0.0) break;
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = w[i] / nw;
    }
    return result;
}

std::optional<Matrix> cholesky(const Matrix& a) {
    if (a.rows() != a.cols()) throw DimensionError("cholesky: matrix must be square");
    const std::size_t n = a.rows();
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double diag = a(j, j);
        for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
        if (!(diag > 0.0)) return std::nullopt;
        l(j, j) = std::sqrt(diag);
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = a(i, j);
            for (std::size_t k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
            l(i, j) = v / l(j, j);
        }
    }
    return l;
}

Matrix spd_inverse(const Matrix& a) {
    const auto l = cholesky(a);
    if (!l) throw NumericalError("spd_inverse: matrix is not positive definite");
    const std::size_t n = a.rows();
    Matrix inv(n, n);
    Vector e(n), y(n);
    for (std::size_t c = 0; c < n; ++c) {
        std::fill(e.begin(), e.end(), 0.0);
        e[c] = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            double v = e[i];
            for (std::size_t k = 0; k < i; ++k) v -= (*l)(i, k) * y[k];
            y[i] = v / (*l)(i, i);
        }
        for (std::size_t i = n; i-- > 0;) {
            double v = y[i];
            for (std::size_t k = i + 1; k < n; ++k) v -= (*l)(k, i) * inv(k, c);
            inv(i, c) = v / (*l)(i, i);
        }
    }
    return inv;
}

LuDecomposition::LuDecomposition(const Matrix& a) : lu_(a), perm_(a.rows()) {
    if (a.rows() != a.cols()) throw DimensionError("lu: matrix must be square");
    const std::size_t n = a.rows();
    for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
    const double scale = std::max(a.frobenius_norm(), 1e-300);
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t pivot = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(lu_(r, c)) > std::abs(lu_(pivot, c))) pivot = r;
        if (std::abs(lu_(pivot, c)) <= 1e-14 * scale) throw NumericalError("lu: matrix is singular to working precision");
        if (pivot != c) {
            for (std::size_t j = 0; j < n; ++j) std::swap(lu_(c, j), lu_(pivot, j));
            std::swap(perm_[c], perm_[pivot]);
        }
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = lu_(r, c) / lu_(c, c);
            lu_(r, c) = f;
            for (std::size_t j = c + 1; j < n; ++j) lu_(r, j) -= f * lu_(c, j);
        }
    }
}

Vector LuDecomposition::solve(std::span<const double> b) const {
    const std::size_t n = lu_.rows();
    if (b.size() != n) throw DimensionError("lu: right-hand side has the wrong length");
    Vector x(n);
    for (std::size_t i = 0; i < n; ++i) {
        double v = b[perm_[i]];
        for (std::size_t k = 0; k < i; ++k) v -= lu_(i, k) * x[k];
        x[i] = v;
    }
    for (std::size_t i = n; i-- > 0;) {
        double v = x[i];
        for (std::size_t k = i + 1; k < n; ++k) v -= lu_(i, k) * x[k];
        x[i] = v / lu_(i, i);
    }
    return x;
}

PowerResult power_method(const Matrix& m, int iters, Rng& rng) {
    PowerOptions options;
    options.max_iters = iters;
    return power_method(m, rng, options);
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

const GaussRule& gauss_legendre_16() {
    static const GaussRule rule = [] {
        constexpr int n = 16;
        GaussRule r;
        r.nodes.resize(n);
        r.weights.resize(n);
        for (int i = 0; i < n; ++i) {
            double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int newton = 0; newton < 100; ++newton) {
                double p0 = 1.0;
                double p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            r.nodes[i] = x;
            r.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        return r;
    }();
    return rule;
}

namespace {

double checked_eval(const std::function<double(double)>& f, double x) {
    const double v = f(x);
    if (!std::isfinite(v)) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "integrate: non-finite integrand value at r = " << x;
        throw NumericalError(msg.str());
    }
    return v;
}

double composite(const std::function<double(double)>& f, double a, double b, int panels, bool graded) {
    const GaussRule& rule = gauss_legendre_16();
    double total = 0.0;
    const double ratio = graded ? b / a : 0.0;
    for (int p = 0; p < panels; ++p) {
        double lo;
        double hi;
        if (graded) {
            lo = a * std::pow(ratio, static_cast<double>(p) / panels);
            hi = p + 1 == panels ? b : a * std::pow(ratio, static_cast<double>(p + 1) / panels);
        } else {
            lo = a + (b - a) * p / panels;
            hi = p + 1 == panels ? b : a + (b - a) * (p + 1) / panels;
        }
        const double half = 0.5 * (hi - lo);
        const double mid = 0.5 * (hi + lo);
        double acc = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i)
            acc += rule.weights[i] * checked_eval(f, mid + half * rule.nodes[i]);
        total += half * acc;
    }
    return total;
}

} // namespace

QuadratureResult integrate(const std::function<double(double)>& f, const QuadratureSpec& spec) {
    if (!(spec.lower >= 0.0) || !(spec.upper > spec.lower) || spec.panels < 1)
        throw std::invalid_argument("integrate: need 0 <= lower < upper and panels >= 1");

    QuadratureResult result;
    double a = spec.lower;
    const bool graded = spec.singular_at_zero && spec.lower == 0.0;
    if (graded) {
        a = spec.upper * 1e-6;
        result.slice = spec.slice_bound ? spec.slice_bound(a) : a * checked_eval(f, a);
        if (!std::isfinite(result.slice)) throw NumericalError("integrate: non-finite singular slice bound");
    }

    int panels = spec.panels;
    double coarse = composite(f, a, spec.upper, panels, graded);
    for (int d = 0; d <= spec.max_doublings; ++d) {
        const double fine = composite(f, a, spec.upper, 2 * panels, graded);
        const double err = std::abs(fine - coarse);
        if (err <= spec.rel_tol * std::abs(fine)) {
            result.value = fine + result.slice;
            result.error_estimate = err;
            result.panels = 2 * panels;
            return result;
        }
        coarse = fine;
        panels *= 2;
    }
    throw NumericalError("integrate: panel doubling did not reach the requested tolerance");
}

Matrix sample_on_norm_sphere(std::size_t rows, std::size_t cols, double target_norm, Rng& rng) {
    if (!(target_norm > 0.0)) throw std::invalid_argument("sample_on_norm_sphere: target_norm must be > 0");
    Matrix m(rows, cols);
    double n = 0.0;
    while (n == 0.0) {
        for (double& v : m.data()) v = rng.normal();
        n = m.frobenius_norm();
    }
    for (double& v : m.data()) v = v / n * target_norm;
    return m;
}

} // namespace deqcert
