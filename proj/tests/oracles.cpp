#include "oracles.hpp"

#include <boost/multiprecision/cpp_dec_float.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oracle {

std::vector<double> jacobi_eigenvalues(const Matrix& symmetric) {
    const std::size_t n = symmetric.rows();
    std::vector<std::vector<double>> a(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a[i][j] = 0.5 * (symmetric(i, j) + symmetric(j, i));

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                total += a[i][j] * a[i][j];
                if (i != j) off += a[i][j] * a[i][j];
            }
        if (off <= 1e-30 * total) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (a[p][q] == 0.0) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k][p];
                    const double akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p][k];
                    const double aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = a[i][i];
    std::sort(eig.begin(), eig.end());
    return eig;
}

double spectral_norm(const Matrix& m) {
    Matrix g(m.cols(), m.cols());
    for (std::size_t i = 0; i < m.cols(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < m.rows(); ++k) s += m(k, i) * m(k, j);
            g(i, j) = s;
        }
    const auto eig = jacobi_eigenvalues(g);
    return std::sqrt(std::max(0.0, eig.back()));
}

Vector matvec(const Matrix& m, const Vector& x) {
    Vector y(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) y[i] += m(i, j) * x[j];
    return y;
}

double norm(const Vector& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double relu(double v) { return v > 0.0 ? v : 0.0; }

Vector contractive_step(const Matrix& W, const Matrix& U, const Matrix& b, const Vector& x, const Vector& d) {
    Vector out(W.rows());
    for (std::size_t i = 0; i < W.rows(); ++i) {
        double z = b(i, 0);
        for (std::size_t j = 0; j < W.cols(); ++j) z += W(i, j) * x[j];
        for (std::size_t j = 0; j < U.cols(); ++j) z += U(i, j) * d[j];
        out[i] = relu(z);
    }
    return out;
}

Matrix mon_W(const Matrix& A, const Matrix& B, double monotonicity) {
    const std::size_t k = A.rows();
    Matrix W(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            double ata = 0.0;
            for (std::size_t r = 0; r < k; ++r) ata += A(r, i) * A(r, j);
            W(i, j) = (i == j ? 1.0 - monotonicity : 0.0) - ata + B(i, j) - B(j, i);
        }
    return W;
}

Vector mon_step(const Matrix& A, const Matrix& B, const Matrix& U, const Matrix& b, double monotonicity,
                double alpha, const Vector& x, const Vector& d) {
    const Matrix W = mon_W(A, B, monotonicity);
    const std::size_t k = W.rows();
    Vector out(k);
    for (std::size_t i = 0; i < k; ++i) {
        double z = x[i] - alpha * x[i];
        for (std::size_t j = 0; j < k; ++j) z += alpha * W(i, j) * x[j];
        double drive = b(i, 0);
        for (std::size_t j = 0; j < U.cols(); ++j) drive += U(i, j) * d[j];
        out[i] = relu(z + alpha * drive);
    }
    return out;
}

Vector lgd_step(const Matrix& A, const Matrix& R, double alpha, const Vector& x, const Vector& d) {
    const Vector ax = matvec(A, x);
    Vector residual(ax.size());
    for (std::size_t i = 0; i < ax.size(); ++i) residual[i] = ax[i] - d[i];
    const Vector rx = matvec(R, x);
    Vector out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        double g = 0.0;
        for (std::size_t i = 0; i < A.rows(); ++i) g += A(i, j) * residual[i];
        for (std::size_t i = 0; i < R.rows(); ++i) g += R(i, j) * rx[i];
        out[j] = x[j] - alpha * g;
    }
    return out;
}

BoundTerms high_precision_bound(double l_ell, double c_out, double l_hat, double c_params, double c_ell, double p,
                                double n, double delta) {
    using big = boost::multiprecision::cpp_dec_float_50;
    const big L(l_ell), C(c_out), H(l_hat), P(c_params), E(c_ell), pp(p), N(n), D(delta);
    const big root_n = sqrt(N);
    const big inner = big(1) + log(big(1) + big(4) * H * P / (root_n * C));
    const big closed = big(4) * L * C * sqrt(pp) / root_n * sqrt(inner);
    const big confidence = big(4) * E * sqrt(big(2) * log(big(4) / D) / N);
    BoundTerms t;
    t.rademacher_closed = closed.convert_to<double>();
    t.term_rademacher = (big(2) * closed).convert_to<double>();
    t.term_confidence = confidence.convert_to<double>();
    t.total = (big(2) * closed + confidence).convert_to<double>();
    return t;
}

double trapezoid(const std::function<double(double)>& f, double lower, double upper, double tol) {
    if (lower != 0.0) throw std::invalid_argument("trapezoid oracle integrates from 0");
    const double top = std::sqrt(upper);
    const auto g = [&](double t) { return t == 0.0 ? 0.0 : f(t * t) * 2.0 * t; };
    std::size_t n = 1024;
    double h = top / static_cast<double>(n);
    double sum = 0.5 * (g(0.0) + g(top));
    for (std::size_t i = 1; i < n; ++i) sum += g(h * static_cast<double>(i));
    double previous = sum * h;
    for (int level = 0; level < 30; ++level) {
        for (std::size_t i = 0; i < n; ++i) sum += g(h * (static_cast<double>(i) + 0.5));
        n *= 2;
        h /= 2.0;
        const double current = sum * h;
        if (std::abs(current - previous) <= tol * std::abs(current)) return current;
        previous = current;
    }
    throw std::runtime_error("trapezoid oracle did not settle");
}

std::size_t greedy_net_size(const std::vector<Vector>& points, double r) {
    std::vector<const Vector*> net;
    for (const Vector& p : points) {
        bool covered = false;
        for (const Vector* c : net) {
            double s = 0.0;
            for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] - (*c)[i]) * (p[i] - (*c)[i]);
            if (std::sqrt(s) <= r) {
                covered = true;
                break;
            }
        }
        if (!covered) net.push_back(&p);
    }
    return net.size();
}

Vector central_difference(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
    Vector g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        Vector up = x, down = x;
        up[i] += h;
        down[i] -= h;
        g[i] = (f(up) - f(down)) / (2.0 * h);
    }
    return g;
}

} // namespace oracle
