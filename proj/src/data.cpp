#include "deqcert/data.hpp"

#include "deqcert/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace deqcert {

void Dataset::validate() const {
    if (inputs.size() != targets.size()) throw DataError("dataset: input and target counts differ");
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (inputs[i].size() != input_dim() || targets[i].size() != target_dim()) {
            std::ostringstream msg;
            msg << "dataset: sample " << i << " has inconsistent dimensions";
            throw DataError(msg.str());
        }
        const auto finite = [](const Vector& v) {
            return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
        };
        if (!finite(inputs[i]) || !finite(targets[i])) {
            std::ostringstream msg;
            msg << "dataset: sample " << i << " has a non-finite entry";
            throw DataError(msg.str());
        }
    }
}

Dataset Dataset::head(std::size_t count) const {
    if (count > size()) throw DataError("dataset: head() beyond dataset size");
    Dataset out = *this;
    out.inputs.resize(count);
    out.targets.resize(count);
    return out;
}

Matrix random_forward_operator(std::size_t m, std::size_t k, Rng& rng) {
    Matrix a(m, k);
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    for (double& v : a.data()) v = scale * rng.normal();
    return a;
}

std::size_t numerical_rank(const Matrix& a, double rel_tol) {
    // Modified Gram-Schmidt over columns.
    std::vector<Vector> basis;
    for (std::size_t j = 0; j < a.cols(); ++j) {
        Vector col(a.rows());
        for (std::size_t i = 0; i < a.rows(); ++i) col[i] = a(i, j);
        const double original = norm2(col);
        if (original == 0.0) continue;
        for (const Vector& q : basis) {
            const double c = dot(q, col);
            for (std::size_t i = 0; i < col.size(); ++i) col[i] -= c * q[i];
        }
        const double rest = norm2(col);
        if (rest > rel_tol * original) {
            for (double& v : col) v /= rest;
            basis.push_back(std::move(col));
        }
    }
    return basis.size();
}

InverseProblem make_inverse_problem(std::size_t m, std::size_t k, double noise_pct, Rng& rng, double box) {
    if (m == 0 || k == 0) throw DataError("inverse problem: dimensions must be positive");
    if (!(noise_pct >= 0.0)) throw DataError("inverse problem: noise_pct must be >= 0");
    if (!(box >= 0.0)) throw DataError("inverse problem: box must be >= 0");
    for (int attempt = 0; attempt < 5; ++attempt) {
        Matrix a = random_forward_operator(m, k, rng);
        if (numerical_rank(a) == k) return InverseProblem{std::move(a), noise_pct, box};
    }
    std::ostringstream msg;
    msg << "inverse problem: forward operator " << m << "x" << k << " is rank deficient after 5 draws";
    throw DataError(msg.str());
}

Dataset sample_inverse_problem(const InverseProblem& problem, std::size_t count, Rng& rng) {
    Dataset data;
    data.kind = TaskKind::regression;
    data.source = "inverse";
    data.seed = rng.seed();
    data.noise_pct = problem.noise_pct;
    data.inputs.reserve(count);
    data.targets.reserve(count);
    const double level = problem.noise_pct / 100.0;
    for (std::size_t s = 0; s < count; ++s) {
        Vector x(problem.forward.cols());
        for (double& v : x) v = rng.uniform(-problem.box, problem.box);
        Vector d = multiply(problem.forward, x);
        for (double& v : d) {
            const double z = std::clamp(rng.normal(), -4.0, 4.0);
            v += level * std::abs(v) * z;
        }
        data.inputs.push_back(std::move(d));
        data.targets.push_back(std::move(x));
    }
    return data;
}

InverseProblemData gen_inverse_problem(std::size_t m, std::size_t k, std::size_t count, double noise_pct, Rng& rng,
                                       double box) {
    InverseProblem problem = make_inverse_problem(m, k, noise_pct, rng, box);
    Dataset data = sample_inverse_problem(problem, count, rng);
    return {std::move(data), std::move(problem.forward)};
}

BlobModel make_blob_model(std::size_t m, std::size_t classes, double spread, Rng& rng) {
    if (classes < 2) throw DataError("blobs: need at least two classes");
    if (m == 0) throw DataError("blobs: input dimension must be positive");
    if (!(spread >= 0.0)) throw DataError("blobs: spread must be >= 0");
    BlobModel model{Matrix(classes, m), spread};
    for (std::size_t c = 0; c < classes; ++c) {
        Vector center(m);
        double n = 0.0;
        while (n == 0.0) {
            for (double& v : center) v = rng.normal();
            n = norm2(center);
        }
        for (std::size_t j = 0; j < m; ++j) model.centers(c, j) = center[j] / n;
    }
    return model;
}

Dataset sample_blobs(const BlobModel& model, std::size_t count, Rng& rng) {
    const std::size_t classes = model.centers.rows();
    const std::size_t m = model.centers.cols();
    const double clip = 10.0 * model.spread;
    Dataset data;
    data.kind = TaskKind::classification;
    data.classes = classes;
    data.source = "blobs";
    data.seed = rng.seed();
    data.inputs.reserve(count);
    data.targets.reserve(count);
    for (std::size_t s = 0; s < count; ++s) {
        const std::size_t c = s % classes;
        Vector d(m);
        for (std::size_t j = 0; j < m; ++j)
            d[j] = model.centers(c, j) + std::clamp(model.spread * rng.normal(), -clip, clip);
        Vector y(classes, 0.0);
        y[c] = 1.0;
        data.inputs.push_back(std::move(d));
        data.targets.push_back(std::move(y));
    }
    return data;
}

Dataset gen_blobs(std::size_t m, std::size_t classes, std::size_t count, double spread, Rng& rng) {
    const BlobModel model = make_blob_model(m, classes, spread, rng);
    return sample_blobs(model, count, rng);
}

} // namespace deqcert
