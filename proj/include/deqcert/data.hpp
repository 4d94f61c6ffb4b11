#pragma once

// Datasets with compact support: synthetic linear inverse problems, Gaussian
// blobs with one-hot labels, and MNIST-style IDX files.

#include "deqcert/numerics.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace deqcert {

enum class TaskKind { regression, classification };

struct Dataset {
    std::vector<Vector> inputs;
    std::vector<Vector> targets;
    TaskKind kind = TaskKind::regression;
    std::size_t classes = 0;
    std::string source;
    std::uint64_t seed = 0;
    double noise_pct = 0.0;

    std::size_t size() const noexcept { return inputs.size(); }
    std::size_t input_dim() const noexcept { return inputs.empty() ? 0 : inputs.front().size(); }
    std::size_t target_dim() const noexcept { return targets.empty() ? 0 : targets.front().size(); }
    // Equal counts, consistent lengths, finite entries.
    void validate() const;
    // First `count` samples.
    Dataset head(std::size_t count) const;
};

// Entries i.i.d. N(0, 1/m).
Matrix random_forward_operator(std::size_t m, std::size_t k, Rng& rng);
std::size_t numerical_rank(const Matrix& a, double rel_tol = 1e-10);

struct InverseProblem {
    Matrix forward;         // m x k
    double noise_pct = 0.0; // per-coordinate noise level in percent of |(Ax)_i|
    double box = 1.0;       // ground truth drawn uniformly from [-box, box]^k
};

// Draws A until it has full column rank; DataError after 5 attempts.
InverseProblem make_inverse_problem(std::size_t m, std::size_t k, double noise_pct, Rng& rng, double box = 1.0);
// d = A x + e, e_i ~ N(0, (noise_pct/100 * |(Ax)_i|)^2) truncated at 4 sigma; targets are x.
Dataset sample_inverse_problem(const InverseProblem& problem, std::size_t count, Rng& rng);

struct InverseProblemData {
    Dataset data;
    Matrix forward;
};
InverseProblemData gen_inverse_problem(std::size_t m, std::size_t k, std::size_t count, double noise_pct, Rng& rng,
                                       double box = 1.0);

struct BlobModel {
    Matrix centers;  // classes x m, unit-norm rows
    double spread = 0.0;
};

BlobModel make_blob_model(std::size_t m, std::size_t classes, double spread, Rng& rng);
// Sample i belongs to class i % classes; offsets are clipped to [-10 spread, 10 spread].
Dataset sample_blobs(const BlobModel& model, std::size_t count, Rng& rng);
Dataset gen_blobs(std::size_t m, std::size_t classes, std::size_t count, double spread, Rng& rng);

// ---------------------------------------------------------------------------
// IDX container (big-endian header: 0x0000 08 <ndims>, then ndims u32 sizes,
// then unsigned bytes row-major).
// ---------------------------------------------------------------------------
inline constexpr std::uint32_t idx_images_magic = 0x00000803;
inline constexpr std::uint32_t idx_labels_magic = 0x00000801;

struct IdxArray {
    std::uint32_t magic = 0;
    std::vector<std::uint32_t> dims;
    std::vector<std::uint8_t> bytes;
};

IdxArray read_idx_file(const std::string& path, std::uint32_t expected_magic);
void write_idx_file(const std::string& path, const IdxArray& array);

// Pixels scaled to [0, 1], labels one-hot over `classes`. `limit` > 0 keeps
// the first `limit` samples.
Dataset load_idx(const std::string& images_path, const std::string& labels_path, std::size_t classes = 10,
                 std::size_t limit = 0);
// Inverse of load_idx for inputs that are multiples of 1/255.
void write_idx(const std::string& images_path, const std::string& labels_path, const Dataset& data,
               std::size_t rows, std::size_t cols);

} // namespace deqcert
