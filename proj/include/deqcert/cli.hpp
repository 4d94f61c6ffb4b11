#pragma once

#include "deqcert/experiments.hpp"
#include "deqcert/losses.hpp"
#include "deqcert/operators.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace deqcert::cli {

enum ExitCode : int { ok = 0, verification_failed = 1, config_error = 2, certification_error = 3, solver_error = 4 };

struct DatasetSource {
    std::string kind = "blobs";   // blobs | inverse | idx
    double spread = 0.3;
    double noise_pct = 1.5;
    double box = 1.0;
    std::string images;
    std::string labels;
    std::size_t limit = 0;
};

struct RunConfig {
    std::string command;
    Family family = Family::contractive;
    std::optional<FinalLayer> final_layer;  // linear for ce, identity for l1 when unset
    std::string activation = "relu";
    double monotonicity = 0.1;
    std::size_t m = 20;
    std::size_t k = 30;
    std::size_t n = 10;
    DatasetSource dataset;
    std::size_t samples = 1000;
    std::vector<std::size_t> n_grid{100, 1000, 10000};
    std::vector<std::size_t> p_grid;
    double delta = 1e-2;
    LossKind loss = LossKind::cross_entropy_softmax;
    std::uint64_t seed = 0;
    std::string out = ".";
    std::string constants;   // bound: input file, default <out>/constants.json
    std::size_t n_theta = 100;
    std::size_t threads = 0;
    bool with_gaps = false;
    bool train_final_layer = false;
    std::size_t trained_thetas = 5;
    TrainConfig train;
    std::size_t verify_pairs = 200;
    std::size_t verify_samples = 2000;

    void validate() const;
};

// Reads a JSON document mirroring RunConfig; unknown keys are rejected.
RunConfig load_run_config(const std::string& path);
void apply_json(RunConfig& cfg, const std::string& text, const std::string& origin);

OperatorSpec build_spec(const RunConfig& cfg);
// Fixes the data distribution from the seed and installs the LGD forward
// operator into `spec`.
Sampler build_sampler(const RunConfig& cfg, OperatorSpec& spec);

int cmd_estimate(const RunConfig& cfg, std::ostream& out);
int cmd_bound(const RunConfig& cfg, std::ostream& out);
int cmd_sweep(const RunConfig& cfg, std::ostream& out);
int cmd_verify(const RunConfig& cfg, std::ostream& out);
int cmd_generate(const RunConfig& cfg, std::ostream& out);

// Parses arguments, dispatches, and maps exceptions to exit codes.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace deqcert::cli
