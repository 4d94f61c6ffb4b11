#include "deqcert/cli.hpp"

#include "deqcert/bound.hpp"
#include "deqcert/constants.hpp"
#include "deqcert/data.hpp"
#include "deqcert/errors.hpp"
#include "deqcert/serialization.hpp"
#include "deqcert/svg.hpp"
#include "deqcert/verify.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

namespace deqcert::cli {

namespace {

constexpr std::uint64_t model_stream = 0x6d6f64656c;
constexpr std::uint64_t data_stream = 0x64617461;

template <class T>
T json_value(const Json& j, const std::string& key, const std::string& origin) {
    try {
        return j.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(origin + ": field '" + key + "' has the wrong type");
    }
}

void reject_unknown(const Json& j, const std::set<std::string>& known, const std::string& origin) {
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) throw ConfigError(origin + ": unknown field '" + key + "'");
    }
}

std::filesystem::path out_path(const RunConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.out);
    return std::filesystem::path(cfg.out) / name;
}

std::string join_csv(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::string text = csv_row(header);
    for (const auto& r : rows) text += csv_row(r);
    return text;
}

FinalLayer final_layer_of(const RunConfig& cfg) {
    if (cfg.final_layer) return *cfg.final_layer;
    if (cfg.loss == LossKind::l1 && cfg.n == cfg.k) return FinalLayer::identity;
    return FinalLayer::linear;
}

LossSpec loss_of(const RunConfig& cfg) { return LossSpec{cfg.loss}; }

} // namespace

void RunConfig::validate() const {
    if (m == 0 || k == 0 || n == 0) throw ConfigError("config: dimensions m, k, n must be >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("config: delta must lie in (0, 1)");
    if (n_grid.empty()) throw ConfigError("config: empty N grid");
    for (std::size_t v : n_grid)
        if (v == 0) throw ConfigError("config: N grid entries must be >= 1");
    for (std::size_t v : p_grid)
        if (v == 0) throw ConfigError("config: p grid entries must be >= 1");
    if (samples == 0) throw ConfigError("config: samples must be >= 1");
    if (n_theta == 0) throw ConfigError("config: n_theta must be >= 1");
    if (dataset.kind != "blobs" && dataset.kind != "inverse" && dataset.kind != "idx")
        throw ConfigError("config: dataset kind must be blobs, inverse or idx");
    if (dataset.kind == "idx" && (dataset.images.empty() || dataset.labels.empty()))
        throw ConfigError("config: idx dataset needs images and labels paths");
    if (dataset.kind == "inverse" && n != k)
        throw ConfigError("config: inverse problems predict the state, so n must equal k");
    if (train_final_layer && final_layer_of(*this) != FinalLayer::linear)
        throw ConfigError("config: final-layer training needs a linear final layer");
}

void apply_json(RunConfig& cfg, const std::string& text, const std::string& origin) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError(origin + ": top level must be an object");
    reject_unknown(j,
                   {"command", "family", "final_layer", "activation", "monotonicity", "m", "k", "n", "dataset",
                    "samples", "n_grid", "p_grid", "delta", "loss", "seed", "out", "constants", "n_theta", "threads",
                    "with_gaps", "train_final_layer", "trained_thetas", "train", "verify"},
                   origin);
    const auto get = [&](const char* key, auto& target) {
        if (j.contains(key)) target = json_value<std::decay_t<decltype(target)>>(j.at(key), key, origin);
    };
    get("command", cfg.command);
    if (j.contains("family")) cfg.family = parse_family(json_value<std::string>(j.at("family"), "family", origin));
    if (j.contains("final_layer"))
        cfg.final_layer = parse_final_layer(json_value<std::string>(j.at("final_layer"), "final_layer", origin));
    get("activation", cfg.activation);
    get("monotonicity", cfg.monotonicity);
    get("m", cfg.m);
    get("k", cfg.k);
    get("n", cfg.n);
    get("samples", cfg.samples);
    get("n_grid", cfg.n_grid);
    get("p_grid", cfg.p_grid);
    get("delta", cfg.delta);
    if (j.contains("loss")) cfg.loss = parse_loss(json_value<std::string>(j.at("loss"), "loss", origin));
    get("seed", cfg.seed);
    get("out", cfg.out);
    get("constants", cfg.constants);
    get("n_theta", cfg.n_theta);
    get("threads", cfg.threads);
    get("with_gaps", cfg.with_gaps);
    get("train_final_layer", cfg.train_final_layer);
    get("trained_thetas", cfg.trained_thetas);
    if (j.contains("dataset")) {
        const Json& d = j.at("dataset");
        const std::string where = origin + ": dataset";
        reject_unknown(d, {"kind", "spread", "noise_pct", "box", "images", "labels", "limit"}, where);
        const auto dget = [&](const char* key, auto& target) {
            if (d.contains(key)) target = json_value<std::decay_t<decltype(target)>>(d.at(key), key, where);
        };
        dget("kind", cfg.dataset.kind);
        dget("spread", cfg.dataset.spread);
        dget("noise_pct", cfg.dataset.noise_pct);
        dget("box", cfg.dataset.box);
        dget("images", cfg.dataset.images);
        dget("labels", cfg.dataset.labels);
        dget("limit", cfg.dataset.limit);
    }
    if (j.contains("train")) {
        const Json& t = j.at("train");
        const std::string where = origin + ": train";
        reject_unknown(t, {"steps", "lr", "radius"}, where);
        if (t.contains("steps")) cfg.train.steps = json_value<std::size_t>(t.at("steps"), "steps", where);
        if (t.contains("lr")) cfg.train.lr = json_value<double>(t.at("lr"), "lr", where);
        if (t.contains("radius")) cfg.train.radius = json_value<double>(t.at("radius"), "radius", where);
    }
    if (j.contains("verify")) {
        const Json& v = j.at("verify");
        const std::string where = origin + ": verify";
        reject_unknown(v, {"pairs", "samples"}, where);
        if (v.contains("pairs")) cfg.verify_pairs = json_value<std::size_t>(v.at("pairs"), "pairs", where);
        if (v.contains("samples")) cfg.verify_samples = json_value<std::size_t>(v.at("samples"), "samples", where);
    }
}

RunConfig load_run_config(const std::string& path) {
    if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path);
    RunConfig cfg;
    apply_json(cfg, read_text_file(path), path);
    return cfg;
}

OperatorSpec build_spec(const RunConfig& cfg) {
    OperatorSpec spec;
    spec.family = cfg.family;
    spec.state_dim = cfg.k;
    spec.input_dim = cfg.m;
    spec.output_dim = cfg.n;
    spec.activation = parse_activation(cfg.activation);
    spec.monotonicity = cfg.monotonicity;
    spec.final_layer = final_layer_of(cfg);
    return spec;
}

Sampler build_sampler(const RunConfig& cfg, OperatorSpec& spec) {
    Rng model_rng(derive_seed(cfg.seed, {model_stream}));
    Sampler sampler;
    if (cfg.dataset.kind == "blobs") {
        auto model = make_blob_model(cfg.m, cfg.n, cfg.dataset.spread, model_rng);
        sampler = [model](std::size_t count, Rng& rng) { return sample_blobs(model, count, rng); };
    } else if (cfg.dataset.kind == "inverse") {
        auto problem = make_inverse_problem(cfg.m, cfg.k, cfg.dataset.noise_pct, model_rng, cfg.dataset.box);
        spec.forward = problem.forward;
        sampler = [problem](std::size_t count, Rng& rng) { return sample_inverse_problem(problem, count, rng); };
    } else {
        auto pool = std::make_shared<const Dataset>(
            load_idx(cfg.dataset.images, cfg.dataset.labels, cfg.n, cfg.dataset.limit));
        if (pool->input_dim() != cfg.m) {
            std::ostringstream msg;
            msg << "config: idx images have " << pool->input_dim() << " pixels but m = " << cfg.m;
            throw ConfigError(msg.str());
        }
        // Successive draws take consecutive, disjoint slices of the file.
        auto offset = std::make_shared<std::size_t>(0);
        sampler = [pool, offset](std::size_t count, Rng&) {
            if (*offset + count > pool->size()) {
                std::ostringstream msg;
                msg << "idx: requested " << count << " samples at offset " << *offset << " but the file holds "
                    << pool->size();
                throw DataError(msg.str());
            }
            Dataset slice = *pool;
            slice.inputs.assign(pool->inputs.begin() + static_cast<std::ptrdiff_t>(*offset),
                                pool->inputs.begin() + static_cast<std::ptrdiff_t>(*offset + count));
            slice.targets.assign(pool->targets.begin() + static_cast<std::ptrdiff_t>(*offset),
                                 pool->targets.begin() + static_cast<std::ptrdiff_t>(*offset + count));
            *offset += count;
            return slice;
        };
    }
    if (spec.family == Family::lgd && spec.forward.empty())
        spec.forward = random_forward_operator(cfg.m, cfg.k, model_rng);
    spec.validate();
    return sampler;
}

int cmd_estimate(const RunConfig& cfg, std::ostream& out) {
    cfg.validate();
    OperatorSpec spec = build_spec(cfg);
    const Sampler sampler = build_sampler(cfg, spec);
    Rng data_rng(derive_seed(cfg.seed, {data_stream}));
    const Dataset data = sampler(cfg.samples, data_rng);
    const ConstantsReport report =
        estimate_constants(spec, data, loss_of(cfg), EstimateOptions{cfg.n_theta, cfg.seed, cfg.threads, {}});
    const LipschitzChain lipschitz = chain_for(report);

    Json doc = to_json(report);
    doc["lipschitz"] = to_json(lipschitz);
    write_text_file(out_path(cfg, "constants.json").string(), doc.dump(2) + "\n");
    write_text_file(out_path(cfg, "constants.csv").string(),
                    join_csv(constants_csv_header(), {constants_csv_row(report)}));

    out << "estimate: family=" << to_string(report.family) << " c_d=" << format_number(report.c_d)
        << " c_out_T=" << format_number(report.c_out_T) << " c_out=" << format_number(report.c_out)
        << " c_ell=" << format_number(report.c_ell) << " l_x=" << format_number(report.l_x)
        << " c_params=" << format_number(report.c_params) << " l_hat=" << format_number(lipschitz.l_hat) << "\n";
    return ok;
}

int cmd_bound(const RunConfig& cfg, std::ostream& out) {
    cfg.validate();
    const std::string path = cfg.constants.empty() ? out_path(cfg, "constants.json").string() : cfg.constants;
    if (!std::filesystem::exists(path)) throw ConfigError("constants file not found: " + path);
    Json doc;
    try {
        doc = Json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    const ConstantsReport report = constants_from_json(doc);
    const LipschitzChain lipschitz = chain_for(report);
    const std::vector<std::size_t> p_grid =
        cfg.p_grid.empty() ? std::vector<std::size_t>{report.param_count} : cfg.p_grid;

    std::vector<std::vector<std::string>> rows;
    Json all = Json::array();
    for (std::size_t n : cfg.n_grid) {
        for (std::size_t p : p_grid) {
            const BoundReport b = generalization_bound(report, lipschitz, p, static_cast<double>(n), cfg.delta);
            rows.push_back(bound_csv_row(b));
            Json entry = to_json(b);
            entry.erase("constants");
            all.push_back(entry);
        }
    }
    write_text_file(out_path(cfg, "bound.csv").string(), join_csv(bound_csv_header(), rows));
    Json bound_doc;
    bound_doc["constants"] = to_json(report);
    bound_doc["lipschitz"] = to_json(lipschitz);
    bound_doc["cells"] = all;
    write_text_file(out_path(cfg, "bound.json").string(), bound_doc.dump(2) + "\n");
    out << "bound: " << rows.size() << " cells written to " << out_path(cfg, "bound.csv").string() << "\n";
    return ok;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
    cfg.validate();
    OperatorSpec spec = build_spec(cfg);
    const Sampler sampler = build_sampler(cfg, spec);

    SweepConfig sc;
    sc.n_grid = cfg.n_grid;
    sc.p_grid = cfg.p_grid;
    sc.delta = cfg.delta;
    sc.loss = loss_of(cfg);
    sc.n_theta = cfg.n_theta;
    sc.with_gaps = cfg.with_gaps || cfg.train_final_layer;
    sc.train_final_layer = cfg.train_final_layer;
    sc.trained_thetas = cfg.trained_thetas;
    sc.train = cfg.train;
    sc.seed = cfg.seed;
    sc.threads = cfg.threads;
    const SweepResult result = sweep(spec, sampler, sc);

    std::vector<std::vector<std::string>> rows;
    for (const SweepCell& cell : result.cells) rows.push_back(sweep_csv_row(spec.family, cell));
    write_text_file(out_path(cfg, "sweep.csv").string(), join_csv(sweep_csv_header(), rows));

    SvgPlot plot;
    plot.title = "Generalization bound, " + to_string(spec.family) + " family";
    plot.x_label = "N (number of samples)";
    plot.y_label = "excess risk";
    plot.log_x = true;
    std::vector<std::size_t> ps;
    for (const SweepCell& cell : result.cells)
        if (std::find(ps.begin(), ps.end(), cell.p) == ps.end()) ps.push_back(cell.p);
    for (std::size_t p : ps) {
        SvgSeries s;
        s.label = "bound, p=" + std::to_string(p);
        for (const SweepCell& cell : result.cells)
            if (cell.p == p) s.points.emplace_back(static_cast<double>(cell.n_samples), cell.bound.total_excess);
        plot.series.push_back(std::move(s));
    }
    const auto gap_series = [&](const std::string& label, auto member) {
        SvgSeries s;
        s.label = label;
        s.dashed = true;
        for (const SweepCell& cell : result.cells)
            if (cell.p == ps.front() && (cell.*member)) s.points.emplace_back(static_cast<double>(cell.n_samples), *(cell.*member));
        if (!s.points.empty()) plot.series.push_back(std::move(s));
    };
    gap_series("max gap, random weights", &SweepCell::max_gap_random);
    gap_series("max gap, trained final layer", &SweepCell::max_gap_trained);
    plot.log_y = std::all_of(plot.series.begin(), plot.series.end(), [](const SvgSeries& s) {
        return std::all_of(s.points.begin(), s.points.end(), [](const auto& pt) { return pt.second > 0.0; });
    });
    write_text_file(out_path(cfg, "sweep.svg").string(), plot.render());

    out << "sweep: " << result.cells.size() << " cells, l_hat=" << format_number(result.lipschitz.l_hat);
    if (result.gap_failures) out << ", " << result.gap_failures << " thetas skipped after solver failures";
    out << "\n";
    return ok;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out) {
    VerifyOptions options{cfg.seed, cfg.verify_pairs, cfg.verify_samples, cfg.threads};
    bool all_passed = true;
    for (const CheckResult& r : run_verification(options)) {
        out << (r.passed ? "PASS " : "FAIL ") << r.name << "  worst_ratio=" << std::setprecision(6) << r.worst_ratio
            << "  trials=" << r.trials;
        if (r.skipped) out << "  skipped=" << r.skipped;
        out << "\n";
        all_passed = all_passed && r.passed;
    }
    return all_passed ? ok : verification_failed;
}

int cmd_generate(const RunConfig& cfg, std::ostream& out) {
    cfg.validate();
    OperatorSpec spec = build_spec(cfg);
    const Sampler sampler = build_sampler(cfg, spec);
    Rng data_rng(derive_seed(cfg.seed, {data_stream}));
    const Dataset data = sampler(cfg.samples, data_rng);
    Json doc = to_json(data);
    if (!spec.forward.empty()) doc["forward"] = to_json(spec.forward);
    const auto path = out_path(cfg, "dataset.json");
    write_text_file(path.string(), doc.dump() + "\n");
    out << "generate: " << data.size() << " samples written to " << path.string() << "\n";
    return ok;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Generalization-bound certification for contractive implicit networks", "deqcert"};
    app.require_subcommand(1);

    std::string config_path, family, loss, out_dir, constants_path;
    std::uint64_t seed = 0;
    std::vector<std::size_t> n_grid, p_grid;
    double delta = 0.0;
    std::size_t threads = 0;
    bool with_gaps = false, train_final = false;

    // Every subcommand accepts the full flag set; flags a command does not use are ignored.
    const auto add_flags = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON run configuration");
        sub->add_option("--family", family, "contractive | mon | lgd")
            ->check(CLI::IsMember({"contractive", "mon", "lgd"}));
        sub->add_option("--seed", seed, "master seed");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--n-grid", n_grid, "sample sizes, comma separated")->delimiter(',')->check(CLI::PositiveNumber);
        sub->add_option("--p-grid", p_grid, "parameter counts, comma separated")
            ->delimiter(',')
            ->check(CLI::PositiveNumber);
        sub->add_option("--delta", delta, "confidence level in (0, 1)");
        sub->add_option("--loss", loss, "l1 | ce")->check(CLI::IsMember({"l1", "ce"}));
        sub->add_option("--threads", threads, "worker cap (0 = all cores)");
        sub->add_flag("--with-gaps", with_gaps, "measure empirical gaps for random weights");
        sub->add_flag("--train-final-layer", train_final, "also measure gaps after training the final layer");
        sub->add_option("--constants", constants_path, "constants.json written by estimate");
    };

    const std::pair<const char*, const char*> commands[] = {
        {"estimate", "estimate constants; writes constants.json and constants.csv"},
        {"bound", "evaluate the bound over the grid; writes bound.csv"},
        {"sweep", "estimate, bound and gaps over the grid; writes sweep.csv and sweep.svg"},
        {"verify", "run the Monte-Carlo inequality checks"},
        {"generate", "write a dataset snapshot to dataset.json"},
    };
    for (const auto& [name, help] : commands) add_flags(app.add_subcommand(name, help));

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : config_error;
    }

    CLI::App* chosen = app.get_subcommands().front();
    try {
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
        cfg.command = chosen->get_name();
        const auto given = [&](const char* name) { return chosen->count(name) > 0; };
        if (given("--family")) cfg.family = parse_family(family);
        if (given("--seed")) cfg.seed = seed;
        if (given("--out")) cfg.out = out_dir;
        if (given("--threads")) cfg.threads = threads;
        if (given("--n-grid")) cfg.n_grid = n_grid;
        if (given("--p-grid")) cfg.p_grid = p_grid;
        if (given("--delta")) cfg.delta = delta;
        if (given("--loss")) cfg.loss = parse_loss(loss);
        if (given("--constants")) cfg.constants = constants_path;
        if (given("--with-gaps")) cfg.with_gaps = true;
        if (given("--train-final-layer")) cfg.train_final_layer = true;

        if (cfg.command == "estimate") return cmd_estimate(cfg, out);
        if (cfg.command == "bound") return cmd_bound(cfg, out);
        if (cfg.command == "sweep") return cmd_sweep(cfg, out);
        if (cfg.command == "verify") return cmd_verify(cfg, out);
        return cmd_generate(cfg, out);
    } catch (const CertificationError& e) {
        err << "certification error: " << e.what() << "\n";
        return certification_error;
    } catch (const NonConvergence& e) {
        err << "solver error: " << e.what() << "\n";
        return solver_error;
    } catch (const NumericalError& e) {
        err << "solver error: " << e.what() << "\n";
        return solver_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return config_error;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

} // namespace deqcert::cli
