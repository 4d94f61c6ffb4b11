#include "deqcert/serialization.hpp"

#include "deqcert/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace deqcert {

namespace {

template <class T>
T field(const Json& j, const char* key) {
    if (!j.contains(key)) throw ConfigError(std::string("json: missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("json: field '") + key + "': " + e.what());
    }
}

std::string to_string(TaskKind kind) { return kind == TaskKind::regression ? "regression" : "classification"; }

TaskKind parse_task(std::string_view name) {
    if (name == "regression") return TaskKind::regression;
    if (name == "classification") return TaskKind::classification;
    throw ConfigError("json: unknown task kind '" + std::string(name) + "'");
}

} // namespace

Json to_json(const Matrix& m) {
    Json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    j["data"] = std::vector<double>(m.data().begin(), m.data().end());
    return j;
}

Matrix matrix_from_json(const Json& j) {
    return Matrix(field<std::size_t>(j, "rows"), field<std::size_t>(j, "cols"), field<std::vector<double>>(j, "data"));
}

Json to_json(const ParamSet& params) {
    Json j;
    j["family"] = to_string(params.family());
    j["step"] = params.step;
    j["admissible"] = params.admissible;
    j["contraction"] = params.contraction ? Json(*params.contraction) : Json(nullptr);
    Json blocks = Json::object();
    for (const NamedBlock& b : params.psi_blocks()) blocks[b.name] = to_json(*b.value);
    j["psi"] = blocks;
    j["phi"] = params.phi ? to_json(*params.phi) : Json(nullptr);
    return j;
}

ParamSet param_set_from_json(const Json& j) {
    const Family family = parse_family(field<std::string>(j, "family"));
    const Json& psi = j.at("psi");
    ParamSet params;
    switch (family) {
    case Family::contractive:
        params.psi = ContractiveWeights{matrix_from_json(psi.at("W")), matrix_from_json(psi.at("U")),
                                        matrix_from_json(psi.at("b"))};
        break;
    case Family::mon:
        params.psi = MonWeights{matrix_from_json(psi.at("A")), matrix_from_json(psi.at("B")),
                                matrix_from_json(psi.at("U")), matrix_from_json(psi.at("b"))};
        break;
    case Family::lgd: params.psi = LgdWeights{matrix_from_json(psi.at("R"))}; break;
    }
    params.step = field<double>(j, "step");
    if (j.contains("phi") && !j.at("phi").is_null()) params.phi = matrix_from_json(j.at("phi"));
    // Certification flags are not trusted from disk; callers re-certify.
    return params;
}

Json to_json(const ConstantsReport& r) {
    Json j;
    j["family"] = to_string(r.family);
    j["final_layer"] = to_string(r.final_layer);
    j["loss"] = to_string(r.loss);
    j["k"] = r.k;
    j["m"] = r.m;
    j["n"] = r.n;
    j["param_count"] = r.param_count;
    j["c_d"] = r.c_d;
    j["c_out"] = r.c_out;
    j["c_out_T"] = r.c_out_T;
    j["c_ell"] = r.c_ell;
    j["l_x"] = r.l_x;
    j["alpha"] = r.alpha;
    j["c_params_phi"] = r.c_params_phi;
    j["c_params_psi"] = r.c_params_psi;
    j["c_params"] = r.c_params;
    j["l_ell"] = r.l_ell;
    j["safety_factor"] = r.safety;
    j["theta_samples"] = r.theta_samples;
    j["data_samples"] = r.data_samples;
    j["seed"] = r.seed;
    Json prov = Json::object();
    for (const auto& [name, p] : r.provenance) prov[name] = to_string(p);
    j["provenance"] = prov;
    return j;
}

ConstantsReport constants_from_json(const Json& j) {
    ConstantsReport r;
    r.family = parse_family(field<std::string>(j, "family"));
    r.final_layer = parse_final_layer(field<std::string>(j, "final_layer"));
    r.loss = parse_loss(field<std::string>(j, "loss"));
    r.k = field<std::size_t>(j, "k");
    r.m = field<std::size_t>(j, "m");
    r.n = field<std::size_t>(j, "n");
    r.param_count = field<std::size_t>(j, "param_count");
    r.c_d = field<double>(j, "c_d");
    r.c_out = field<double>(j, "c_out");
    r.c_out_T = field<double>(j, "c_out_T");
    r.c_ell = field<double>(j, "c_ell");
    r.l_x = field<double>(j, "l_x");
    r.alpha = field<double>(j, "alpha");
    r.c_params_phi = field<double>(j, "c_params_phi");
    r.c_params_psi = field<double>(j, "c_params_psi");
    r.c_params = field<double>(j, "c_params");
    r.l_ell = field<double>(j, "l_ell");
    r.safety = field<double>(j, "safety_factor");
    r.theta_samples = field<std::size_t>(j, "theta_samples");
    r.data_samples = field<std::size_t>(j, "data_samples");
    r.seed = field<std::uint64_t>(j, "seed");
    if (j.contains("provenance")) {
        for (const auto& [name, p] : j.at("provenance").items()) r.provenance[name] = parse_provenance(p.get<std::string>());
    }
    r.validate();
    return r;
}

Json to_json(const LipschitzChain& c) {
    Json j;
    j["l_psi"] = c.l_psi;
    j["l_x"] = c.l_x;
    j["l"] = c.l;
    j["l_p_x"] = c.l_p_x;
    j["l_p_phi"] = c.l_p_phi;
    j["l_hat"] = c.l_hat;
    return j;
}

Json to_json(const BoundReport& r) {
    Json j;
    j["N"] = r.n_samples;
    j["p"] = r.p;
    j["delta"] = r.delta;
    j["term_rademacher"] = r.term_rademacher;
    j["term_confidence"] = r.term_confidence;
    j["total_excess"] = r.total_excess;
    j["constants"] = to_json(r.constants);
    j["lipschitz"] = to_json(r.lipschitz);
    return j;
}

Json to_json(const Dataset& data) {
    Json j;
    j["kind"] = to_string(data.kind);
    j["classes"] = data.classes;
    j["source"] = data.source;
    j["seed"] = data.seed;
    j["noise_pct"] = data.noise_pct;
    j["inputs"] = data.inputs;
    j["targets"] = data.targets;
    return j;
}

Dataset dataset_from_json(const Json& j) {
    Dataset data;
    data.kind = parse_task(field<std::string>(j, "kind"));
    data.classes = field<std::size_t>(j, "classes");
    data.source = field<std::string>(j, "source");
    data.seed = field<std::uint64_t>(j, "seed");
    data.noise_pct = field<double>(j, "noise_pct");
    data.inputs = field<std::vector<Vector>>(j, "inputs");
    data.targets = field<std::vector<Vector>>(j, "targets");
    data.validate();
    return data;
}

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string csv_field(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string csv_row(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += csv_field(fields[i]);
    }
    out += "\r\n";
    return out;
}

std::vector<std::string> constants_csv_header() {
    return {"family", "k", "m", "n", "c_d", "c_out_T", "c_out", "c_ell", "l_x", "c_params", "l_ell", "seed", "n_theta"};
}

std::vector<std::string> constants_csv_row(const ConstantsReport& r) {
    return {to_string(r.family),      std::to_string(r.k),       std::to_string(r.m),
            std::to_string(r.n),      format_number(r.c_d),      format_number(r.c_out_T),
            format_number(r.c_out),   format_number(r.c_ell),    format_number(r.l_x),
            format_number(r.c_params), format_number(r.l_ell),   std::to_string(r.seed),
            std::to_string(r.theta_samples)};
}

std::vector<std::string> bound_csv_header() {
    return {"N", "p", "delta", "term_rademacher", "term_confidence", "total_excess"};
}

std::vector<std::string> bound_csv_row(const BoundReport& r) {
    return {format_number(r.n_samples),       std::to_string(r.p),
            format_number(r.delta),           format_number(r.term_rademacher),
            format_number(r.term_confidence), format_number(r.total_excess)};
}

std::vector<std::string> sweep_csv_header() {
    return {"family",          "N",           "p", "term_rademacher", "term_confidence", "total_excess",
            "max_gap_random", "max_gap_trained"};
}

std::vector<std::string> sweep_csv_row(Family family, const SweepCell& cell) {
    const auto optional = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
    return {to_string(family),
            std::to_string(cell.n_samples),
            std::to_string(cell.p),
            format_number(cell.bound.term_rademacher),
            format_number(cell.bound.term_confidence),
            format_number(cell.bound.total_excess),
            optional(cell.max_gap_random),
            optional(cell.max_gap_trained)};
}

void write_text_file(const std::string& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw ConfigError("write failed for " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace deqcert
