#include "deqcert/errors.hpp"
#include "deqcert/serialization.hpp"
#include "deqcert/svg.hpp"

#include <doctest.h>

#include <cmath>

using namespace deqcert;

TEST_CASE("matrix JSON round trip is exact") {
    Rng rng(1);
    const Matrix m = sample_on_norm_sphere(3, 4, 1.7, rng);
    const Json j = to_json(m);
    CHECK(matrix_from_json(Json::parse(j.dump())) == m);
    CHECK_THROWS_AS(matrix_from_json(Json::parse(R"({"rows": 2, "cols": 2, "data": [1, 2, 3]})")), DimensionError);
    CHECK_THROWS_AS(matrix_from_json(Json::parse(R"({"rows": 2})")), ConfigError);
}

TEST_CASE("parameter set JSON round trip needs re-certification") {
    OperatorSpec spec;
    spec.family = Family::mon;
    spec.state_dim = 5;
    spec.input_dim = 3;
    spec.output_dim = 2;
    spec.final_layer = FinalLayer::linear;
    Rng rng(2);
    const ParamSet p = sample_params(spec, rng);
    const ParamSet back = param_set_from_json(Json::parse(to_json(p).dump()));
    CHECK_FALSE(back.certified());
    const ParamSet again = certify(spec, back);
    CHECK(again.step == p.step);
    CHECK(*again.contraction == *p.contraction);
    CHECK(psi_distance(again, p) == 0.0);
    CHECK(*again.phi == *p.phi);
}

TEST_CASE("constants report JSON round trip validates") {
    ConstantsReport r;
    r.family = Family::lgd;
    r.loss = LossKind::l1;
    r.k = 3;
    r.m = 4;
    r.n = 3;
    r.param_count = 9;
    r.c_d = 0.1 + 0.2;
    r.c_out = r.c_out_T = 1.0 / 3.0;
    r.c_ell = 2.5;
    r.l_x = 0.999;
    r.alpha = 0.25;
    r.c_params_psi = r.c_params = 1.0;
    r.l_ell = 1.0;
    r.seed = 18446744073709551615ULL;
    r.provenance["c_d"] = Provenance::estimated;
    const ConstantsReport back = constants_from_json(Json::parse(to_json(r).dump()));
    CHECK(back.c_d == r.c_d);
    CHECK(back.c_out == r.c_out);
    CHECK(back.seed == r.seed);
    CHECK(back.family == Family::lgd);
    CHECK(back.provenance.at("c_d") == Provenance::estimated);

    Json broken = to_json(r);
    broken["l_x"] = 1.5;
    CHECK_THROWS_AS(constants_from_json(broken), ConfigError);
}

TEST_CASE("dataset JSON round trip") {
    Rng rng(3);
    const Dataset data = gen_blobs(3, 2, 10, 0.2, rng);
    const Dataset back = dataset_from_json(Json::parse(to_json(data).dump()));
    CHECK(back.inputs == data.inputs);
    CHECK(back.targets == data.targets);
    CHECK(back.kind == TaskKind::classification);
}

TEST_CASE("numbers use the shortest round-trip form") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1e-300) == "1e-300");
    CHECK(format_number(100.0) == "100");
    const double x = 0.42866943994355;
    CHECK(std::stod(format_number(x)) == x);
}

TEST_CASE("CSV quoting follows RFC 4180") {
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_field("two\nlines") == "\"two\nlines\"");
    CHECK(csv_row({"x", "y,z", ""}) == "x,\"y,z\",\r\n");
}

TEST_CASE("CSV headers are stable") {
    CHECK(csv_row(constants_csv_header()) ==
          "family,k,m,n,c_d,c_out_T,c_out,c_ell,l_x,c_params,l_ell,seed,n_theta\r\n");
    CHECK(csv_row(bound_csv_header()) == "N,p,delta,term_rademacher,term_confidence,total_excess\r\n");
    CHECK(csv_row(sweep_csv_header()) ==
          "family,N,p,term_rademacher,term_confidence,total_excess,max_gap_random,max_gap_trained\r\n");
    SweepCell cell;
    cell.n_samples = 100;
    cell.p = 7;
    cell.max_gap_random = 0.5;
    const auto row = sweep_csv_row(Family::mon, cell);
    CHECK(row.front() == "mon");
    CHECK(row[6] == "0.5");
    CHECK(row[7].empty());
}

TEST_CASE("SVG output is deterministic and escaped") {
    SvgPlot plot;
    plot.title = "bound <N> & p";
    plot.x_label = "N";
    plot.y_label = "excess";
    plot.series.push_back({"p=1", {{100, 1.0}, {1000, 0.5}, {10000, 0.2}}, false});
    plot.series.push_back({"gap", {{100, 0.1}, {1000, 0.05}}, true});
    const std::string a = plot.render();
    CHECK(a == plot.render());
    CHECK(a.find("<svg") != std::string::npos);
    CHECK(a.find("</svg>") != std::string::npos);
    CHECK(a.find("bound &lt;N&gt; &amp; p") != std::string::npos);
    CHECK(a.find("<N>") == std::string::npos);
    CHECK(xml_escape("\"'") == "&quot;'");
}
