#pragma once

// JSON documents for reports, parameters and datasets; RFC 4180 CSV output.

#include "deqcert/bound.hpp"
#include "deqcert/constants.hpp"
#include "deqcert/data.hpp"
#include "deqcert/experiments.hpp"
#include "deqcert/operators.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace deqcert {

using Json = nlohmann::ordered_json;

Json to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);
Json to_json(const ParamSet& params);
ParamSet param_set_from_json(const Json& j);
Json to_json(const ConstantsReport& report);
ConstantsReport constants_from_json(const Json& j);
Json to_json(const LipschitzChain& chain);
Json to_json(const BoundReport& report);
Json to_json(const Dataset& data);
Dataset dataset_from_json(const Json& j);

// Shortest round-trip decimal form of a double.
std::string format_number(double v);

// RFC 4180: fields containing a comma, quote, CR or LF are quoted and quotes doubled.
std::string csv_field(std::string_view field);
std::string csv_row(const std::vector<std::string>& fields);

std::vector<std::string> constants_csv_header();
std::vector<std::string> constants_csv_row(const ConstantsReport& report);
std::vector<std::string> bound_csv_header();
std::vector<std::string> bound_csv_row(const BoundReport& report);
std::vector<std::string> sweep_csv_header();
std::vector<std::string> sweep_csv_row(Family family, const SweepCell& cell);

// Writes the text unchanged; throws ConfigError when the file cannot be written.
void write_text_file(const std::string& path, std::string_view text);
std::string read_text_file(const std::string& path);

} // namespace deqcert
