#pragma once

#include "dirac_forge/irreducible.hpp"

#include <json.hpp>

#include <string>

namespace dirac_forge {

using Json = nlohmann::json;

// shortest decimal that reads back to the same double
std::string format_double(double x);
double parse_double(const Json& v, const std::string& what);

// parse errors carry line and column; throws StructuralError
Json parse_json_text(const std::string& text, const std::string& source);
std::string read_file(const std::string& path);

Json poly_to_json(const PolyFunction& f);
PolyFunction poly_from_json(const Json& j, std::size_t n_vars);

Json matrix_to_json(const Mat& m);
Mat matrix_from_json(const Json& j);

Json rational_matrix_to_json(const RationalMatrix& m);
RationalMatrix rational_matrix_from_json(const Json& rows, std::size_t n_rows, std::size_t n_cols);

Json system_to_json(const ReducibleSystem& sys);
ReducibleSystem system_from_json(const Json& j);

Json ladder_to_json(const ProjectorLadder& lad);
ProjectorLadder ladder_from_json(const Json& j);

Json vector_to_json(const Vec& v);
Vec vector_from_json(const Json& j);

}  // namespace dirac_forge
