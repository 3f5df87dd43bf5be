#pragma once

#include <filesystem>
#include <istream>
#include <string>

#include "qross/tsp.hpp"

namespace qross {

// TSPLIB95 reader for symmetric instances with EDGE_WEIGHT_TYPE EUC_2D
// (nint-rounded Euclidean distances) or EXPLICIT with FULL_MATRIX format.
TspInstance parse_tsplib(std::istream& in, const std::string& source_name = "<stream>");
TspInstance parse_tsplib(const std::filesystem::path& path);

// TSPLIB nint(): round half away from zero for the non-negative distances used here.
int tsplib_nint(double x);

}  // namespace qross
