#include "qross/tsplib.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <vector>

#include "qross/error.hpp"

namespace qross {

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
  return s;
}

}  // namespace

int tsplib_nint(double x) { return static_cast<int>(x + 0.5); }

TspInstance parse_tsplib(std::istream& in, const std::string& source_name) {
  auto fail = [&](const std::string& what) -> ParseError {
    return ParseError(source_name + ": " + what);
  };

  std::string name = source_name;
  std::optional<std::size_t> dimension;
  std::string weight_type;
  std::string weight_format;
  std::vector<Point> coords;
  std::vector<double> weights;
  bool have_coords = false;
  bool have_weights = false;

  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (upper(line) == "EOF") break;

    if (upper(line).rfind("NODE_COORD_SECTION", 0) == 0) {
      if (!dimension) throw fail("NODE_COORD_SECTION before DIMENSION");
      have_coords = true;
      for (std::size_t k = 0; k < *dimension; ++k) {
        std::string rec;
        if (!std::getline(in, rec) || trim(rec).empty() || upper(trim(rec)) == "EOF") {
          throw fail("expected " + std::to_string(*dimension) + " coordinate records, got " +
                     std::to_string(k));
        }
        std::istringstream ss(rec);
        long id = 0;
        Point p;
        if (!(ss >> id >> p.x >> p.y)) throw fail("bad coordinate record '" + trim(rec) + "'");
        coords.push_back(p);
      }
      continue;
    }
    if (upper(line).rfind("EDGE_WEIGHT_SECTION", 0) == 0) {
      if (!dimension) throw fail("EDGE_WEIGHT_SECTION before DIMENSION");
      have_weights = true;
      const std::size_t want = *dimension * *dimension;
      while (weights.size() < want) {
        double w = 0.0;
        if (!(in >> w)) {
          throw fail("expected " + std::to_string(want) + " edge weights, got " +
                     std::to_string(weights.size()));
        }
        weights.push_back(w);
      }
      continue;
    }

    const auto colon = line.find(':');
    if (colon == std::string::npos) throw fail("malformed header line '" + line + "'");
    const std::string key = upper(trim(line.substr(0, colon)));
    const std::string value = trim(line.substr(colon + 1));
    if (key == "NAME") {
      name = value;
    } else if (key == "DIMENSION") {
      try {
        std::size_t used = 0;
        const long d = std::stol(value, &used);
        if (used != value.size() || d <= 0) throw std::invalid_argument(value);
        dimension = static_cast<std::size_t>(d);
      } catch (const std::logic_error&) {
        throw fail("bad DIMENSION '" + value + "'");
      }
    } else if (key == "TYPE") {
      if (upper(value) != "TSP") throw fail("unsupported problem TYPE '" + value + "'");
    } else if (key == "EDGE_WEIGHT_TYPE") {
      weight_type = upper(value);
      if (weight_type != "EUC_2D" && weight_type != "EXPLICIT") {
        throw fail("unsupported EDGE_WEIGHT_TYPE '" + value + "'");
      }
    } else if (key == "EDGE_WEIGHT_FORMAT") {
      weight_format = upper(value);
      if (weight_format != "FULL_MATRIX") throw fail("unsupported EDGE_WEIGHT_FORMAT '" + value + "'");
    }
    // COMMENT, DISPLAY_DATA_TYPE and other keys carry nothing we need.
  }

  if (!dimension) throw fail("missing DIMENSION");
  if (weight_type.empty()) throw fail("missing EDGE_WEIGHT_TYPE");
  const std::size_t n = *dimension;
  SquareMatrix dist(n);

  if (weight_type == "EUC_2D") {
    if (!have_coords) throw fail("EUC_2D instance without NODE_COORD_SECTION");
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double d = tsplib_nint(std::hypot(coords[i].x - coords[j].x, coords[i].y - coords[j].y));
        dist(i, j) = d;
        dist(j, i) = d;
      }
    }
    return make_tsp_instance(name, std::move(dist), std::move(coords));
  }

  if (weight_format.empty()) throw fail("EXPLICIT instance without EDGE_WEIGHT_FORMAT");
  if (!have_weights) throw fail("EXPLICIT instance without EDGE_WEIGHT_SECTION");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) dist(i, j) = weights[i * n + j];
  }
  std::optional<std::vector<Point>> maybe_coords;
  if (have_coords) maybe_coords = std::move(coords);
  return make_tsp_instance(name, std::move(dist), std::move(maybe_coords));
}

TspInstance parse_tsplib(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open TSPLIB file " + path.string());
  return parse_tsplib(in, path.filename().string());
}

}  // namespace qross
