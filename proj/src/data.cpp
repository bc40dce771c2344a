#include "daln/data.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "daln/errors.hpp"
#include "daln/rng.hpp"

namespace daln {

Dataset make_moons(int n, double noise_sd, uint64_t seed) {
  if (n <= 0 || n % 2 != 0)
    throw ValueError("make_moons: n must be positive and even, got " +
                     std::to_string(n));
  if (noise_sd < 0.0)
    throw ValueError("make_moons: negative noise standard deviation");
  auto rng = RngStream::for_purpose(seed, "data");
  const int half = n / 2;
  Dataset ds{Matrix(n, 2), std::vector<int>(n, 0), DomainTag::kSource, 2};
  for (int i = 0; i < half; ++i) {
    const double t =
        half == 1 ? 0.0 : std::numbers::pi * i / (half - 1);
    ds.features(i, 0) = std::cos(t) + noise_sd * rng.normal();
    ds.features(i, 1) = std::sin(t) + noise_sd * rng.normal();
  }
  for (int i = 0; i < half; ++i) {
    const double t =
        half == 1 ? 0.0 : std::numbers::pi * i / (half - 1);
    ds.features(half + i, 0) = 1.0 - std::cos(t) + noise_sd * rng.normal();
    ds.features(half + i, 1) = 0.5 - std::sin(t) + noise_sd * rng.normal();
    ds.labels[half + i] = 1;
  }
  return ds;
}

Dataset rotate(const Dataset& ds, double degrees) {
  if (ds.features.cols() != 2)
    throw ShapeError("rotate: need 2-D features, got " +
                     ds.features.shape_str());
  const int n = ds.features.rows();
  double cx = 0.0, cy = 0.0;
  for (int i = 0; i < n; ++i) {
    cx += ds.features(i, 0);
    cy += ds.features(i, 1);
  }
  cx /= n;
  cy /= n;
  const double theta = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Dataset out = ds;
  for (int i = 0; i < n; ++i) {
    const double dx = ds.features(i, 0) - cx;
    const double dy = ds.features(i, 1) - cy;
    out.features(i, 0) = cx + c * dx - s * dy;
    out.features(i, 1) = cy + s * dx + c * dy;
  }
  return out;
}

Dataset subsample_class(const Dataset& ds, int class_id, int keep,
                        uint64_t seed) {
  if (ds.labels.empty())
    throw ValueError("subsample_class: dataset has no labels");
  if (class_id < 0 || class_id >= ds.class_count)
    throw ValueError("subsample_class: class " + std::to_string(class_id) +
                     " outside [0, " + std::to_string(ds.class_count) + ")");
  std::vector<int> members;
  for (int i = 0; i < ds.features.rows(); ++i)
    if (ds.labels[i] == class_id) members.push_back(i);
  if (keep < 0 || keep > static_cast<int>(members.size()))
    throw ValueError("subsample_class: keep " + std::to_string(keep) +
                     " exceeds class size " + std::to_string(members.size()));

  auto rng = RngStream::for_purpose(seed, "subsample");
  const std::vector<int> order =
      rng.permutation(static_cast<int>(members.size()));
  std::vector<bool> kept(ds.features.rows(), true);
  for (size_t rank = keep; rank < order.size(); ++rank)
    kept[members[order[rank]]] = false;

  int survivors = 0;
  for (bool flag : kept) survivors += flag ? 1 : 0;
  Dataset out{Matrix(survivors, ds.features.cols()), {}, ds.domain_tag,
              ds.class_count};
  out.labels.reserve(survivors);
  int at = 0;
  for (int i = 0; i < ds.features.rows(); ++i) {
    if (!kept[i]) continue;
    for (int j = 0; j < ds.features.cols(); ++j)
      out.features(at, j) = ds.features(i, j);
    out.labels.push_back(ds.labels[i]);
    at++;
  }
  return out;
}

namespace {

double parse_field(const std::string& field, int line_no) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  while (end != nullptr && (*end == ' ' || *end == '\t' || *end == '\r')) end++;
  if (end == begin || end == nullptr || *end != '\0')
    throw ParseError("line " + std::to_string(line_no) + ": bad number '" +
                     field + "'");
  return value;
}

}  // namespace

Dataset load_csv(const std::string& path, bool has_labels, int k) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  int width = -1;
  while (std::getline(in, line)) {
    line_no++;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> fields;
    size_t start = 0;
    while (true) {
      const size_t comma = line.find(',', start);
      const std::string cell = line.substr(
          start, comma == std::string::npos ? std::string::npos
                                            : comma - start);
      fields.push_back(parse_field(cell, line_no));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (width == -1)
      width = static_cast<int>(fields.size());
    else if (static_cast<int>(fields.size()) != width)
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(width) + " columns, got " +
                       std::to_string(fields.size()));
    rows.push_back(std::move(fields));
  }
  if (rows.empty()) throw ValueError("load_csv: no data rows in " + path);
  if (has_labels && width < 2)
    throw ParseError("load_csv: labeled file needs at least 2 columns");

  const int d = width - (has_labels ? 1 : 0);
  Dataset ds{Matrix(static_cast<int>(rows.size()), d), {}, DomainTag::kSource,
             k};
  for (size_t i = 0; i < rows.size(); ++i) {
    for (int j = 0; j < d; ++j) ds.features(static_cast<int>(i), j) = rows[i][j];
    if (has_labels) {
      const double raw = rows[i][d];
      const int label = static_cast<int>(raw);
      if (raw != label)
        throw ParseError("row " + std::to_string(i + 1) +
                         ": non-integer label " + std::to_string(raw));
      if (label < 0 || label >= k)
        throw ValueError("row " + std::to_string(i + 1) + ": label " +
                         std::to_string(label) + " outside [0, " +
                         std::to_string(k) + ")");
      ds.labels.push_back(label);
    }
  }
  return ds;
}

Matrix boundary_grid(double x_lo, double x_hi, double y_lo, double y_hi,
                     int resolution) {
  if (resolution < 2)
    throw ValueError("boundary_grid: resolution must be at least 2");
  Matrix grid(resolution * resolution, 2);
  for (int iy = 0; iy < resolution; ++iy) {
    const double y = y_lo + (y_hi - y_lo) * iy / (resolution - 1);
    for (int ix = 0; ix < resolution; ++ix) {
      const double x = x_lo + (x_hi - x_lo) * ix / (resolution - 1);
      grid(iy * resolution + ix, 0) = x;
      grid(iy * resolution + ix, 1) = y;
    }
  }
  return grid;
}

}  // namespace daln
