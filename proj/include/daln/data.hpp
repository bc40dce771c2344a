#pragma once

#include <string>
#include <vector>

#include "daln/matrix.hpp"

namespace daln {

enum class DomainTag { kSource, kTarget };

/// A point cloud with optional integer labels. Unlabeled domains carry an
/// empty label vector.
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  DomainTag domain_tag = DomainTag::kSource;
  int class_count = 0;
};

/// Two interleaved half-circles: n/2 points on the upper unit half-circle
/// centered at the origin (class 0) and n/2 on its reflection centered at
/// (1, 0.5) (class 1), each coordinate jittered by Gaussian noise of the
/// given standard deviation. n must be even and positive.
Dataset make_moons(int n, double noise_sd, uint64_t seed);

/// Rotates a 2-D point cloud by the given angle about its centroid.
/// Labels, tag and class count are preserved.
Dataset rotate(const Dataset& ds, double degrees);

/// Keeps a uniform without-replacement sample of `keep` points from one
/// class, leaving every other class untouched. Row order of the survivors is
/// preserved.
Dataset subsample_class(const Dataset& ds, int class_id, int keep,
                        uint64_t seed);

/// Reads a comma-separated file: one row per line, '#' lines skipped, blank
/// lines ignored, decimal features, and (when has_labels) an integer label
/// in [0, k) as the last column.
Dataset load_csv(const std::string& path, bool has_labels, int k);

/// Row-major lattice of resolution² evaluation points covering
/// [x_lo, x_hi] × [y_lo, y_hi]; y varies slowest.
Matrix boundary_grid(double x_lo, double x_hi, double y_lo, double y_hi,
                     int resolution);

}  // namespace daln
