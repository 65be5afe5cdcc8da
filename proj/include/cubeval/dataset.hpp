#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cubeval/camera.hpp"
#include "cubeval/geometry.hpp"

namespace cubeval {

inline constexpr double kRotationOkTol = 1e-6;     // accepted as-is below this deviation
inline constexpr double kRotationRepairTol = 1e-3; // repairable below this, error beyond

struct ImageInfo {
  std::int64_t id = 0;
  double width = 0.0;
  double height = 0.0;
  Intrinsics intrinsics;
  std::string source;
  std::string split;
};

struct AnnotationRecord {
  std::int64_t image_id = 0;
  std::string category;
  std::array<double, 4> bbox2d{};  // x, y, w, h in pixels
  Vec3 center = Vec3::Zero();      // camera frame, meters
  Mat3 rotation = Mat3::Identity();
  Vec3 dims = Vec3::Ones();        // (w, h, l), meters
  std::optional<double> occlusion;
  std::optional<double> truncation;
};

struct CategoryInfo {
  std::string name;
  std::optional<Vec3> priors;  // (w0, h0, l0)
};

struct LoadDiagnostics {
  std::vector<std::string> warnings;
  int repaired_rotations = 0;
  int estimated_intrinsics = 0;
};

struct DatasetFile {
  std::vector<ImageInfo> images;
  std::vector<AnnotationRecord> annotations;
  std::vector<CategoryInfo> categories;
  std::unordered_map<std::int64_t, std::size_t> image_index;

  const ImageInfo& image(std::int64_t id) const;
  CategoryPriors priors() const;
};

/// Deviation of m from the rotation group: max of ||m^T m - I||_inf and
/// |det(m) - 1|.
double rotation_deviation(const Mat3& m);

/// Nearest rotation in the Frobenius sense (polar factor via SVD, with the
/// determinant sign corrected).
Mat3 nearest_rotation(const Mat3& m);

/// Loads and validates the annotation JSON. Rotations within kRotationOkTol
/// pass as-is; within kRotationRepairTol they are projected to the nearest
/// rotation with a warning; beyond that Error(geometry) is thrown. Missing
/// intrinsics fall back to f = 2H with a warning. Throws Error(schema) on
/// malformed documents and Error(referential) on dangling image ids.
DatasetFile load_dataset(const std::string& path, LoadDiagnostics* diag = nullptr);
DatasetFile parse_dataset_json(const std::string& text, LoadDiagnostics* diag = nullptr);

/// Inverse of load: emits the documented schema; load(serialize(ds)) is
/// field-for-field lossless.
std::string serialize_dataset(const DatasetFile& ds);

/// Plain cuboid-list files (the `iou` subcommand inputs).
std::vector<Cuboid> load_cuboid_list(const std::string& path);

struct StatsConfig {
  int center_bins = 64;    // projected-center histogram is center_bins^2
  int topview_bins = 64;   // XZ histogram is topview_bins^2
  int size_bins = 64;
  double depth_min = 0.0;  // z range of the XZ histogram, meters
  double depth_max = 20.0; // x range is symmetric: [-depth_max, depth_max]
};

struct Histogram1D {
  int bins = 0;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::uint64_t> counts;
  std::uint64_t spill = 0;
};

struct Histogram2D {
  int rows = 0;  // first axis
  int cols = 0;  // second axis
  double row_lo = 0.0, row_hi = 0.0;
  double col_lo = 0.0, col_hi = 0.0;
  std::vector<std::uint64_t> counts;  // row-major
  std::uint64_t spill = 0;

  std::uint64_t at(int r, int c) const { return counts[static_cast<std::size_t>(r) * cols + c]; }
};

struct CorrelationReport {
  std::optional<double> y_norm_vs_z;
  std::optional<double> rel_size_vs_z;
  std::size_t samples = 0;
};

struct StatsReport {
  StatsConfig config;
  std::uint64_t n_images = 0;
  std::uint64_t n_annotations = 0;
  Histogram2D center_xy;   // rows = normalized y, cols = normalized x
  Histogram2D topview_xz;  // rows = z (depth), cols = x
  Histogram1D rel_size;
  std::map<std::string, std::uint64_t> category_counts;
  CorrelationReport correlations;
};

/// Pearson correlations of (normalized projected-center y) vs z and of
/// relative 2D size sqrt(box area / image area) vs z. Pairs with zero
/// variance report nullopt. Throws Error(insufficient_data) when fewer
/// than two annotations project validly.
CorrelationReport correlations(const DatasetFile& ds);

StatsReport compute_stats(const DatasetFile& ds, const StatsConfig& config = {});

std::string stats_to_json(const StatsReport& report);

/// One CSV per histogram: "center_xy", "topview_xz", "rel_size",
/// "categories".
std::string stats_histogram_csv(const StatsReport& report, const std::string& name);

}  // namespace cubeval
