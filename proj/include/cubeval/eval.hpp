#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cubeval/dataset.hpp"
#include "cubeval/intersect.hpp"

namespace cubeval {

struct GtRecord {
  std::int64_t image_id = 0;
  std::string category;
  Cuboid box;
  std::array<double, 4> bbox2d{};
  std::optional<double> occlusion;
  std::optional<double> truncation;

  double depth() const { return box.center().z(); }
};

struct PredRecord {
  std::int64_t image_id = 0;
  std::string category;
  Cuboid box;
  double score = 0.0;  // already fused upstream when mu is available
};

struct DepthBands {
  double near_max = 10.0;
  double medium_max = 35.0;
};

/// Band indices used throughout the report.
enum Band : int { kBandAll = 0, kBandNear = 1, kBandMedium = 2, kBandFar = 3 };
inline constexpr std::array<const char*, 4> kBandNames = {"all", "near", "medium", "far"};

struct EvalConfig {
  std::vector<double> taus;  // strictly increasing, in (0, 1]
  double occlusion_threshold = 0.66;
  double truncation_threshold = 0.66;
  double tiny_rel_height = 0.0625;  // strict <: exactly 6.25% is kept
  DepthBands bands;
  int threads = 0;
  int recall_samples = 101;  // COCO-style interpolation grid

  static std::vector<double> default_tau_grid();  // 0.05, 0.10, ..., 0.50
  static std::vector<double> tau_grid(double tau_min, double tau_max, double tau_step);

  EvalConfig() : taus(default_tau_grid()) {}

  void validate() const;
};

struct CategoryReport {
  std::string category;
  // ap[band][tau index]; nullopt when the band has no counted gt.
  std::array<std::vector<std::optional<double>>, 4> ap;
  std::array<std::optional<double>, 4> mean_ap;  // over the tau grid, per band
  std::optional<double> ap25, ap50;              // single-threshold, band "all"
  std::uint64_t n_gt = 0;          // non-ignored
  std::uint64_t n_gt_ignored = 0;  // by occlusion/truncation/tiny rules
  std::uint64_t n_pred = 0;
  std::vector<std::uint64_t> tp_at_tau;  // band "all"
};

struct APReport {
  std::vector<double> taus;
  DepthBands bands;
  std::vector<CategoryReport> categories;  // sorted by name
  // Means over categories with a nonzero denominator; nullopt when none.
  std::optional<double> mean_ap3d;
  std::optional<double> ap3d_25;
  std::optional<double> ap3d_50;
  std::array<std::optional<double>, 4> mean_ap_band;  // [kBandAll] == mean_ap3d
  std::uint64_t n_gt = 0;
  std::uint64_t n_gt_ignored = 0;
  std::uint64_t n_pred = 0;
  std::uint64_t n_pred_unknown_category = 0;
  std::vector<std::uint64_t> tp_at_tau;
};

/// Ignore rule: occlusion > threshold OR truncation > threshold OR 2D box
/// height strictly below tiny_rel_height * image height. Missing
/// occlusion/truncation count as 0.
bool is_ignored(const GtRecord& gt, double image_height, const EvalConfig& config);

enum class MatchOutcome : std::uint8_t { true_positive, false_positive, discarded };

struct ImageCategoryMatch {
  // One outcome per prediction, indexed like the input span.
  std::vector<MatchOutcome> outcomes;
  // Matched gt index per prediction, -1 if none.
  std::vector<int> matched_gt;
  std::uint64_t n_gt_counted = 0;  // non-ignored gts (the recall denominator)
};

/// Greedy score-ordered matching for one image and category. Predictions
/// are processed by descending score (ties by input order); each takes the
/// highest-IoU unmatched non-ignored gt at IoU >= tau (IoU ties by gt input
/// order). Failing that, a prediction overlapping any ignored gt at
/// IoU >= tau is discarded; otherwise it is a false positive.
ImageCategoryMatch match_image_category(std::span<const PredRecord> preds,
                                        std::span<const GtRecord> gts,
                                        const std::vector<bool>& gt_ignored, double tau);

/// 101-point interpolated AP from a score-ranked outcome list; discarded
/// entries are skipped. Returns nullopt when n_gt == 0.
std::optional<double> average_precision(std::span<const MatchOutcome> ranked,
                                        std::uint64_t n_gt, int recall_samples = 101);

std::vector<GtRecord> gt_records_from_dataset(const DatasetFile& ds);

/// Prediction JSON loader; applies the same rotation check/repair policy as
/// the dataset loader. Unknown image ids raise Error(referential).
std::vector<PredRecord> load_predictions(const std::string& path, const DatasetFile& gt,
                                         LoadDiagnostics* diag = nullptr);

/// Full protocol: per-image/category matching at every threshold, depth-band
/// breakdowns (out-of-band gts are treated as ignored), per-category AP and
/// means. Categories are case-normalized and whitespace-trimmed; predictions
/// for unknown categories are dropped and counted.
APReport evaluate(const DatasetFile& gt, std::span<const PredRecord> preds,
                  const EvalConfig& config);

EvalConfig eval_config_from_json(const std::string& text);
std::string report_to_json(const APReport& report);
/// Flat CSV: header "category,tau,band,ap"; one row per category x tau x
/// band; empty ap cell when undefined. Floats use 17 significant digits.
std::string report_to_csv(const APReport& report);
/// Console table with one row per category plus an overall row.
std::string report_table(const APReport& report);

}  // namespace cubeval
