#include "cubeval/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace cubeval {

using nlohmann::json;

std::vector<double> EvalConfig::tau_grid(double tau_min, double tau_max, double tau_step) {
  if (!(tau_step > 0.0)) fail(Error::Kind::invalid_argument, "tau step must be positive");
  std::vector<double> out;
  for (int i = 0;; ++i) {
    const double tau = tau_min + i * tau_step;
    if (tau > tau_max + 0.5 * tau_step) break;
    out.push_back(tau);
  }
  return out;
}

std::vector<double> EvalConfig::default_tau_grid() { return tau_grid(0.05, 0.50, 0.05); }

void EvalConfig::validate() const {
  if (taus.empty()) fail(Error::Kind::invalid_argument, "tau grid must not be empty");
  for (std::size_t i = 0; i < taus.size(); ++i) {
    if (!(taus[i] > 0.0) || taus[i] > 1.0)
      fail(Error::Kind::invalid_argument, "tau values must lie in (0, 1]");
    if (i > 0 && !(taus[i] > taus[i - 1]))
      fail(Error::Kind::invalid_argument, "tau grid must be strictly increasing");
  }
  if (!(bands.near_max > 0.0) || !(bands.medium_max > bands.near_max))
    fail(Error::Kind::invalid_argument, "depth bands must satisfy 0 < near_max < medium_max");
  if (recall_samples < 2) fail(Error::Kind::invalid_argument, "recall_samples must be >= 2");
}

bool is_ignored(const GtRecord& gt, double image_height, const EvalConfig& config) {
  if (gt.occlusion.value_or(0.0) > config.occlusion_threshold) return true;
  if (gt.truncation.value_or(0.0) > config.truncation_threshold) return true;
  return gt.bbox2d[3] / image_height < config.tiny_rel_height;  // strict <
}

namespace {

// Core greedy pass shared by the public per-image matcher and the grouped
// evaluator: predictions visited in `order` (descending score), gts scanned
// in input order so IoU ties resolve to the first gt.
void greedy_assign(const IoUMatrix& iou, const std::vector<std::size_t>& order,
                   const std::vector<bool>& ignored, double tau,
                   std::vector<MatchOutcome>& outcomes, std::vector<int>* matched_gt) {
  const std::size_t ng = iou.cols;
  std::vector<bool> taken(ng, false);
  for (const std::size_t p : order) {
    int best = -1;
    double best_iou = 0.0;
    for (std::size_t j = 0; j < ng; ++j) {
      if (ignored[j] || taken[j]) continue;
      const double v = iou(p, j);
      if (v > best_iou) {
        best_iou = v;
        best = static_cast<int>(j);
      }
    }
    if (best >= 0 && best_iou >= tau) {
      taken[best] = true;
      outcomes[p] = MatchOutcome::true_positive;
      if (matched_gt) (*matched_gt)[p] = best;
      continue;
    }
    double ign_best = 0.0;
    for (std::size_t j = 0; j < ng; ++j)
      if (ignored[j]) ign_best = std::max(ign_best, iou(p, j));
    outcomes[p] = ign_best >= tau ? MatchOutcome::discarded : MatchOutcome::false_positive;
  }
}

std::vector<std::size_t> score_order(std::span<const PredRecord> preds,
                                     const std::vector<std::size_t>* subset = nullptr) {
  std::vector<std::size_t> order(subset ? subset->size() : preds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto score_at = [&](std::size_t i) {
    return preds[subset ? (*subset)[i] : i].score;
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return score_at(a) > score_at(b); });
  return order;
}

}  // namespace

ImageCategoryMatch match_image_category(std::span<const PredRecord> preds,
                                        std::span<const GtRecord> gts,
                                        const std::vector<bool>& gt_ignored, double tau) {
  std::vector<Cuboid> pred_boxes, gt_boxes;
  pred_boxes.reserve(preds.size());
  gt_boxes.reserve(gts.size());
  for (const PredRecord& p : preds) pred_boxes.push_back(p.box);
  for (const GtRecord& g : gts) gt_boxes.push_back(g.box);
  const IoUMatrix iou = iou3d_batched(pred_boxes, gt_boxes, 1);

  ImageCategoryMatch out;
  out.outcomes.assign(preds.size(), MatchOutcome::false_positive);
  out.matched_gt.assign(preds.size(), -1);
  for (std::size_t j = 0; j < gts.size(); ++j)
    if (!gt_ignored[j]) ++out.n_gt_counted;

  greedy_assign(iou, score_order(preds), gt_ignored, tau, out.outcomes, &out.matched_gt);
  return out;
}

std::optional<double> average_precision(std::span<const MatchOutcome> ranked,
                                        std::uint64_t n_gt, int recall_samples) {
  if (n_gt == 0) return std::nullopt;
  std::vector<double> recall, precision;
  recall.reserve(ranked.size());
  precision.reserve(ranked.size());
  std::uint64_t tp = 0, fp = 0;
  for (const MatchOutcome outcome : ranked) {
    if (outcome == MatchOutcome::discarded) continue;
    outcome == MatchOutcome::true_positive ? ++tp : ++fp;
    recall.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
  }
  // precision envelope, then COCO-style sampling on the uniform recall grid
  for (std::size_t i = precision.size(); i-- > 1;)
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double sum = 0.0;
  for (int s = 0; s < recall_samples; ++s) {
    const double r = static_cast<double>(s) / static_cast<double>(recall_samples - 1);
    const auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / static_cast<double>(recall_samples);
}

std::vector<GtRecord> gt_records_from_dataset(const DatasetFile& ds) {
  std::vector<GtRecord> out;
  out.reserve(ds.annotations.size());
  for (const AnnotationRecord& a : ds.annotations)
    out.push_back({a.image_id, a.category, Cuboid(a.center, a.dims, a.rotation), a.bbox2d,
                   a.occlusion, a.truncation});
  return out;
}

namespace {

std::string normalize_category(const std::string& raw) {
  std::size_t b = 0, e = raw.size();
  while (b < e && std::isspace(static_cast<unsigned char>(raw[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(raw[e - 1]))) --e;
  std::string out = raw.substr(b, e - b);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

int band_of(double depth, const DepthBands& bands) {
  if (depth > 0.0 && depth <= bands.near_max) return kBandNear;
  if (depth > bands.near_max && depth <= bands.medium_max) return kBandMedium;
  if (depth > bands.medium_max) return kBandFar;
  return -1;  // depth <= 0 belongs to no band
}

std::optional<double> mean_of_defined(const std::vector<std::optional<double>>& values) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& v : values)
    if (v) {
      sum += *v;
      ++n;
    }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace

std::vector<PredRecord> load_predictions(const std::string& path, const DatasetFile& gt,
                                         LoadDiagnostics* diag) {
  std::ifstream in(path);
  if (!in) fail(Error::Kind::io, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  json doc = json::parse(ss.str(), nullptr, false);
  if (doc.is_discarded()) fail(Error::Kind::schema, "invalid JSON document");
  if (!doc.is_object() || !doc.contains("predictions"))
    fail(Error::Kind::schema, "predictions: missing required field 'predictions'");
  const json& list = doc.at("predictions");
  if (!list.is_array()) fail(Error::Kind::schema, "'predictions' must be an array");

  std::vector<PredRecord> out;
  out.reserve(list.size());
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string where = "predictions[" + std::to_string(i) + "]";
    const json& jo = list[i];
    for (const char* key : {"image_id", "category", "center", "dims", "rotation", "score"})
      if (!jo.contains(key))
        fail(Error::Kind::schema, where + ": missing required field '" + key + "'");
    for (auto it = jo.begin(); it != jo.end(); ++it) {
      static const std::set<std::string> known = {"image_id", "category", "center",
                                                  "dims",     "rotation", "score"};
      if (!known.count(it.key()))
        fail(Error::Kind::schema, where + ": unknown field '" + it.key() + "'");
    }
    PredRecord p;
    p.image_id = jo.at("image_id").get<std::int64_t>();
    gt.image(p.image_id);  // referential check
    p.category = jo.at("category").get<std::string>();
    auto vec3 = [&](const char* key) {
      const json& v = jo.at(key);
      if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() || !v[2].is_number())
        fail(Error::Kind::schema, where + ": field '" + std::string(key) + "' must be 3 numbers");
      return Vec3(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
    };
    const Vec3 center = vec3("center");
    const Vec3 dims = vec3("dims");
    if (!(dims.minCoeff() > 0.0)) fail(Error::Kind::schema, where + ": dims must be positive");
    const json& jr = jo.at("rotation");
    if (!jr.is_array() || jr.size() != 9)
      fail(Error::Kind::schema, where + ": field 'rotation' must be 9 numbers");
    Mat3 rot;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        if (!jr[3 * r + c].is_number())
          fail(Error::Kind::schema, where + ": field 'rotation' must be 9 numbers");
        rot(r, c) = jr[3 * r + c].get<double>();
      }
    const double dev = rotation_deviation(rot);
    if (dev > kRotationRepairTol)
      fail(Error::Kind::geometry, where + ": rotation deviates from orthonormal by " +
                                      std::to_string(dev) + ", beyond repair tolerance");
    if (dev > kRotationTol) {
      const bool warn = dev > kRotationOkTol;
      rot = nearest_rotation(rot);
      if (warn && diag) {
        diag->warnings.push_back(where + ": rotation reorthonormalized (deviation " +
                                 std::to_string(dev) + ")");
        ++diag->repaired_rotations;
      }
    }
    p.score = jo.at("score").get<double>();
    if (!(p.score >= 0.0 && p.score <= 1.0))
      fail(Error::Kind::schema, where + ": score must lie in [0, 1]");
    p.box = Cuboid(center, dims, rot);
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

struct PredKey {
  double score;
  std::int64_t image_id;
  std::size_t seq;  // position in the input prediction list

  // Descending score; ties by image id then input order, so results are
  // independent of record shuffling up to the documented tie-breaks.
  bool operator<(const PredKey& o) const {
    if (score != o.score) return score > o.score;
    if (image_id != o.image_id) return image_id < o.image_id;
    return seq < o.seq;
  }
};

struct GroupTask {
  std::int64_t image_id;
  std::string category;
  std::vector<std::size_t> pred_seq;  // indices into the filtered pred list
  std::vector<std::size_t> gt_idx;    // indices into the gt record list
};

struct GroupResult {
  // outcome[band][tau][k] for the k-th prediction of the group in input order
  std::array<std::vector<std::vector<MatchOutcome>>, 4> outcome;
  std::array<std::uint64_t, 4> n_gt_counted{};
  std::uint64_t n_gt_rule_ignored = 0;
};

GroupResult match_group(const GroupTask& task, const std::vector<PredRecord>& preds,
                        const std::vector<GtRecord>& gts, const DatasetFile& ds,
                        const std::vector<double>& taus, const EvalConfig& config) {
  GroupResult res;
  const std::size_t np = task.pred_seq.size();
  const std::size_t ng = task.gt_idx.size();

  std::vector<Cuboid> pred_boxes, gt_boxes;
  pred_boxes.reserve(np);
  gt_boxes.reserve(ng);
  for (const std::size_t s : task.pred_seq) pred_boxes.push_back(preds[s].box);
  for (const std::size_t g : task.gt_idx) gt_boxes.push_back(gts[g].box);
  const IoUMatrix iou = iou3d_batched(pred_boxes, gt_boxes, 1);

  // Rule-based ignores are shared by every band; band filters stack on top.
  std::vector<bool> rule_ignored(ng, false);
  std::vector<int> gt_band(ng, -1);
  for (std::size_t j = 0; j < ng; ++j) {
    const GtRecord& gt = gts[task.gt_idx[j]];
    rule_ignored[j] = is_ignored(gt, ds.image(gt.image_id).height, config);
    gt_band[j] = band_of(gt.depth(), config.bands);
    if (rule_ignored[j]) ++res.n_gt_rule_ignored;
  }

  const std::vector<std::size_t> order = score_order(preds, &task.pred_seq);

  for (int band = 0; band < 4; ++band) {
    std::vector<bool> ignored(ng, false);
    for (std::size_t j = 0; j < ng; ++j) {
      ignored[j] = rule_ignored[j] || (band != kBandAll && gt_band[j] != band);
      if (!ignored[j]) ++res.n_gt_counted[band];
    }
    res.outcome[band].resize(taus.size());
    for (std::size_t t = 0; t < taus.size(); ++t) {
      auto& outcomes = res.outcome[band][t];
      outcomes.assign(np, MatchOutcome::false_positive);
      greedy_assign(iou, order, ignored, taus[t], outcomes, nullptr);
    }
  }
  return res;
}

}  // namespace

APReport evaluate(const DatasetFile& gt_ds, std::span<const PredRecord> preds_in,
                  const EvalConfig& config) {
  config.validate();

  // Matching runs on the tau grid plus the fixed 0.25 / 0.50 report columns.
  std::vector<double> taus_eval = config.taus;
  for (const double extra : {0.25, 0.50})
    if (!std::binary_search(config.taus.begin(), config.taus.end(), extra))
      taus_eval.push_back(extra);
  std::sort(taus_eval.begin(), taus_eval.end());
  std::vector<std::size_t> grid_pos;  // positions of config.taus inside taus_eval
  for (const double tau : config.taus)
    grid_pos.push_back(static_cast<std::size_t>(
        std::lower_bound(taus_eval.begin(), taus_eval.end(), tau) - taus_eval.begin()));
  const std::size_t pos25 = static_cast<std::size_t>(
      std::lower_bound(taus_eval.begin(), taus_eval.end(), 0.25) - taus_eval.begin());
  const std::size_t pos50 = static_cast<std::size_t>(
      std::lower_bound(taus_eval.begin(), taus_eval.end(), 0.50) - taus_eval.begin());

  APReport report;
  report.taus = config.taus;
  report.bands = config.bands;

  // Known categories: declared ones plus those present in the ground truth.
  std::set<std::string> known;
  for (const CategoryInfo& c : gt_ds.categories) known.insert(normalize_category(c.name));
  std::vector<GtRecord> gts = gt_records_from_dataset(gt_ds);
  for (GtRecord& g : gts) {
    g.category = normalize_category(g.category);
    known.insert(g.category);
  }

  std::vector<PredRecord> preds;
  preds.reserve(preds_in.size());
  for (const PredRecord& p : preds_in) {
    if (!(p.score >= 0.0 && p.score <= 1.0))
      fail(Error::Kind::invalid_argument, "prediction score must lie in [0, 1]");
    PredRecord q = p;
    q.category = normalize_category(q.category);
    if (!known.count(q.category)) {
      ++report.n_pred_unknown_category;
      continue;
    }
    preds.push_back(std::move(q));
  }
  report.n_pred = preds.size();
  report.n_gt = gts.size();

  // Group records by (category, image).
  std::map<std::pair<std::string, std::int64_t>, GroupTask> groups;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    auto& g = groups[{gts[i].category, gts[i].image_id}];
    g.category = gts[i].category;
    g.image_id = gts[i].image_id;
    g.gt_idx.push_back(i);
  }
  for (std::size_t i = 0; i < preds.size(); ++i) {
    auto& g = groups[{preds[i].category, preds[i].image_id}];
    g.category = preds[i].category;
    g.image_id = preds[i].image_id;
    g.pred_seq.push_back(i);
  }
  std::vector<const GroupTask*> tasks;
  tasks.reserve(groups.size());
  for (const auto& [key, task] : groups) tasks.push_back(&task);

  // Matching is independent per group; results land in pre-assigned slots so
  // the aggregation below is deterministic for any thread count.
  std::vector<GroupResult> results(tasks.size());
  const std::size_t want = std::min<std::size_t>(
      tasks.size(), config.threads > 0 ? static_cast<std::size_t>(config.threads)
                                       : std::max(1u, std::thread::hardware_concurrency()));
  if (want <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i)
      results[i] = match_group(*tasks[i], preds, gts, gt_ds, taus_eval, config);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (tasks.size() + want - 1) / want;
    for (std::size_t t = 0; t < want; ++t) {
      const std::size_t i0 = t * chunk;
      const std::size_t i1 = std::min(tasks.size(), i0 + chunk);
      if (i0 >= i1) break;
      pool.emplace_back([&, i0, i1] {
        for (std::size_t i = i0; i < i1; ++i)
          results[i] = match_group(*tasks[i], preds, gts, gt_ds, taus_eval, config);
      });
    }
    for (auto& th : pool) th.join();
  }

  // Aggregate per category.
  std::map<std::string, std::vector<std::size_t>> cat_groups;
  for (std::size_t i = 0; i < tasks.size(); ++i)
    cat_groups[tasks[i]->category].push_back(i);

  report.tp_at_tau.assign(config.taus.size(), 0);
  std::vector<std::optional<double>> overall_mean_src, overall_25, overall_50;
  std::array<std::vector<std::optional<double>>, 4> overall_band_src;

  for (auto& [category, members] : cat_groups) {
    CategoryReport cat;
    cat.category = category;

    // Rank this category's predictions globally.
    std::vector<std::pair<PredKey, std::pair<std::size_t, std::size_t>>> ranked;  // -> (group, local)
    for (const std::size_t gi : members) {
      const GroupTask& task = *tasks[gi];
      for (std::size_t k = 0; k < task.pred_seq.size(); ++k) {
        const std::size_t seq = task.pred_seq[k];
        ranked.push_back({{preds[seq].score, task.image_id, seq}, {gi, k}});
      }
    }
    std::sort(ranked.begin(), ranked.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    cat.n_pred = ranked.size();
    for (const std::size_t gi : members) cat.n_gt_ignored += results[gi].n_gt_rule_ignored;

    std::array<std::uint64_t, 4> n_gt_band{};
    for (const std::size_t gi : members)
      for (int band = 0; band < 4; ++band) n_gt_band[band] += results[gi].n_gt_counted[band];
    cat.n_gt = n_gt_band[kBandAll];

    std::array<std::vector<std::optional<double>>, 4> ap_eval;  // over taus_eval
    std::vector<MatchOutcome> outcomes(ranked.size());
    cat.tp_at_tau.assign(config.taus.size(), 0);
    for (int band = 0; band < 4; ++band) {
      ap_eval[band].resize(taus_eval.size());
      for (std::size_t t = 0; t < taus_eval.size(); ++t) {
        for (std::size_t k = 0; k < ranked.size(); ++k) {
          const auto [gi, local] = ranked[k].second;
          outcomes[k] = results[gi].outcome[band][t][local];
        }
        ap_eval[band][t] = average_precision(outcomes, n_gt_band[band], config.recall_samples);
        if (band == kBandAll) {
          // TP counts reported on the configured grid only.
          const auto it = std::find(grid_pos.begin(), grid_pos.end(), t);
          if (it != grid_pos.end()) {
            const std::size_t g = static_cast<std::size_t>(it - grid_pos.begin());
            cat.tp_at_tau[g] = static_cast<std::uint64_t>(
                std::count(outcomes.begin(), outcomes.end(), MatchOutcome::true_positive));
            report.tp_at_tau[g] += cat.tp_at_tau[g];
          }
        }
      }
      cat.ap[band].resize(config.taus.size());
      for (std::size_t g = 0; g < grid_pos.size(); ++g) cat.ap[band][g] = ap_eval[band][grid_pos[g]];
      cat.mean_ap[band] = mean_of_defined(cat.ap[band]);
    }
    cat.ap25 = ap_eval[kBandAll][pos25];
    cat.ap50 = ap_eval[kBandAll][pos50];

    report.n_gt_ignored += cat.n_gt_ignored;
    overall_mean_src.push_back(cat.mean_ap[kBandAll]);
    overall_25.push_back(cat.ap25);
    overall_50.push_back(cat.ap50);
    for (int band = 0; band < 4; ++band) overall_band_src[band].push_back(cat.mean_ap[band]);
    report.categories.push_back(std::move(cat));
  }

  report.mean_ap3d = mean_of_defined(overall_mean_src);
  report.ap3d_25 = mean_of_defined(overall_25);
  report.ap3d_50 = mean_of_defined(overall_50);
  for (int band = 0; band < 4; ++band)
    report.mean_ap_band[band] = mean_of_defined(overall_band_src[band]);
  return report;
}

EvalConfig eval_config_from_json(const std::string& text) {
  EvalConfig config;
  if (text.empty()) return config;
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object())
    fail(Error::Kind::schema, "eval config: invalid JSON object");
  static const std::set<std::string> known = {
      "taus",       "tau_min",           "tau_max",         "tau_step",
      "occlusion_threshold", "truncation_threshold", "tiny_rel_height",
      "near_max",   "medium_max",        "threads",         "recall_samples"};
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (!known.count(it.key())) fail(Error::Kind::schema, "eval config: unknown key '" + it.key() + "'");
  if (doc.contains("taus")) {
    config.taus = doc.at("taus").get<std::vector<double>>();
  } else if (doc.contains("tau_min") || doc.contains("tau_max") || doc.contains("tau_step")) {
    const double lo = doc.value("tau_min", 0.05);
    const double hi = doc.value("tau_max", 0.50);
    const double step = doc.value("tau_step", 0.05);
    config.taus = EvalConfig::tau_grid(lo, hi, step);
  }
  config.occlusion_threshold = doc.value("occlusion_threshold", config.occlusion_threshold);
  config.truncation_threshold = doc.value("truncation_threshold", config.truncation_threshold);
  config.tiny_rel_height = doc.value("tiny_rel_height", config.tiny_rel_height);
  config.bands.near_max = doc.value("near_max", config.bands.near_max);
  config.bands.medium_max = doc.value("medium_max", config.bands.medium_max);
  config.threads = doc.value("threads", config.threads);
  config.recall_samples = doc.value("recall_samples", config.recall_samples);
  config.validate();
  return config;
}

namespace {

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json opt_array(const std::vector<std::optional<double>>& values) {
  json out = json::array();
  for (const auto& v : values) out.push_back(opt_json(v));
  return out;
}

}  // namespace

std::string report_to_json(const APReport& report) {
  json doc;
  doc["taus"] = report.taus;
  doc["bands"] = {{"near_max", report.bands.near_max}, {"medium_max", report.bands.medium_max}};
  doc["counts"] = {{"gt", report.n_gt},
                   {"gt_ignored", report.n_gt_ignored},
                   {"predictions", report.n_pred},
                   {"predictions_unknown_category", report.n_pred_unknown_category},
                   {"tp_at_tau", report.tp_at_tau}};
  doc["overall"] = {{"mean_ap3d", opt_json(report.mean_ap3d)},
                    {"ap3d_25", opt_json(report.ap3d_25)},
                    {"ap3d_50", opt_json(report.ap3d_50)},
                    {"ap3d_near", opt_json(report.mean_ap_band[kBandNear])},
                    {"ap3d_medium", opt_json(report.mean_ap_band[kBandMedium])},
                    {"ap3d_far", opt_json(report.mean_ap_band[kBandFar])}};
  doc["categories"] = json::array();
  for (const CategoryReport& cat : report.categories) {
    json jc;
    jc["name"] = cat.category;
    jc["counts"] = {{"gt", cat.n_gt},
                    {"gt_ignored", cat.n_gt_ignored},
                    {"predictions", cat.n_pred},
                    {"tp_at_tau", cat.tp_at_tau}};
    jc["ap"] = {{"all", opt_array(cat.ap[kBandAll])},
                {"near", opt_array(cat.ap[kBandNear])},
                {"medium", opt_array(cat.ap[kBandMedium])},
                {"far", opt_array(cat.ap[kBandFar])}};
    jc["mean_ap"] = {{"all", opt_json(cat.mean_ap[kBandAll])},
                     {"near", opt_json(cat.mean_ap[kBandNear])},
                     {"medium", opt_json(cat.mean_ap[kBandMedium])},
                     {"far", opt_json(cat.mean_ap[kBandFar])}};
    jc["ap25"] = opt_json(cat.ap25);
    jc["ap50"] = opt_json(cat.ap50);
    doc["categories"].push_back(std::move(jc));
  }
  return doc.dump(2);
}

std::string report_to_csv(const APReport& report) {
  std::string out = "category,tau,band,ap\n";
  char buf[160];
  for (const CategoryReport& cat : report.categories)
    for (std::size_t t = 0; t < report.taus.size(); ++t)
      for (int band = 0; band < 4; ++band) {
        const auto& ap = cat.ap[band][t];
        if (ap)
          std::snprintf(buf, sizeof buf, "%s,%.17g,%s,%.17g\n", cat.category.c_str(),
                        report.taus[t], kBandNames[band], *ap);
        else
          std::snprintf(buf, sizeof buf, "%s,%.17g,%s,\n", cat.category.c_str(),
                        report.taus[t], kBandNames[band]);
        out += buf;
      }
  return out;
}

std::string report_table(const APReport& report) {
  auto cell = [](const std::optional<double>& v) {
    char buf[32];
    if (v)
      std::snprintf(buf, sizeof buf, "%8.4f", *v);
    else
      std::snprintf(buf, sizeof buf, "%8s", "-");
    return std::string(buf);
  };
  std::string out;
  char buf[200];
  std::snprintf(buf, sizeof buf, "%-24s%8s%8s%8s%8s%8s%8s\n", "category", "AP3D", "AP25",
                "AP50", "near", "med", "far");
  out += buf;
  for (const CategoryReport& cat : report.categories) {
    std::snprintf(buf, sizeof buf, "%-24s", cat.category.c_str());
    out += buf;
    out += cell(cat.mean_ap[kBandAll]) + cell(cat.ap25) + cell(cat.ap50) +
           cell(cat.mean_ap[kBandNear]) + cell(cat.mean_ap[kBandMedium]) +
           cell(cat.mean_ap[kBandFar]) + "\n";
  }
  std::snprintf(buf, sizeof buf, "%-24s", "overall");
  out += buf;
  out += cell(report.mean_ap3d) + cell(report.ap3d_25) + cell(report.ap3d_50) +
         cell(report.mean_ap_band[kBandNear]) + cell(report.mean_ap_band[kBandMedium]) +
         cell(report.mean_ap_band[kBandFar]) + "\n";
  return out;
}

}  // namespace cubeval
