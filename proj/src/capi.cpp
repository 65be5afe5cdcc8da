#include "cubeval.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>
#include <vector>

#include <json.hpp>

#include "cubeval/dataset.hpp"
#include "cubeval/eval.hpp"
#include "cubeval/intersect.hpp"
#include "cubeval/sampling.hpp"

namespace {

thread_local std::string g_last_error;

cubeval_status status_of(const cubeval::Error& e) {
  using Kind = cubeval::Error::Kind;
  switch (e.kind()) {
    case Kind::invalid_argument:
      return CUBEVAL_ERROR_INVALID_ARGUMENT;
    case Kind::schema:
    case Kind::referential:
    case Kind::geometry:
    case Kind::degenerate_rotation:
    case Kind::non_positive_depth:
    case Kind::behind_camera:
    case Kind::insufficient_data:
    case Kind::io:
      return CUBEVAL_ERROR_DATA;
  }
  return CUBEVAL_ERROR_INTERNAL;
}

template <typename Fn>
cubeval_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return CUBEVAL_OK;
  } catch (const cubeval::Error& e) {
    g_last_error = e.what();
    return status_of(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CUBEVAL_ERROR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return CUBEVAL_ERROR_INTERNAL;
  }
}

cubeval::Cuboid box_from_flat(const double* b) {
  if (b == nullptr)
    cubeval::fail(cubeval::Error::Kind::invalid_argument, "box pointer must not be null");
  cubeval::Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = b[6 + 3 * i + j];
  return cubeval::Cuboid({b[0], b[1], b[2]}, {b[3], b[4], b[5]}, r);
}

void box_to_flat(const cubeval::Cuboid& c, double* out) {
  out[0] = c.center().x();
  out[1] = c.center().y();
  out[2] = c.center().z();
  out[3] = c.dims().x();
  out[4] = c.dims().y();
  out[5] = c.dims().z();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out[6 + 3 * i + j] = c.rotation()(i, j);
}

std::vector<cubeval::Cuboid> boxes_from_flat(const double* data, size_t count) {
  if (count > 0 && data == nullptr)
    cubeval::fail(cubeval::Error::Kind::invalid_argument, "box array must not be null");
  std::vector<cubeval::Cuboid> out;
  out.reserve(count);
  for (size_t i = 0; i < count; ++i) out.push_back(box_from_flat(data + i * CUBEVAL_BOX_DOUBLES));
  return out;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require_out(const void* p) {
  if (p == nullptr)
    cubeval::fail(cubeval::Error::Kind::invalid_argument, "output pointer must not be null");
}

}  // namespace

namespace {

std::string join_warnings(const cubeval::LoadDiagnostics& diag) {
  std::string out;
  for (const std::string& w : diag.warnings) {
    out += w;
    out += '\n';
  }
  if (!out.empty()) out.pop_back();
  return out;
}

}  // namespace

struct cubeval_report {
  cubeval::APReport report;
  std::string warnings;
};

struct cubeval_stats {
  cubeval::StatsReport report;
  std::string warnings;
};

extern "C" {

const char* cubeval_version(void) { return "0.1.0"; }

const char* cubeval_last_error(void) { return g_last_error.c_str(); }

cubeval_status cubeval_iou3d(const double* box_a, const double* box_b, double* out_iou) {
  return guarded([&] {
    require_out(out_iou);
    *out_iou = cubeval::iou3d(box_from_flat(box_a), box_from_flat(box_b));
  });
}

cubeval_status cubeval_iou3d_approx(const double* box_a, const double* box_b,
                                    double* out_iou) {
  return guarded([&] {
    require_out(out_iou);
    *out_iou = cubeval::iou3d_approx_groundplane(box_from_flat(box_a), box_from_flat(box_b));
  });
}

cubeval_status cubeval_iou3d_batched(const double* boxes_a, size_t count_a,
                                     const double* boxes_b, size_t count_b, int threads,
                                     int approx, double* out) {
  return guarded([&] {
    if (count_a * count_b > 0) require_out(out);
    const auto a = boxes_from_flat(boxes_a, count_a);
    const auto b = boxes_from_flat(boxes_b, count_b);
    const auto m = cubeval::iou3d_batched(
        a, b, threads, approx ? cubeval::IoUKernel::groundplane : cubeval::IoUKernel::exact);
    std::memcpy(out, m.values.data(), m.values.size() * sizeof(double));
  });
}

cubeval_status cubeval_iou3d_mc(const double* box_a, const double* box_b, uint64_t samples,
                                uint64_t seed, double* out_estimate, double* out_std_error) {
  return guarded([&] {
    require_out(out_estimate);
    const auto est = cubeval::mc_iou_oracle(box_from_flat(box_a), box_from_flat(box_b),
                                            samples, seed);
    *out_estimate = est.estimate;
    if (out_std_error) *out_std_error = est.std_error;
  });
}

cubeval_status cubeval_random_cuboids(uint64_t seed, size_t count, double* out) {
  return guarded([&] {
    if (count > 0) require_out(out);
    const auto boxes = cubeval::random_cuboids(seed, count);
    for (size_t i = 0; i < boxes.size(); ++i)
      box_to_flat(boxes[i], out + i * CUBEVAL_BOX_DOUBLES);
  });
}

cubeval_status cubeval_load_cuboids(const char* path, double** out_boxes, size_t* out_count) {
  return guarded([&] {
    require_out(out_boxes);
    require_out(out_count);
    if (path == nullptr)
      cubeval::fail(cubeval::Error::Kind::invalid_argument, "path must not be null");
    const auto boxes = cubeval::load_cuboid_list(path);
    double* flat =
        static_cast<double*>(std::malloc(sizeof(double) * CUBEVAL_BOX_DOUBLES *
                                         std::max<size_t>(1, boxes.size())));
    if (flat == nullptr) throw std::bad_alloc();
    for (size_t i = 0; i < boxes.size(); ++i) box_to_flat(boxes[i], flat + i * CUBEVAL_BOX_DOUBLES);
    *out_boxes = flat;
    *out_count = boxes.size();
  });
}

void cubeval_buffer_free(double* buffer) { std::free(buffer); }

cubeval_status cubeval_evaluate_files(const char* gt_path, const char* pred_path,
                                      const char* config_json, cubeval_report** out) {
  return guarded([&] {
    require_out(out);
    if (gt_path == nullptr || pred_path == nullptr)
      cubeval::fail(cubeval::Error::Kind::invalid_argument, "paths must not be null");
    const cubeval::EvalConfig config =
        cubeval::eval_config_from_json(config_json ? config_json : "");
    cubeval::LoadDiagnostics diag;
    const cubeval::DatasetFile gt = cubeval::load_dataset(gt_path, &diag);
    const auto preds = cubeval::load_predictions(pred_path, gt, &diag);
    auto* handle =
        new cubeval_report{cubeval::evaluate(gt, preds, config), join_warnings(diag)};
    *out = handle;
  });
}

cubeval_status cubeval_report_json(const cubeval_report* report, char** out) {
  return guarded([&] {
    require_out(out);
    if (report == nullptr)
      cubeval::fail(cubeval::Error::Kind::invalid_argument, "report must not be null");
    *out = dup_string(cubeval::report_to_json(report->report));
  });
}

cubeval_status cubeval_report_csv(const cubeval_report* report, char** out) {
  return guarded([&] {
    require_out(out);
    if (report == nullptr)
      cubeval::fail(cubeval::Error::Kind::invalid_argument, "report must not be null");
    *out = dup_string(cubeval::report_to_csv(report->report));
  });
}

cubeval_status cubeval_report_table(const cubeval_report* report, char** out) {
  return guarded([&] {
    require_out(out);
    if (report == nullptr)
      cubeval::fail(cubeval::Error::Kind::invalid_argument, "report must not be null");
    *out = dup_string(cubeval::report_table(report->report));
  });
}

cubeval_status cubeval_report_warnings(const cubeval_report* report, char** out) {
  return guarded([&] {
    require_out(out);
    if (report == nullptr)
      cubeval::fail(cubeval::Error::Kind::invalid_argument, "report must not be null");
    *out = dup_string(report->warnings);
  });
}

void cubeval_report_free(cubeval_report* report) { delete report; }

cubeval_status cubeval_stats_files(const char* dataset_path, const char* config_json,
                                   cubeval_stats** out) {
  return guarded([&] {
    require_out(out);
    if (dataset_path == nullptr)
      cubeval::fail(cubeval::Error::Kind::invalid_argument, "path must not be null");
    cubeval::StatsConfig config;
    if (config_json != nullptr && config_json[0] != '\0') {
      const auto doc = nlohmann::json::parse(std::string(config_json), nullptr, false);
      if (doc.is_discarded() || !doc.is_object())
        cubeval::fail(cubeval::Error::Kind::schema, "stats config: invalid JSON object");
      config.center_bins = doc.value("center_bins", config.center_bins);
      config.topview_bins = doc.value("topview_bins", config.topview_bins);
      config.size_bins = doc.value("size_bins", config.size_bins);
      config.depth_min = doc.value("depth_min", config.depth_min);
      config.depth_max = doc.value("depth_max", config.depth_max);
    }
    cubeval::LoadDiagnostics diag;
    const cubeval::DatasetFile ds = cubeval::load_dataset(dataset_path, &diag);
    auto* handle = new cubeval_stats{cubeval::compute_stats(ds, config), join_warnings(diag)};
    *out = handle;
  });
}

cubeval_status cubeval_stats_json(const cubeval_stats* stats, char** out) {
  return guarded([&] {
    require_out(out);
    if (stats == nullptr)
      cubeval::fail(cubeval::Error::Kind::invalid_argument, "stats must not be null");
    *out = dup_string(cubeval::stats_to_json(stats->report));
  });
}

cubeval_status cubeval_stats_csv(const cubeval_stats* stats, const char* histogram,
                                 char** out) {
  return guarded([&] {
    require_out(out);
    if (stats == nullptr || histogram == nullptr)
      cubeval::fail(cubeval::Error::Kind::invalid_argument, "stats and histogram must not be null");
    *out = dup_string(cubeval::stats_histogram_csv(stats->report, histogram));
  });
}

cubeval_status cubeval_stats_warnings(const cubeval_stats* stats, char** out) {
  return guarded([&] {
    require_out(out);
    if (stats == nullptr)
      cubeval::fail(cubeval::Error::Kind::invalid_argument, "stats must not be null");
    *out = dup_string(stats->warnings);
  });
}

void cubeval_stats_free(cubeval_stats* stats) { delete stats; }

void cubeval_string_free(char* s) { std::free(s); }

}  // extern "C"
