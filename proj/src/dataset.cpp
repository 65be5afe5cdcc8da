#include "cubeval/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

namespace cubeval {

using nlohmann::json;

namespace {

json parse_text(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) fail(Error::Kind::schema, "invalid JSON document");
  return doc;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Error::Kind::io, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str());
}

[[noreturn]] void schema_fail(const std::string& where, const std::string& what) {
  fail(Error::Kind::schema, where + ": " + what);
}

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> required,
                std::initializer_list<const char*> optional) {
  if (!obj.is_object()) schema_fail(where, "expected an object");
  for (const char* key : required)
    if (!obj.contains(key)) schema_fail(where, std::string("missing required field '") + key + "'");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const auto known = [&](std::initializer_list<const char*> keys) {
      return std::any_of(keys.begin(), keys.end(),
                         [&](const char* k) { return it.key() == k; });
    };
    if (!known(required) && !known(optional))
      schema_fail(where, "unknown field '" + it.key() + "'");
  }
}

double get_number(const json& obj, const std::string& where, const char* key) {
  const json& v = obj.at(key);
  if (!v.is_number()) schema_fail(where, std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

std::int64_t get_integer(const json& obj, const std::string& where, const char* key) {
  const json& v = obj.at(key);
  if (!v.is_number_integer()) schema_fail(where, std::string("field '") + key + "' must be an integer");
  return v.get<std::int64_t>();
}

std::string get_string(const json& obj, const std::string& where, const char* key) {
  const json& v = obj.at(key);
  if (!v.is_string()) schema_fail(where, std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

template <std::size_t N>
std::array<double, N> get_array(const json& obj, const std::string& where, const char* key) {
  const json& v = obj.at(key);
  if (!v.is_array() || v.size() != N)
    schema_fail(where, std::string("field '") + key + "' must be an array of " + std::to_string(N) + " numbers");
  std::array<double, N> out;
  for (std::size_t i = 0; i < N; ++i) {
    if (!v[i].is_number()) schema_fail(where, std::string("field '") + key + "' must contain numbers");
    out[i] = v[i].get<double>();
  }
  return out;
}

Mat3 mat_from_row_major(const std::array<double, 9>& m) {
  Mat3 r;
  r << m[0], m[1], m[2], m[3], m[4], m[5], m[6], m[7], m[8];
  return r;
}

// Rotation ingest policy: deviations up to kRotationTol pass untouched, up
// to kRotationOkTol they are projected silently, up to kRotationRepairTol
// projected with a warning, beyond that the record is rejected.
Mat3 ingest_rotation(const Mat3& r, const std::string& where, LoadDiagnostics* diag) {
  const double dev = rotation_deviation(r);
  if (dev <= kRotationTol) return r;
  if (dev > kRotationRepairTol)
    fail(Error::Kind::geometry, where + ": rotation deviates from orthonormal by " +
                                    std::to_string(dev) + ", beyond repair tolerance");
  const Mat3 fixed = nearest_rotation(r);
  if (dev > kRotationOkTol && diag) {
    diag->warnings.push_back(where + ": rotation reorthonormalized (deviation " +
                             std::to_string(dev) + ")");
    ++diag->repaired_rotations;
  }
  return fixed;
}

}  // namespace

const ImageInfo& DatasetFile::image(std::int64_t id) const {
  auto it = image_index.find(id);
  if (it == image_index.end())
    fail(Error::Kind::referential, "unknown image id " + std::to_string(id));
  return images[it->second];
}

CategoryPriors DatasetFile::priors() const {
  CategoryPriors out;
  for (const CategoryInfo& c : categories)
    if (c.priors) out.mean_dims[c.name] = *c.priors;
  return out;
}

double rotation_deviation(const Mat3& m) {
  const double ortho = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
  return std::max(ortho, std::abs(m.determinant() - 1.0));
}

Mat3 nearest_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 flip = Mat3::Identity();
    flip(2, 2) = -1.0;
    r = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return r;
}

DatasetFile parse_dataset_json(const std::string& text, LoadDiagnostics* diag) {
  const json doc = parse_text(text);
  check_keys(doc, "dataset", {"images", "annotations"}, {"categories"});

  DatasetFile ds;

  const json& images = doc.at("images");
  if (!images.is_array()) schema_fail("dataset", "'images' must be an array");
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string where = "images[" + std::to_string(i) + "]";
    const json& jo = images[i];
    check_keys(jo, where, {"id", "width", "height"}, {"intrinsics", "source", "split"});
    ImageInfo info;
    info.id = get_integer(jo, where, "id");
    info.width = get_number(jo, where, "width");
    info.height = get_number(jo, where, "height");
    if (!(info.width > 0.0) || !(info.height > 0.0))
      schema_fail(where, "image size must be positive");
    if (jo.contains("intrinsics")) {
      const json& ji = jo.at("intrinsics");
      check_keys(ji, where + ".intrinsics", {"fx", "fy", "px", "py"}, {});
      info.intrinsics.fx = get_number(ji, where, "fx");
      info.intrinsics.fy = get_number(ji, where, "fy");
      info.intrinsics.px = get_number(ji, where, "px");
      info.intrinsics.py = get_number(ji, where, "py");
      info.intrinsics.height = info.height;
      info.intrinsics.width = info.width;
      if (!(info.intrinsics.fx > 0.0) || !(info.intrinsics.fy > 0.0))
        schema_fail(where, "focal lengths must be positive");
    } else {
      info.intrinsics = Intrinsics::fallback(info.height, info.width);
      if (diag) {
        diag->warnings.push_back(where + ": no intrinsics, using f = 2H fallback (estimated)");
        ++diag->estimated_intrinsics;
      }
    }
    if (jo.contains("source")) info.source = get_string(jo, where, "source");
    if (jo.contains("split")) info.split = get_string(jo, where, "split");
    if (ds.image_index.count(info.id)) schema_fail(where, "duplicate image id");
    ds.image_index[info.id] = ds.images.size();
    ds.images.push_back(std::move(info));
  }

  const json& anns = doc.at("annotations");
  if (!anns.is_array()) schema_fail("dataset", "'annotations' must be an array");
  for (std::size_t i = 0; i < anns.size(); ++i) {
    const std::string where = "annotations[" + std::to_string(i) + "]";
    const json& jo = anns[i];
    check_keys(jo, where, {"image_id", "category", "bbox2d", "center", "rotation", "dims"},
               {"occlusion", "truncation"});
    AnnotationRecord a;
    a.image_id = get_integer(jo, where, "image_id");
    if (!ds.image_index.count(a.image_id))
      fail(Error::Kind::referential, where + ": references unknown image id " + std::to_string(a.image_id));
    a.category = get_string(jo, where, "category");
    a.bbox2d = get_array<4>(jo, where, "bbox2d");
    if (!(a.bbox2d[2] > 0.0) || !(a.bbox2d[3] > 0.0))
      schema_fail(where, "2D box width and height must be positive");
    const auto center = get_array<3>(jo, where, "center");
    a.center = Vec3(center[0], center[1], center[2]);
    a.rotation = ingest_rotation(mat_from_row_major(get_array<9>(jo, where, "rotation")), where, diag);
    const auto dims = get_array<3>(jo, where, "dims");
    a.dims = Vec3(dims[0], dims[1], dims[2]);
    if (!(a.dims.minCoeff() > 0.0)) schema_fail(where, "dims must be positive");
    for (const char* key : {"occlusion", "truncation"}) {
      if (!jo.contains(key)) continue;
      const double v = get_number(jo, where, key);
      if (v < 0.0 || v > 1.0) schema_fail(where, std::string("'") + key + "' must lie in [0, 1]");
      (key[0] == 'o' ? a.occlusion : a.truncation) = v;
    }
    ds.annotations.push_back(std::move(a));
  }

  if (doc.contains("categories")) {
    const json& cats = doc.at("categories");
    if (!cats.is_array()) schema_fail("dataset", "'categories' must be an array");
    for (std::size_t i = 0; i < cats.size(); ++i) {
      const std::string where = "categories[" + std::to_string(i) + "]";
      const json& jo = cats[i];
      check_keys(jo, where, {"name"}, {"priors"});
      CategoryInfo c;
      c.name = get_string(jo, where, "name");
      if (c.name.empty()) schema_fail(where, "category name must not be empty");
      if (jo.contains("priors")) {
        const auto p = get_array<3>(jo, where, "priors");
        c.priors = Vec3(p[0], p[1], p[2]);
        if (!(c.priors->minCoeff() > 0.0)) schema_fail(where, "priors must be positive");
      }
      if (std::any_of(ds.categories.begin(), ds.categories.end(),
                      [&](const CategoryInfo& o) { return o.name == c.name; }))
        schema_fail(where, "duplicate category name");
      ds.categories.push_back(std::move(c));
    }
  }

  return ds;
}

DatasetFile load_dataset(const std::string& path, LoadDiagnostics* diag) {
  std::ifstream in(path);
  if (!in) fail(Error::Kind::io, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_dataset_json(ss.str(), diag);
}

std::string serialize_dataset(const DatasetFile& ds) {
  json doc;
  doc["images"] = json::array();
  for (const ImageInfo& info : ds.images) {
    json jo{{"id", info.id}, {"width", info.width}, {"height", info.height}};
    if (!info.intrinsics.estimated)
      jo["intrinsics"] = {{"fx", info.intrinsics.fx},
                          {"fy", info.intrinsics.fy},
                          {"px", info.intrinsics.px},
                          {"py", info.intrinsics.py}};
    if (!info.source.empty()) jo["source"] = info.source;
    if (!info.split.empty()) jo["split"] = info.split;
    doc["images"].push_back(std::move(jo));
  }
  doc["annotations"] = json::array();
  for (const AnnotationRecord& a : ds.annotations) {
    json jo{{"image_id", a.image_id},
            {"category", a.category},
            {"bbox2d", a.bbox2d},
            {"center", {a.center.x(), a.center.y(), a.center.z()}},
            {"dims", {a.dims.x(), a.dims.y(), a.dims.z()}}};
    json rot = json::array();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) rot.push_back(a.rotation(r, c));
    jo["rotation"] = std::move(rot);
    if (a.occlusion) jo["occlusion"] = *a.occlusion;
    if (a.truncation) jo["truncation"] = *a.truncation;
    doc["annotations"].push_back(std::move(jo));
  }
  if (!ds.categories.empty()) {
    doc["categories"] = json::array();
    for (const CategoryInfo& c : ds.categories) {
      json jo{{"name", c.name}};
      if (c.priors) jo["priors"] = {c.priors->x(), c.priors->y(), c.priors->z()};
      doc["categories"].push_back(std::move(jo));
    }
  }
  return doc.dump(2);
}

std::vector<Cuboid> load_cuboid_list(const std::string& path) {
  const json doc = read_json_file(path);
  check_keys(doc, "cuboid list", {"cuboids"}, {});
  const json& list = doc.at("cuboids");
  if (!list.is_array()) schema_fail("cuboid list", "'cuboids' must be an array");
  std::vector<Cuboid> out;
  out.reserve(list.size());
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string where = "cuboids[" + std::to_string(i) + "]";
    const json& jo = list[i];
    check_keys(jo, where, {"center", "dims", "rotation"}, {});
    const auto center = get_array<3>(jo, where, "center");
    const auto dims = get_array<3>(jo, where, "dims");
    const Mat3 rot = ingest_rotation(mat_from_row_major(get_array<9>(jo, where, "rotation")), where, nullptr);
    if (!(dims[0] > 0.0 && dims[1] > 0.0 && dims[2] > 0.0)) schema_fail(where, "dims must be positive");
    out.emplace_back(Vec3(center[0], center[1], center[2]), Vec3(dims[0], dims[1], dims[2]), rot);
  }
  return out;
}

// ------------------------------------------------------------- statistics

namespace {

struct SamplePair {
  double y_norm;
  double rel_size;
  double z;
};

std::vector<SamplePair> projection_samples(const DatasetFile& ds) {
  std::vector<SamplePair> out;
  out.reserve(ds.annotations.size());
  for (const AnnotationRecord& a : ds.annotations) {
    const ImageInfo& img = ds.image(a.image_id);
    if (!(a.center.z() > 0.0)) continue;
    const Vec2 pix = project(a.center, img.intrinsics);
    out.push_back({pix.y() / img.height,
                   std::sqrt((a.bbox2d[2] * a.bbox2d[3]) / (img.width * img.height)),
                   a.center.z()});
  }
  return out;
}

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  // Zero variance leaves the correlation undefined; the floor absorbs the
  // fp residue of summing identical values.
  auto degenerate = [n](double s, double mean) {
    const double floor = 1e-12 * (1.0 + std::abs(mean));
    return s <= floor * floor * static_cast<double>(n);
  };
  if (degenerate(sxx, mx) || degenerate(syy, my)) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

CorrelationReport correlations_from_samples(const std::vector<SamplePair>& samples) {
  CorrelationReport out;
  out.samples = samples.size();
  if (samples.size() < 2) return out;
  std::vector<double> y, s, z;
  y.reserve(samples.size());
  s.reserve(samples.size());
  z.reserve(samples.size());
  for (const SamplePair& p : samples) {
    y.push_back(p.y_norm);
    s.push_back(p.rel_size);
    z.push_back(p.z);
  }
  out.y_norm_vs_z = pearson(y, z);
  out.rel_size_vs_z = pearson(s, z);
  return out;
}

}  // namespace

CorrelationReport correlations(const DatasetFile& ds) {
  const auto samples = projection_samples(ds);
  if (samples.size() < 2)
    fail(Error::Kind::insufficient_data, "need at least 2 annotations with valid projections");
  return correlations_from_samples(samples);
}

StatsReport compute_stats(const DatasetFile& ds, const StatsConfig& config) {
  if (config.center_bins < 1 || config.topview_bins < 1 || config.size_bins < 1)
    fail(Error::Kind::invalid_argument, "histogram bin counts must be positive");
  if (!(config.depth_max > config.depth_min))
    fail(Error::Kind::invalid_argument, "depth range must be increasing");

  StatsReport rep;
  rep.config = config;
  rep.n_images = ds.images.size();
  rep.n_annotations = ds.annotations.size();

  rep.center_xy = {config.center_bins, config.center_bins, 0.0, 1.0, 0.0, 1.0,
                   std::vector<std::uint64_t>(
                       static_cast<std::size_t>(config.center_bins) * config.center_bins, 0),
                   0};
  rep.topview_xz = {config.topview_bins, config.topview_bins,
                    config.depth_min, config.depth_max,
                    -config.depth_max, config.depth_max,
                    std::vector<std::uint64_t>(
                        static_cast<std::size_t>(config.topview_bins) * config.topview_bins, 0),
                    0};
  rep.rel_size = {config.size_bins, 0.0, 1.0,
                  std::vector<std::uint64_t>(config.size_bins, 0), 0};

  auto bin_of = [](double v, double lo, double hi, int bins) -> int {
    if (!(v >= lo) || !(v < hi)) return -1;
    return std::min(bins - 1, static_cast<int>((v - lo) / (hi - lo) * bins));
  };

  for (const AnnotationRecord& a : ds.annotations) {
    const ImageInfo& img = ds.image(a.image_id);

    bool center_binned = false;
    if (a.center.z() > 0.0) {
      const Vec2 pix = project(a.center, img.intrinsics);
      const int col = bin_of(pix.x() / img.width, 0.0, 1.0, config.center_bins);
      const int row = bin_of(pix.y() / img.height, 0.0, 1.0, config.center_bins);
      if (row >= 0 && col >= 0) {
        ++rep.center_xy.counts[static_cast<std::size_t>(row) * config.center_bins + col];
        center_binned = true;
      }
    }
    if (!center_binned) ++rep.center_xy.spill;

    const int zrow = bin_of(a.center.z(), config.depth_min, config.depth_max, config.topview_bins);
    const int xcol = bin_of(a.center.x(), -config.depth_max, config.depth_max, config.topview_bins);
    if (zrow >= 0 && xcol >= 0)
      ++rep.topview_xz.counts[static_cast<std::size_t>(zrow) * config.topview_bins + xcol];
    else
      ++rep.topview_xz.spill;

    const double rel = std::sqrt((a.bbox2d[2] * a.bbox2d[3]) / (img.width * img.height));
    const int sbin = bin_of(rel, 0.0, 1.0, config.size_bins);
    if (sbin >= 0)
      ++rep.rel_size.counts[sbin];
    else
      ++rep.rel_size.spill;

    ++rep.category_counts[a.category];
  }

  rep.correlations = correlations_from_samples(projection_samples(ds));
  return rep;
}

namespace {

json hist2d_json(const Histogram2D& h) {
  return {{"rows", h.rows},          {"cols", h.cols},
          {"row_range", {h.row_lo, h.row_hi}}, {"col_range", {h.col_lo, h.col_hi}},
          {"spill", h.spill},        {"counts", h.counts}};
}

json opt_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

std::string stats_to_json(const StatsReport& rep) {
  json doc;
  doc["n_images"] = rep.n_images;
  doc["n_annotations"] = rep.n_annotations;
  doc["config"] = {{"center_bins", rep.config.center_bins},
                   {"topview_bins", rep.config.topview_bins},
                   {"size_bins", rep.config.size_bins},
                   {"depth_min", rep.config.depth_min},
                   {"depth_max", rep.config.depth_max}};
  doc["category_counts"] = rep.category_counts;
  doc["correlations"] = {{"y_norm_vs_z", opt_json(rep.correlations.y_norm_vs_z)},
                         {"rel_size_vs_z", opt_json(rep.correlations.rel_size_vs_z)},
                         {"samples", rep.correlations.samples}};
  doc["center_xy"] = hist2d_json(rep.center_xy);
  doc["topview_xz"] = hist2d_json(rep.topview_xz);
  doc["rel_size"] = {{"bins", rep.rel_size.bins},
                     {"range", {rep.rel_size.lo, rep.rel_size.hi}},
                     {"spill", rep.rel_size.spill},
                     {"counts", rep.rel_size.counts}};
  return doc.dump(2);
}

namespace {

std::string hist2d_csv(const Histogram2D& h, const char* row_name, const char* col_name) {
  std::string out = std::string(row_name) + "," + col_name + ",count\n";
  char line[96];
  for (int r = 0; r < h.rows; ++r)
    for (int c = 0; c < h.cols; ++c) {
      std::snprintf(line, sizeof line, "%d,%d,%llu\n", r, c,
                    static_cast<unsigned long long>(h.at(r, c)));
      out += line;
    }
  return out;
}

}  // namespace

std::string stats_histogram_csv(const StatsReport& rep, const std::string& name) {
  if (name == "center_xy") return hist2d_csv(rep.center_xy, "row_y", "col_x");
  if (name == "topview_xz") return hist2d_csv(rep.topview_xz, "row_z", "col_x");
  if (name == "rel_size") {
    std::string out = "bin,lo,hi,count\n";
    char line[128];
    const double width = (rep.rel_size.hi - rep.rel_size.lo) / rep.rel_size.bins;
    for (int b = 0; b < rep.rel_size.bins; ++b) {
      std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%llu\n", b,
                    rep.rel_size.lo + b * width, rep.rel_size.lo + (b + 1) * width,
                    static_cast<unsigned long long>(rep.rel_size.counts[b]));
      out += line;
    }
    return out;
  }
  if (name == "categories") {
    std::string out = "category,count\n";
    for (const auto& [cat, count] : rep.category_counts)
      out += cat + "," + std::to_string(count) + "\n";
    return out;
  }
  fail(Error::Kind::invalid_argument, "unknown histogram '" + name + "'");
}

}  // namespace cubeval
