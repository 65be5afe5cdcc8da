// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Heavier than the unit tests by design; the Monte-Carlo
// criterion alone samples 10^9 points.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "cubeval/eval.hpp"
#include "cubeval/losses.hpp"
#include "cubeval/sampling.hpp"

using namespace cubeval;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

Mat3 yaw(double a) {
  Mat3 r;
  r << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return r;
}

Cuboid aa_box(double x, double y, double z, double w, double h, double l) {
  return Cuboid(Vec3(x, y, z), Vec3(w, h, l), Mat3::Identity());
}

// ---------------------------------------------------------------- 1: oracle

void criterion_1_oracle_equivalence() {
  const double t0 = now_seconds();
  SplitMix64 rng(20240 + 1);
  const int pairs = 1000;
  const std::uint64_t samples = 1000000;
  int agree = 0;
  for (int i = 0; i < pairs; ++i) {
    const Cuboid a = random_cuboid(rng, Vec3(-1.5, -1.5, -1.5), Vec3(1.5, 1.5, 1.5), 0.1, 5.0);
    const Cuboid b = random_cuboid(rng, Vec3(-1.5, -1.5, -1.5), Vec3(1.5, 1.5, 1.5), 0.1, 5.0);
    const double exact = iou3d(a, b);
    const auto mc = mc_iou_oracle(a, b, samples, 7777 + i);
    if (std::abs(exact - mc.estimate) <= 4.0 * mc.std_error) ++agree;
  }
  const double dt = now_seconds() - t0;
  const double frac = static_cast<double>(agree) / pairs;
  char detail[160];
  std::snprintf(detail, sizeof detail, "%d/%d pairs within 4 stderr, %.1f s", agree, pairs, dt);
  report(1, "exact kernel agrees with the Monte-Carlo oracle", frac >= 0.99 && dt < 300.0,
         detail);
}

// ----------------------------------------------------- 2: closed-form match

void criterion_2_closed_form() {
  SplitMix64 rng(20240 + 2);
  double worst_aa = 0.0;
  for (int i = 0; i < 10000; ++i) {
    Vec3 da, db, ca, cb;
    for (int k = 0; k < 3; ++k) {
      da[k] = rng.uniform(0.1, 4.0);
      db[k] = rng.uniform(0.1, 4.0);
      ca[k] = rng.uniform(-2.0, 2.0);
      cb[k] = rng.uniform(-2.0, 2.0);
    }
    const Cuboid a(ca, da, Mat3::Identity());
    const Cuboid b(cb, db, Mat3::Identity());
    double inter = 1.0;
    for (int k = 0; k < 3; ++k) {
      const double lo = std::max(ca[k] - da[k] / 2, cb[k] - db[k] / 2);
      const double hi = std::min(ca[k] + da[k] / 2, cb[k] + db[k] / 2);
      inter *= std::max(0.0, hi - lo);
    }
    const double closed = inter / (a.volume() + b.volume() - inter);
    worst_aa = std::max(worst_aa, std::abs(iou3d(a, b) - closed));
  }

  double worst_yaw = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double yc = rng.uniform(-2, 2);
    const double h = rng.uniform(0.5, 2.0);
    const Cuboid a(Vec3(rng.uniform(-1, 1), yc, rng.uniform(-1, 1)),
                   Vec3(rng.uniform(0.3, 2), h, rng.uniform(0.3, 2)),
                   yaw(rng.uniform(0, 6.283185307179586)));
    const Cuboid b(Vec3(rng.uniform(-1, 1), yc, rng.uniform(-1, 1)),
                   Vec3(rng.uniform(0.3, 2), h, rng.uniform(0.3, 2)),
                   yaw(rng.uniform(0, 6.283185307179586)));
    worst_yaw = std::max(worst_yaw, std::abs(iou3d(a, b) - iou3d_approx_groundplane(a, b)));
  }
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "axis-aligned worst |diff| = %.3g (tol 1e-12); yaw-only worst = %.3g (tol 1e-9)",
                worst_aa, worst_yaw);
  report(2, "closed-form and approximation equivalences", worst_aa <= 1e-12 && worst_yaw <= 1e-9,
         detail);
}

// ------------------------------------------------- 3: rotated-cube fixture

void criterion_3_rotated_cube() {
  const Cuboid a(Vec3::Zero(), Vec3::Ones(), Mat3::Identity());
  const Cuboid b(Vec3::Zero(), Vec3::Ones(), yaw(M_PI / 4));
  const double expected = 0.70710678118654746;  // 2(sqrt2-1)/(2-2(sqrt2-1)) = 1/sqrt2
  const double got = iou3d(a, b);
  char detail[120];
  std::snprintf(detail, sizeof detail, "iou = %.15f, expected %.15f", got, expected);
  report(3, "unit cube vs 45-degree yaw rotation", std::abs(got - expected) <= 1e-9, detail);
}

// ------------------------------------------------------- 4: metric protocol

GtRecord make_gt(std::int64_t image, const std::string& cat, const Cuboid& box,
                 double bbox_h = 100.0) {
  GtRecord g;
  g.image_id = image;
  g.category = cat;
  g.box = box;
  g.bbox2d = {100.0, 100.0, 80.0, bbox_h};
  return g;
}

PredRecord make_pred(std::int64_t image, const std::string& cat, const Cuboid& box,
                     double score) {
  PredRecord p;
  p.image_id = image;
  p.category = cat;
  p.box = box;
  p.score = score;
  return p;
}

DatasetFile toy_dataset(const std::vector<GtRecord>& gts) {
  DatasetFile ds;
  std::set<std::int64_t> ids;
  for (const GtRecord& g : gts) ids.insert(g.image_id);
  for (const std::int64_t id : ids) {
    ImageInfo img;
    img.id = id;
    img.width = 640;
    img.height = 480;
    img.intrinsics.fx = img.intrinsics.fy = 500;
    img.intrinsics.px = 320;
    img.intrinsics.py = 240;
    img.intrinsics.height = 480;
    img.intrinsics.width = 640;
    ds.image_index[id] = ds.images.size();
    ds.images.push_back(img);
  }
  for (const GtRecord& g : gts) {
    AnnotationRecord a;
    a.image_id = g.image_id;
    a.category = g.category;
    a.bbox2d = g.bbox2d;
    a.center = g.box.center();
    a.rotation = g.box.rotation();
    a.dims = g.box.dims();
    a.occlusion = g.occlusion;
    a.truncation = g.truncation;
    ds.annotations.push_back(a);
  }
  return ds;
}

struct RandomFixture {
  std::vector<GtRecord> gts;
  std::vector<PredRecord> preds;
};

RandomFixture random_fixture(SplitMix64& rng, bool with_ignores) {
  RandomFixture fx;
  const char* cats[2] = {"car", "chair"};
  const int n_images = 1 + static_cast<int>(rng.next() % 3);
  for (int img = 1; img <= n_images; ++img)
    for (int c = 0; c < 2; ++c) {
      const int ng = static_cast<int>(rng.next() % 4);
      const int np = static_cast<int>(rng.next() % 5);
      for (int i = 0; i < ng; ++i) {
        GtRecord g = make_gt(img, cats[c],
                             aa_box(rng.uniform(-4, 4), rng.uniform(-1, 1), rng.uniform(1, 45),
                                    rng.uniform(0.5, 2.5), rng.uniform(0.5, 2.5),
                                    rng.uniform(0.5, 2.5)),
                             rng.uniform(40, 200));
        if (with_ignores && rng.uniform() < 0.25) g.occlusion = rng.uniform(0.7, 1.0);
        fx.gts.push_back(g);
      }
      for (int i = 0; i < np; ++i)
        fx.preds.push_back(make_pred(
            img, cats[c],
            aa_box(rng.uniform(-4.5, 4.5), rng.uniform(-1.2, 1.2), rng.uniform(1, 46),
                   rng.uniform(0.5, 2.5), rng.uniform(0.5, 2.5), rng.uniform(0.5, 2.5)),
            rng.uniform(0.01, 0.999)));
    }
  return fx;
}

void criterion_4_metric_protocol() {
  // Toy fixture: contained box of volume 13/64 = 0.203125 -> TP at the four
  // lowest thresholds of the 0.05:0.05:0.50 grid, mean AP3D = 0.4 exactly.
  const std::vector<GtRecord> toy_gts = {make_gt(1, "chair", aa_box(0, 0, 5, 1, 1, 1))};
  const std::vector<PredRecord> toy_preds = {
      make_pred(1, "chair", aa_box(0, 0, 5, 0.8125, 0.5, 0.5), 0.9)};
  const APReport toy = evaluate(toy_dataset(toy_gts), toy_preds, EvalConfig{});
  const bool toy_ok = toy.mean_ap3d.has_value() && *toy.mean_ap3d == 0.4;

  SplitMix64 rng(20240 + 4);
  int fixtures = 0, mono_bad = 0, neutral_bad = 0;
  while (fixtures < 500) {
    const RandomFixture fx = random_fixture(rng, true);
    if (fx.gts.empty()) continue;
    ++fixtures;
    const APReport a = evaluate(toy_dataset(fx.gts), fx.preds, EvalConfig{});
    for (const CategoryReport& cat : a.categories)
      for (std::size_t t = 1; t < a.taus.size(); ++t)
        if (cat.ap[kBandAll][t] && *cat.ap[kBandAll][t] > *cat.ap[kBandAll][t - 1] + 1e-15)
          ++mono_bad;

    auto gts = fx.gts;
    GtRecord extra = make_gt(fx.gts[0].image_id, fx.gts[0].category,
                             aa_box(800, 0, 600, 1, 1, 1));
    extra.occlusion = 0.9;
    gts.push_back(extra);
    const APReport b = evaluate(toy_dataset(gts), fx.preds, EvalConfig{});
    for (const CategoryReport& ca : a.categories)
      for (const CategoryReport& cb : b.categories) {
        if (ca.category != cb.category) continue;
        for (int band = 0; band < 4; ++band)
          for (std::size_t t = 0; t < a.taus.size(); ++t)
            if (ca.ap[band][t] != cb.ap[band][t]) ++neutral_bad;
      }
  }
  char detail[200];
  std::snprintf(detail, sizeof detail,
                "toy mean AP3D = %.17g (want 0.4 exactly); %d fixtures, %d monotonicity and "
                "%d neutrality violations",
                toy.mean_ap3d.value_or(-1.0), fixtures, mono_bad, neutral_bad);
  report(4, "AP3D protocol: toy grid value and property suites",
         toy_ok && mono_bad == 0 && neutral_bad == 0, detail);
}

// -------------------------------------------- 5: reference golden equality

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_5_reference_evaluator() {
  const std::string fixtures = CUBEVAL_FIXTURE_DIR;
  const std::string cli = CUBEVAL_CLI_PATH;
  const std::string out_base = std::string(CUBEVAL_BINARY_DIR) + "/acceptance_eval";
  const std::string cmd = "\"" + cli + "\" eval \"" + fixtures + "/eval_gt.json\" \"" +
                          fixtures + "/eval_pred.json\" --output \"" + out_base +
                          "\" > /dev/null";
  const int rc = std::system(cmd.c_str());
  const std::string produced = read_file(out_base + ".csv");
  const std::string golden = read_file(fixtures + "/golden_eval.csv");
  char detail[160];
  std::snprintf(detail, sizeof detail, "cli exit %d, %zu bytes vs %zu golden bytes, %s", rc,
                produced.size(), golden.size(),
                produced == golden ? "byte-identical" : "DIFFER");
  report(5, "cmd_eval output matches the independent reference golden",
         rc == 0 && !golden.empty() && produced == golden, detail);
}

// --------------------------------------------- 6: virtual-depth invariance

void criterion_6_virtual_depth() {
  SplitMix64 rng(20240 + 6);
  const VirtualCamera v;
  int exact_bad = 0;
  double worst_rel = 0.0, worst_consistency = 0.0;
  for (int i = 0; i < 10000; ++i) {
    Intrinsics k;
    k.fx = rng.uniform(300, 2000);
    k.fy = rng.uniform(300, 2000);
    k.px = rng.uniform(100, 900);
    k.py = rng.uniform(100, 900);
    k.height = rng.uniform(200, 2000);
    k.width = rng.uniform(200, 2000);
    const double z = rng.uniform(0.1, 100.0);
    const double zv = to_virtual_depth(z, k, v);

    // power-of-two scales: exponent-only changes, bitwise equality required
    const double s2 = std::ldexp(1.0, static_cast<int>(rng.next() % 17) - 8);
    if (to_virtual_depth(z, rescale(k, s2), v) != zv) ++exact_bad;

    // continuous scales: rounding of fy*s and H*s, ulp-level agreement
    const double s = rng.uniform(0.25, 4.0);
    const double zv_s = to_virtual_depth(z, rescale(k, s), v);
    worst_rel = std::max(worst_rel, std::abs(zv_s - zv) / zv);

    // projection-consistency chain
    const Vec3 pt(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(0.5, 60));
    const double y = k.fy * pt.y() / pt.z() + k.py;
    const double y_mapped = y * v.height / k.height;
    const double zv_pt = to_virtual_depth(pt.z(), k, v);
    const double y_virtual = v.focal * pt.y() / zv_pt + k.py * v.height / k.height;
    worst_consistency = std::max(worst_consistency, std::abs(y_virtual - y_mapped));
  }
  char detail[200];
  std::snprintf(detail, sizeof detail,
                "%d/10000 bitwise mismatches at power-of-two scales; continuous-scale worst "
                "rel diff %.3g (tol 1e-13); consistency worst %.3g (tol 1e-9)",
                exact_bad, worst_rel, worst_consistency);
  report(6, "virtual-depth invariance and projection consistency",
         exact_bad == 0 && worst_rel <= 1e-13 && worst_consistency <= 1e-9, detail);
}

// ------------------------------------------------------ 7: performance floor

void criterion_7_performance() {
  const auto preds = random_cuboids(501, 128);
  const auto gts = random_cuboids(502, 128);

  const double t0 = now_seconds();
  const IoUMatrix serial = iou3d_batched(preds, gts, 1);
  const double t_serial = now_seconds() - t0;

  bool identical = true;
  for (const int threads : {2, 3, 8}) {
    const IoUMatrix par = iou3d_batched(preds, gts, threads);
    if (par.values != serial.values) identical = false;
  }

  const unsigned hw = std::thread::hardware_concurrency();
  double speedup = 1.0;
  bool scaling_ok = true;
  std::string scaling_note;
  if (hw >= 2) {
    const int t_count = static_cast<int>(std::min(8u, hw));
    const double t1 = now_seconds();
    (void)iou3d_batched(preds, gts, t_count);
    const double t_par = now_seconds() - t1;
    speedup = t_serial / t_par;
    scaling_ok = speedup >= 0.45 * t_count;
    char buf[80];
    std::snprintf(buf, sizeof buf, "speedup %.2fx at %d threads (floor %.2fx)", speedup,
                  t_count, 0.45 * t_count);
    scaling_note = buf;
  } else {
    scaling_note = "single hardware thread: scaling clause not exercisable on this host";
  }

  char detail[240];
  std::snprintf(detail, sizeof detail,
                "128x128 in %.3f s single-threaded (floor 1 s); thread counts {2,3,8} %s; %s",
                t_serial, identical ? "bit-identical" : "DIFFER", scaling_note.c_str());
  report(7, "batched kernel performance floor and determinism",
         t_serial < 1.0 && identical && scaling_ok, detail);
}

// -------------------------------------------------- 8: rotation/loss suites

void criterion_8_rotation_losses() {
  SplitMix64 rng(20240 + 8);
  double worst_roundtrip = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Mat3 r = random_rotation(rng);
    const Mat3 back = rot6d_to_matrix(matrix_to_rot6d(r));
    worst_roundtrip = std::max(worst_roundtrip, (back - r).cwiseAbs().maxCoeff());
  }

  CategoryPriors priors;
  priors.mean_dims["chair"] = Vec3(0.9, 1.1, 0.8);
  DecodeContext ctx;
  ctx.roi = {270.0, 190.0, 100.0, 100.0};
  ctx.intrinsics.fx = ctx.intrinsics.fy = 500;
  ctx.intrinsics.px = 320;
  ctx.intrinsics.py = 240;
  ctx.intrinsics.height = 480;
  ctx.intrinsics.width = 640;
  ctx.priors = &priors;
  ctx.category = "chair";

  double worst_zero = 0.0;
  for (int i = 0; i < 50; ++i) {
    CubeParams gt;
    gt.u = rng.uniform(0.2, 0.8);
    gt.v = rng.uniform(0.2, 0.8);
    gt.z = rng.uniform(2, 40);
    gt.w_bar = rng.uniform(-0.5, 0.5);
    gt.h_bar = rng.uniform(-0.5, 0.5);
    gt.l_bar = rng.uniform(-0.5, 0.5);
    for (int j = 0; j < 6; ++j) gt.pose.p[j] = rng.uniform(-2, 2);
    if (gt.pose.p.head<3>().cross(gt.pose.p.tail<3>()).norm() <= 1e-6) continue;
    for (const LossGroup g : {LossGroup::uv, LossGroup::z, LossGroup::whl, LossGroup::pose})
      worst_zero = std::max(worst_zero, disentangled_loss(g, gt, gt, ctx));
  }

  double worst_chamfer = 0.0;
  for (int axis = 0; axis < 3; ++axis)
    for (int i = 0; i < 20; ++i) {
      const Cuboid c = random_cuboid(rng, Vec3(-5, -5, -5), Vec3(5, 5, 5), 0.4, 3.0);
      Mat3 flip = -Mat3::Identity();
      flip(axis, axis) = 1.0;
      const Cuboid rotated(c.center(), c.dims(), c.rotation() * flip);
      worst_chamfer = std::max(worst_chamfer, chamfer_corners(c.corners(), rotated.corners()));
    }

  // mu-argmin of the total loss vs the closed form, via golden-section scan
  double worst_argmin = 0.0;
  for (int i = 0; i < 20; ++i) {
    double parts[5];
    double sum = 0.0;
    for (double& p : parts) {
      p = rng.uniform(0.05, 3.0);
      sum += p;
    }
    const double expected = std::log(std::sqrt(2.0) * sum);
    auto f = [&](double mu) {
      return total_loss(parts[0], parts[1], parts[2], parts[3], parts[4], mu);
    };
    double lo = -6.0, hi = 6.0;
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    while (hi - lo > 1e-9) {
      const double m1 = hi - phi * (hi - lo);
      const double m2 = lo + phi * (hi - lo);
      if (f(m1) < f(m2))
        hi = m2;
      else
        lo = m1;
    }
    worst_argmin = std::max(worst_argmin, std::abs(0.5 * (lo + hi) - expected));
  }

  char detail[240];
  std::snprintf(detail, sizeof detail,
                "6D round-trip worst %.3g (tol 1e-12); pred=gt loss worst %.3g; pi-flip "
                "chamfer worst %.3g (tol 1e-12); mu-argmin worst %.3g (tol 1e-6)",
                worst_roundtrip, worst_zero, worst_chamfer, worst_argmin);
  report(8, "rotation and loss suites",
         worst_roundtrip <= 1e-12 && worst_zero <= 1e-12 && worst_chamfer <= 1e-12 &&
             worst_argmin <= 1e-6,
         detail);
}

}  // namespace

int main() {
  criterion_1_oracle_equivalence();
  criterion_2_closed_form();
  criterion_3_rotated_cube();
  criterion_4_metric_protocol();
  criterion_5_reference_evaluator();
  criterion_6_virtual_depth();
  criterion_7_performance();
  criterion_8_rotation_losses();
  std::printf("%d of 8 criteria passed\n", 8 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
