#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <string>
#include <vector>

#include "cubeval.h"

namespace {

const std::string kFixtures = CUBEVAL_FIXTURE_DIR;

// center, dims, row-major rotation
std::vector<double> flat_box(double cx, double cy, double cz, double w, double h, double l) {
  return {cx, cy, cz, w, h, l, 1, 0, 0, 0, 1, 0, 0, 0, 1};
}

}  // namespace

TEST_CASE("c api iou kernels") {
  const auto a = flat_box(0, 0, 0, 1, 1, 1);
  const auto b = flat_box(0.5, 0, 0, 1, 1, 1);

  double iou = -1.0;
  REQUIRE(cubeval_iou3d(a.data(), a.data(), &iou) == CUBEVAL_OK);
  CHECK(iou == doctest::Approx(1.0).epsilon(1e-12));
  REQUIRE(cubeval_iou3d(a.data(), b.data(), &iou) == CUBEVAL_OK);
  CHECK(iou == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  double approx = -1.0;
  REQUIRE(cubeval_iou3d_approx(a.data(), b.data(), &approx) == CUBEVAL_OK);
  CHECK(approx == doctest::Approx(iou).epsilon(1e-9));

  double est = 0, se = 0;
  REQUIRE(cubeval_iou3d_mc(a.data(), b.data(), 200000, 9, &est, &se) == CUBEVAL_OK);
  CHECK(std::abs(est - 1.0 / 3.0) < 4 * se);
}

TEST_CASE("c api argument validation") {
  double iou = 0.0;
  CHECK(cubeval_iou3d(nullptr, nullptr, &iou) == CUBEVAL_ERROR_INVALID_ARGUMENT);
  CHECK(std::string(cubeval_last_error()).size() > 0);

  auto bad = flat_box(0, 0, 0, -1, 1, 1);
  const auto ok = flat_box(0, 0, 0, 1, 1, 1);
  CHECK(cubeval_iou3d(bad.data(), ok.data(), &iou) == CUBEVAL_ERROR_INVALID_ARGUMENT);

  CHECK(cubeval_iou3d_mc(ok.data(), ok.data(), 0, 1, &iou, nullptr) ==
        CUBEVAL_ERROR_INVALID_ARGUMENT);

  // success clears the error message
  CHECK(cubeval_iou3d(ok.data(), ok.data(), &iou) == CUBEVAL_OK);
  CHECK(std::string(cubeval_last_error()).empty());
}

TEST_CASE("c api batched matches scalar calls") {
  std::vector<double> boxes_a(8 * CUBEVAL_BOX_DOUBLES), boxes_b(8 * CUBEVAL_BOX_DOUBLES);
  REQUIRE(cubeval_random_cuboids(3, 8, boxes_a.data()) == CUBEVAL_OK);
  REQUIRE(cubeval_random_cuboids(4, 8, boxes_b.data()) == CUBEVAL_OK);

  std::vector<double> matrix(64), threaded(64);
  REQUIRE(cubeval_iou3d_batched(boxes_a.data(), 8, boxes_b.data(), 8, 1, 0, matrix.data()) ==
          CUBEVAL_OK);
  REQUIRE(cubeval_iou3d_batched(boxes_a.data(), 8, boxes_b.data(), 8, 4, 0, threaded.data()) ==
          CUBEVAL_OK);
  CHECK(std::memcmp(matrix.data(), threaded.data(), 64 * sizeof(double)) == 0);

  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      double one = -1;
      REQUIRE(cubeval_iou3d(boxes_a.data() + i * CUBEVAL_BOX_DOUBLES,
                            boxes_b.data() + j * CUBEVAL_BOX_DOUBLES, &one) == CUBEVAL_OK);
      CHECK(one == matrix[i * 8 + j]);
    }
}

TEST_CASE("c api random cuboids are deterministic per seed") {
  std::vector<double> a(4 * CUBEVAL_BOX_DOUBLES), b(4 * CUBEVAL_BOX_DOUBLES);
  REQUIRE(cubeval_random_cuboids(42, 4, a.data()) == CUBEVAL_OK);
  REQUIRE(cubeval_random_cuboids(42, 4, b.data()) == CUBEVAL_OK);
  CHECK(a == b);
  REQUIRE(cubeval_random_cuboids(43, 4, b.data()) == CUBEVAL_OK);
  CHECK(a != b);
}

TEST_CASE("c api cuboid list loading") {
  double* boxes = nullptr;
  size_t count = 0;
  REQUIRE(cubeval_load_cuboids((kFixtures + "/boxes_a.json").c_str(), &boxes, &count) ==
          CUBEVAL_OK);
  CHECK(count == 2);
  CHECK(boxes[3] == 1.0);  // dims.w of the first box
  cubeval_buffer_free(boxes);

  CHECK(cubeval_load_cuboids("/nonexistent.json", &boxes, &count) == CUBEVAL_ERROR_DATA);
}

TEST_CASE("c api end-to-end evaluation") {
  cubeval_report* report = nullptr;
  REQUIRE(cubeval_evaluate_files((kFixtures + "/eval_gt.json").c_str(),
                                 (kFixtures + "/eval_pred.json").c_str(), nullptr,
                                 &report) == CUBEVAL_OK);
  char* csv = nullptr;
  REQUIRE(cubeval_report_csv(report, &csv) == CUBEVAL_OK);
  const std::string csv_text = csv;
  cubeval_string_free(csv);
  CHECK(csv_text.rfind("category,tau,band,ap\n", 0) == 0);
  CHECK(csv_text.find("car") != std::string::npos);
  CHECK(csv_text.find("pedestrian") != std::string::npos);

  char* json_text = nullptr;
  REQUIRE(cubeval_report_json(report, &json_text) == CUBEVAL_OK);
  CHECK(std::string(json_text).find("mean_ap3d") != std::string::npos);
  cubeval_string_free(json_text);

  char* table = nullptr;
  REQUIRE(cubeval_report_table(report, &table) == CUBEVAL_OK);
  CHECK(std::string(table).find("overall") != std::string::npos);
  cubeval_string_free(table);
  cubeval_report_free(report);

  // schema problems surface as data errors
  CHECK(cubeval_evaluate_files((kFixtures + "/eval_gt.json").c_str(),
                               (kFixtures + "/eval_gt.json").c_str(), nullptr,
                               &report) == CUBEVAL_ERROR_DATA);
  // bad config is an invalid argument
  CHECK(cubeval_evaluate_files((kFixtures + "/eval_gt.json").c_str(),
                               (kFixtures + "/eval_pred.json").c_str(),
                               "{\"tau_min\": -1}", &report) == CUBEVAL_ERROR_INVALID_ARGUMENT);
}

TEST_CASE("c api stats") {
  cubeval_stats* stats = nullptr;
  REQUIRE(cubeval_stats_files((kFixtures + "/dataset_mini.json").c_str(),
                              "{\"depth_max\": 20}", &stats) == CUBEVAL_OK);
  char* json_text = nullptr;
  REQUIRE(cubeval_stats_json(stats, &json_text) == CUBEVAL_OK);
  CHECK(std::string(json_text).find("center_xy") != std::string::npos);
  cubeval_string_free(json_text);

  char* csv = nullptr;
  REQUIRE(cubeval_stats_csv(stats, "categories", &csv) == CUBEVAL_OK);
  CHECK(std::string(csv).find("chair,1") != std::string::npos);
  cubeval_string_free(csv);
  CHECK(cubeval_stats_csv(stats, "bogus", &csv) == CUBEVAL_ERROR_INVALID_ARGUMENT);
  cubeval_stats_free(stats);
}

TEST_CASE("c api surfaces loader warnings") {
  cubeval_stats* stats = nullptr;
  REQUIRE(cubeval_stats_files((kFixtures + "/dataset_warns.json").c_str(), nullptr, &stats) ==
          CUBEVAL_OK);
  char* warn = nullptr;
  REQUIRE(cubeval_stats_warnings(stats, &warn) == CUBEVAL_OK);
  const std::string warnings = warn;
  cubeval_string_free(warn);
  cubeval_stats_free(stats);
  CHECK(warnings.find("reorthonormalized") != std::string::npos);
  CHECK(warnings.find("fallback") != std::string::npos);

  // a clean dataset produces no warnings
  cubeval_report* report = nullptr;
  REQUIRE(cubeval_evaluate_files((kFixtures + "/eval_gt.json").c_str(),
                                 (kFixtures + "/eval_pred.json").c_str(), nullptr,
                                 &report) == CUBEVAL_OK);
  REQUIRE(cubeval_report_warnings(report, &warn) == CUBEVAL_OK);
  CHECK(std::string(warn).empty());
  cubeval_string_free(warn);
  cubeval_report_free(report);
}

TEST_CASE("c api version string") {
  CHECK(std::string(cubeval_version()) == "0.1.0");
}
