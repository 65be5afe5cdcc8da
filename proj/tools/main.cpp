// cubeval command-line tool: evaluation, pairwise IoU, dataset statistics
// and kernel benchmarking on top of the shared-library C API.

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cubeval.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

int exit_code_of(cubeval_status status) {
  switch (status) {
    case CUBEVAL_OK:
      return kExitOk;
    case CUBEVAL_ERROR_INVALID_ARGUMENT:
      return kExitUsage;
    case CUBEVAL_ERROR_DATA:
      return kExitData;
    case CUBEVAL_ERROR_INTERNAL:
      return kExitInternal;
  }
  return kExitInternal;
}

[[nodiscard]] int report_failure(cubeval_status status, const char* what) {
  std::fprintf(stderr, "cubeval: %s: %s\n", what, cubeval_last_error());
  return exit_code_of(status);
}

bool write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return false;
  out << content;
  return out.good();
}

std::string owned_string(char* s) {
  std::string out = s ? s : "";
  cubeval_string_free(s);
  return out;
}

int env_threads_default() {
  const char* env = std::getenv("CUBEVAL_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  return std::atoi(env);
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string matrix_csv(const std::vector<double>& values, size_t rows, size_t cols) {
  std::string out;
  for (size_t i = 0; i < rows; ++i) {
    for (size_t j = 0; j < cols; ++j) {
      if (j) out += ',';
      out += format_g17(values[i * cols + j]);
    }
    out += '\n';
  }
  return out;
}

std::uint64_t fnv1a(const std::vector<double>& values) {
  std::uint64_t h = 1469598103934665603ull;
  const auto* bytes = reinterpret_cast<const unsigned char*>(values.data());
  for (size_t i = 0; i < values.size() * sizeof(double); ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
  return h;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ------------------------------------------------------------------- eval

struct EvalArgs {
  std::string gt_path, pred_path, output;
  std::string format = "json";
  double tau_min = 0.05, tau_max = 0.50, tau_step = 0.05;
  std::vector<double> bands;  // near,medium cutoffs
  int threads = env_threads_default();
};

int run_eval(const EvalArgs& args) {
  nlohmann::json config{{"tau_min", args.tau_min},
                        {"tau_max", args.tau_max},
                        {"tau_step", args.tau_step},
                        {"threads", args.threads}};
  if (!args.bands.empty()) {
    if (args.bands.size() != 2) {
      std::fprintf(stderr, "cubeval: --bands expects two cutoffs: near_max,medium_max\n");
      return kExitUsage;
    }
    config["near_max"] = args.bands[0];
    config["medium_max"] = args.bands[1];
  }

  cubeval_report* report = nullptr;
  const std::string config_text = config.dump();
  if (const auto st = cubeval_evaluate_files(args.gt_path.c_str(), args.pred_path.c_str(),
                                             config_text.c_str(), &report);
      st != CUBEVAL_OK)
    return report_failure(st, "evaluation failed");

  char* warn = nullptr;
  cubeval_report_warnings(report, &warn);
  const std::string warnings = owned_string(warn);
  if (!warnings.empty()) std::fprintf(stderr, "%s\n", warnings.c_str());

  char* table = nullptr;
  cubeval_report_table(report, &table);
  std::fputs(owned_string(table).c_str(), stdout);

  char* json_text = nullptr;
  char* csv_text = nullptr;
  cubeval_report_json(report, &json_text);
  cubeval_report_csv(report, &csv_text);
  const std::string json_out = owned_string(json_text);
  const std::string csv_out = owned_string(csv_text);
  cubeval_report_free(report);

  if (!args.output.empty()) {
    if (!write_file(args.output + ".json", json_out) ||
        !write_file(args.output + ".csv", csv_out)) {
      std::fprintf(stderr, "cubeval: cannot write '%s.{json,csv}'\n", args.output.c_str());
      return kExitInternal;
    }
  } else if (args.format == "csv") {
    std::fputs(csv_out.c_str(), stdout);
  } else {
    std::fputs(json_out.c_str(), stdout);
    std::fputc('\n', stdout);
  }
  return kExitOk;
}

// -------------------------------------------------------------------- iou

struct IouArgs {
  std::string path_a, path_b, output;
  bool approx = false;
  std::uint64_t oracle_samples = 0;
  std::uint64_t seed = 0;
  int threads = env_threads_default();
};

int run_iou(const IouArgs& args) {
  double* boxes_a = nullptr;
  double* boxes_b = nullptr;
  size_t count_a = 0, count_b = 0;
  if (const auto st = cubeval_load_cuboids(args.path_a.c_str(), &boxes_a, &count_a);
      st != CUBEVAL_OK)
    return report_failure(st, args.path_a.c_str());
  if (const auto st = cubeval_load_cuboids(args.path_b.c_str(), &boxes_b, &count_b);
      st != CUBEVAL_OK) {
    cubeval_buffer_free(boxes_a);
    return report_failure(st, args.path_b.c_str());
  }

  std::vector<double> matrix(count_a * count_b, 0.0);
  const auto st = cubeval_iou3d_batched(boxes_a, count_a, boxes_b, count_b, args.threads,
                                        args.approx ? 1 : 0, matrix.data());
  if (st != CUBEVAL_OK) {
    cubeval_buffer_free(boxes_a);
    cubeval_buffer_free(boxes_b);
    return report_failure(st, "iou computation failed");
  }

  std::string out;
  if (args.oracle_samples == 0) {
    out = matrix_csv(matrix, count_a, count_b);
  } else {
    out = "row,col,iou,mc_estimate,mc_stderr\n";
    for (size_t i = 0; i < count_a; ++i)
      for (size_t j = 0; j < count_b; ++j) {
        double est = 0.0, se = 0.0;
        const std::uint64_t pair_seed = args.seed + i * count_b + j;
        if (const auto mst =
                cubeval_iou3d_mc(boxes_a + i * CUBEVAL_BOX_DOUBLES,
                                 boxes_b + j * CUBEVAL_BOX_DOUBLES, args.oracle_samples,
                                 pair_seed, &est, &se);
            mst != CUBEVAL_OK) {
          cubeval_buffer_free(boxes_a);
          cubeval_buffer_free(boxes_b);
          return report_failure(mst, "oracle failed");
        }
        out += std::to_string(i) + "," + std::to_string(j) + "," +
               format_g17(matrix[i * count_b + j]) + "," + format_g17(est) + "," +
               format_g17(se) + "\n";
      }
  }
  cubeval_buffer_free(boxes_a);
  cubeval_buffer_free(boxes_b);

  if (!args.output.empty()) {
    if (!write_file(args.output, out)) {
      std::fprintf(stderr, "cubeval: cannot write '%s'\n", args.output.c_str());
      return kExitInternal;
    }
  } else {
    std::fputs(out.c_str(), stdout);
  }
  return kExitOk;
}

// ------------------------------------------------------------------ stats

struct StatsArgs {
  std::string dataset, output;
  std::vector<double> depth_range;
  int bins = 64;
};

int run_stats(const StatsArgs& args) {
  nlohmann::json config{
      {"center_bins", args.bins}, {"topview_bins", args.bins}, {"size_bins", args.bins}};
  if (!args.depth_range.empty()) {
    config["depth_min"] = args.depth_range[0];
    config["depth_max"] = args.depth_range[1];
  }

  cubeval_stats* stats = nullptr;
  const std::string config_text = config.dump();
  if (const auto st = cubeval_stats_files(args.dataset.c_str(), config_text.c_str(), &stats);
      st != CUBEVAL_OK)
    return report_failure(st, "stats failed");

  char* warn = nullptr;
  cubeval_stats_warnings(stats, &warn);
  const std::string warnings = owned_string(warn);
  if (!warnings.empty()) std::fprintf(stderr, "%s\n", warnings.c_str());

  char* json_text = nullptr;
  cubeval_stats_json(stats, &json_text);
  const std::string json_out = owned_string(json_text);

  // correlation summary line
  {
    const auto doc = nlohmann::json::parse(json_out);
    const auto& corr = doc.at("correlations");
    auto show = [](const nlohmann::json& v) {
      return v.is_null() ? std::string("undefined") : format_g17(v.get<double>());
    };
    std::printf("correlations over %" PRIu64 " samples: y_norm vs z = %s, rel_size vs z = %s\n",
                corr.at("samples").get<std::uint64_t>(), show(corr.at("y_norm_vs_z")).c_str(),
                show(corr.at("rel_size_vs_z")).c_str());
  }

  int rc = kExitOk;
  if (!args.output.empty()) {
    bool ok = write_file(args.output + ".json", json_out);
    for (const char* name : {"center_xy", "topview_xz", "rel_size", "categories"}) {
      char* csv_text = nullptr;
      if (cubeval_stats_csv(stats, name, &csv_text) != CUBEVAL_OK) {
        ok = false;
        break;
      }
      ok = ok && write_file(args.output + "_" + name + ".csv", owned_string(csv_text));
    }
    if (!ok) {
      std::fprintf(stderr, "cubeval: cannot write stats outputs at '%s'\n", args.output.c_str());
      rc = kExitInternal;
    }
  } else {
    std::fputs(json_out.c_str(), stdout);
    std::fputc('\n', stdout);
  }
  cubeval_stats_free(stats);
  return rc;
}

// ------------------------------------------------------------------ bench

struct BenchArgs {
  std::size_t pairs = 16384;
  int threads = env_threads_default();
  std::uint64_t seed = 7;
  std::uint64_t oracle_samples = 100000;
  std::string format = "text";
};

int run_bench(const BenchArgs& args) {
  const size_t n = std::max<size_t>(
      1, static_cast<size_t>(std::llround(std::sqrt(static_cast<double>(args.pairs)))));
  std::vector<double> boxes_a(n * CUBEVAL_BOX_DOUBLES), boxes_b(n * CUBEVAL_BOX_DOUBLES);
  cubeval_random_cuboids(args.seed, n, boxes_a.data());
  cubeval_random_cuboids(args.seed + 1, n, boxes_b.data());
  const size_t total = n * n;

  auto timed_matrix = [&](int threads, int approx, std::vector<double>& out) {
    out.assign(total, 0.0);
    const auto t0 = std::chrono::steady_clock::now();
    const auto st = cubeval_iou3d_batched(boxes_a.data(), n, boxes_b.data(), n, threads,
                                          approx, out.data());
    const double dt = seconds_since(t0);
    return st == CUBEVAL_OK ? dt : -1.0;
  };

  std::vector<double> serial, threaded, approx;
  const double t_serial = timed_matrix(1, 0, serial);
  const int threads = args.threads > 0 ? args.threads : 8;
  const double t_threaded = timed_matrix(threads, 0, threaded);
  const double t_approx = timed_matrix(1, 1, approx);
  if (t_serial < 0 || t_threaded < 0 || t_approx < 0)
    return report_failure(CUBEVAL_ERROR_INTERNAL, "benchmark failed");

  const bool identical =
      std::memcmp(serial.data(), threaded.data(), total * sizeof(double)) == 0;

  const size_t oracle_pairs = std::min<size_t>(n, 32);
  const auto t0 = std::chrono::steady_clock::now();
  for (size_t i = 0; i < oracle_pairs; ++i) {
    double est = 0.0, se = 0.0;
    cubeval_iou3d_mc(boxes_a.data() + i * CUBEVAL_BOX_DOUBLES,
                     boxes_b.data() + i * CUBEVAL_BOX_DOUBLES, args.oracle_samples,
                     args.seed + i, &est, &se);
  }
  const double t_oracle = seconds_since(t0);

  const double rate_serial = total / t_serial;
  const double rate_threaded = total / t_threaded;
  const double rate_approx = total / t_approx;
  const double rate_oracle = oracle_pairs / t_oracle;
  const std::uint64_t checksum = fnv1a(serial);

  if (args.format == "json") {
    nlohmann::json doc{{"pairs", total},
                       {"grid", n},
                       {"seed", args.seed},
                       {"threads", threads},
                       {"exact_1thread_sec", t_serial},
                       {"exact_1thread_pairs_per_sec", rate_serial},
                       {"exact_threaded_sec", t_threaded},
                       {"exact_threaded_pairs_per_sec", rate_threaded},
                       {"approx_pairs_per_sec", rate_approx},
                       {"oracle_pairs", oracle_pairs},
                       {"oracle_samples", args.oracle_samples},
                       {"oracle_pairs_per_sec", rate_oracle},
                       {"threaded_bit_identical", identical},
                       {"checksum_fnv1a", checksum}};
    std::printf("%s\n", doc.dump(2).c_str());
  } else {
    std::printf("pairs                  : %zu (%zux%zu grid, seed %" PRIu64 ")\n", total, n, n,
                args.seed);
    std::printf("exact, 1 thread        : %.3f s  (%.0f pairs/s)\n", t_serial, rate_serial);
    std::printf("exact, %2d threads      : %.3f s  (%.0f pairs/s)\n", threads, t_threaded,
                rate_threaded);
    std::printf("approx, 1 thread       : %.3f s  (%.0f pairs/s)\n", t_approx, rate_approx);
    std::printf("mc oracle (%7" PRIu64 " pts): %zu pairs in %.3f s  (%.1f pairs/s)\n",
                args.oracle_samples, oracle_pairs, t_oracle, rate_oracle);
    std::printf("threaded bit-identical : %s\n", identical ? "yes" : "NO");
    std::printf("checksum (fnv1a)       : %016" PRIx64 "\n", checksum);
  }
  return identical ? kExitOk : kExitInternal;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Oriented-cuboid IoU kernels and 3D detection evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cubeval_version()));

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate predictions against ground truth (AP3D)");
  eval_cmd->add_option("gt", eval_args.gt_path, "Ground-truth dataset JSON")->required();
  eval_cmd->add_option("pred", eval_args.pred_path, "Predictions JSON")->required();
  eval_cmd->add_option("--tau-min", eval_args.tau_min, "Lowest IoU threshold");
  eval_cmd->add_option("--tau-max", eval_args.tau_max, "Highest IoU threshold");
  eval_cmd->add_option("--tau-step", eval_args.tau_step, "IoU threshold step");
  eval_cmd->add_option("--bands", eval_args.bands, "Depth band cutoffs: near_max,medium_max")
      ->delimiter(',');
  eval_cmd->add_option("--threads", eval_args.threads, "Worker threads (0 = auto)");
  eval_cmd->add_option("--output", eval_args.output, "Write BASE.json and BASE.csv");
  eval_cmd->add_option("--format", eval_args.format, "Stdout payload without --output")
      ->check(CLI::IsMember({"json", "csv"}));

  IouArgs iou_args;
  auto* iou_cmd = app.add_subcommand("iou", "Pairwise IoU matrix of two cuboid-list files");
  iou_cmd->add_option("boxes_a", iou_args.path_a, "First cuboid-list JSON")->required();
  iou_cmd->add_option("boxes_b", iou_args.path_b, "Second cuboid-list JSON")->required();
  iou_cmd->add_flag("--approx", iou_args.approx, "Ground-plane approximation kernel");
  iou_cmd->add_option("--oracle", iou_args.oracle_samples,
                      "Long-format output with Monte-Carlo estimates at N samples per pair");
  iou_cmd->add_option("--seed", iou_args.seed, "Oracle seed");
  iou_cmd->add_option("--threads", iou_args.threads, "Worker threads (0 = auto)");
  iou_cmd->add_option("--output", iou_args.output, "Write CSV here instead of stdout");

  StatsArgs stats_args;
  auto* stats_cmd = app.add_subcommand("stats", "Dataset layout statistics and correlations");
  stats_cmd->add_option("dataset", stats_args.dataset, "Dataset JSON")->required();
  stats_cmd->add_option("--depth-range", stats_args.depth_range, "Top-view z range: MIN MAX")
      ->expected(2);
  stats_cmd->add_option("--bins", stats_args.bins, "Histogram resolution");
  stats_cmd->add_option("--output", stats_args.output,
                        "Write BASE.json plus BASE_<histogram>.csv files");

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "Benchmark the IoU kernels");
  bench_cmd->add_option("--pairs", bench_args.pairs, "Approximate pair count (grid = sqrt)");
  bench_cmd->add_option("--threads", bench_args.threads, "Threaded run width (0 = 8)");
  bench_cmd->add_option("--seed", bench_args.seed, "Box generation seed");
  bench_cmd->add_option("--oracle-samples", bench_args.oracle_samples,
                        "Monte-Carlo samples per oracle pair");
  bench_cmd->add_option("--format", bench_args.format, "Report format")
      ->check(CLI::IsMember({"text", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (eval_cmd->parsed()) return run_eval(eval_args);
    if (iou_cmd->parsed()) return run_iou(iou_args);
    if (stats_cmd->parsed()) return run_stats(stats_args);
    if (bench_cmd->parsed()) return run_bench(bench_args);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "cubeval: %s\n", e.what());
    return kExitInternal;
  }
  return kExitUsage;
}
