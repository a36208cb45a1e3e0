#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "amodal/backends.hpp"
#include "amodal/image.hpp"
#include "amodal/pipeline.hpp"

namespace amodal {

inline constexpr std::size_t kSsimWindow = 11;

/// Mean SSIM over every fully contained 11x11 Gaussian window (sigma 1.5) of
/// the luma channel, with K1 = 0.01, K2 = 0.03 and L = 255.
double ssim(const Image& a, const Image& b);

/// Visible-bbox crops of the original and of the completed canvas (read at
/// the placement offset); pixels outside `visible` are `bg` in both.
std::pair<Image, Image> visible_region_pair(const Image& original, const BinaryMask& visible,
                                            const Image& completed, const CanvasPlacement& p, Color bg = kWhite);

struct EvalCase {
  std::string name;  // image path as written in the manifest
  std::filesystem::path image;
  std::string query;
  std::optional<std::filesystem::path> visible_mask;
  std::optional<std::string> category;
};

/// JSON Lines, one {image, query, visible_mask?, category?} object per line.
/// Relative paths resolve against the manifest directory. Blank lines are
/// skipped. Throws ParseError naming the line on malformed input.
std::vector<EvalCase> load_manifest(const std::filesystem::path& path);

struct EvalRow {
  std::string name;
  std::optional<std::string> category;
  std::optional<double> clip;
  std::optional<double> lpips;
  std::optional<double> feature_sim;
  double ssim = 0.0;
  double runtime_s = 0.0;
  std::map<std::string, std::string> metric_errors;
};

struct EvalFailure {
  std::string name;
  std::string error;
};

struct MetricMeans {
  std::optional<double> clip;
  std::optional<double> lpips;
  std::optional<double> feature_sim;
  std::optional<double> ssim;
  std::optional<double> runtime_s;
};

struct EvalReport {
  std::vector<EvalRow> rows;  // manifest order
  std::vector<EvalFailure> failures;

  /// Means over the rows where each metric is present.
  MetricMeans aggregates() const;
};

/// `visible_mask`, when given, replaces the pipeline's visible mask as the
/// comparison region. SSIM is always computed; the other metrics only with a
/// backend, and their failures are recorded on the row.
EvalRow evaluate_case(const EvalCase& c, const Image& original, const PipelineResult& result,
                      MetricBackend* metrics, const std::optional<BinaryMask>& visible_mask = std::nullopt,
                      Color bg = kWhite);

struct BenchmarkOptions {
  std::size_t parallelism = 2;
};

/// Runs the pipeline and evaluation for each case with at most
/// `parallelism` cases in flight. Throws ValidationError on an empty manifest.
EvalReport run_benchmark(const std::vector<EvalCase>& cases, const PipelineConfig& cfg, const Backends& backends,
                         const BenchmarkOptions& opts = {});

/// Writes report.json and report.csv into `out_dir`.
void write_report(const EvalReport& report, const std::filesystem::path& out_dir);

}  // namespace amodal
