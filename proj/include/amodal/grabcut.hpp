#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "amodal/image.hpp"
#include "amodal/mask.hpp"

namespace amodal {

/// Values mirror the usual GC_BGD / GC_FGD / GC_PR_BGD / GC_PR_FGD numbering.
enum class TrimapLabel : std::uint8_t { SureBG = 0, SureFG = 1, ProbBG = 2, ProbFG = 3 };

inline bool is_foreground(TrimapLabel l) { return l == TrimapLabel::SureFG || l == TrimapLabel::ProbFG; }
inline bool is_sure(TrimapLabel l) { return l == TrimapLabel::SureFG || l == TrimapLabel::SureBG; }

class Trimap {
 public:
  Trimap(std::size_t width, std::size_t height, TrimapLabel fill = TrimapLabel::SureBG);
  /// Outside the rectangle is SureBG, inside ProbFG.
  static Trimap from_box(std::size_t width, std::size_t height, const Rect& box);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  TrimapLabel at(std::size_t x, std::size_t y) const { return labels_[y * width_ + x]; }
  TrimapLabel operator[](std::size_t i) const { return labels_[i]; }
  void set(std::size_t x, std::size_t y, TrimapLabel l) { labels_[y * width_ + x] = l; }
  std::size_t size() const noexcept { return labels_.size(); }

  /// Sure and probable foreground.
  BinaryMask foreground() const;
  /// Throws ValidationError unless there is at least one FG-side and one BG-side pixel.
  void validate() const;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<TrimapLabel> labels_;
};

struct GaussianComponent {
  double weight = 0.0;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d inverse = Eigen::Matrix3d::Identity();
  double log_det = 0.0;
};

/// Full-covariance RGB mixture. Covariances are regularized by kCovarianceEpsilon * I.
class Gmm {
 public:
  static constexpr double kCovarianceEpsilon = 1e-3;

  const std::vector<GaussianComponent>& components() const noexcept { return components_; }
  std::size_t size() const noexcept { return components_.size(); }

  /// Negative log score of `z` under component k, including the regularizer's
  /// prior term 0.5 * eps * tr(inverse). With that term the estimate in
  /// `estimate()` is the exact minimizer for fixed assignments.
  double component_cost(std::size_t k, const Eigen::Vector3d& z) const;
  std::size_t best_component(const Eigen::Vector3d& z) const;
  double cost(const Eigen::Vector3d& z) const { return component_cost(best_component(z), z); }

  /// Re-estimates from a hard assignment; components left without samples are dropped.
  static Gmm estimate(std::span<const Eigen::Vector3d> samples, std::span<const std::size_t> assignment,
                      std::size_t k);
  /// One assign-to-best-component / re-estimate pass.
  Gmm refit(std::span<const Eigen::Vector3d> samples) const;

 private:
  std::vector<GaussianComponent> components_;
};

/// k-means++ seeding (deterministic for a seed), Lloyd iterations, then one EM-style pass.
/// When fewer than k samples exist, k drops to the sample count and a warning is appended.
Gmm fit_gmm(std::span<const Eigen::Vector3d> samples, std::size_t k, std::uint64_t seed,
            std::vector<std::string>* warnings = nullptr);

inline constexpr double kBetaSentinel = 1e6;
/// 1 / (2 * mean squared color difference) over 8-connected neighbor pairs.
double beta_estimate(const Image& img);

/// s-t graph over a pixel grid; the source side is foreground.
struct GridGraph {
  enum Direction : std::size_t { kRight = 0, kDown = 1, kDownRight = 2, kDownLeft = 3 };

  GridGraph(std::size_t w, std::size_t h);

  std::size_t width;
  std::size_t height;
  std::vector<double> source_cap;
  std::vector<double> sink_cap;
  /// Undirected n-link weights from a pixel toward its right/down/diagonal neighbours.
  std::vector<std::array<double, 4>> nlinks;
};

struct CutResult {
  BinaryMask source_side;
  double cut_value = 0.0;
  double flow_value = 0.0;
};

CutResult min_cut(const GridGraph& g);
/// Cost of a labeling on `g` (source-side pixels set in `labels`).
double cut_cost(const GridGraph& g, const BinaryMask& labels);

struct GrabCutParams {
  int iterations = 5;
  std::size_t components = 5;
  double gamma = 50.0;
  std::uint64_t seed = 0;
};

struct GrabCutResult {
  BinaryMask mask;
  /// Total energy (data + smoothness) after each completed iteration.
  std::vector<double> energies;
  int iterations_run = 0;
  std::vector<std::string> warnings;
};

GrabCutResult grabcut_run(const Image& img, const Trimap& trimap, const GrabCutParams& params);

}  // namespace amodal
