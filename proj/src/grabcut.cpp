#include "amodal/grabcut.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "amodal/error.hpp"

namespace amodal {

namespace {

// Portable [0,1) draw; std::uniform_real_distribution differs between standard libraries.
double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Eigen::Vector3d to_vec(Color c) { return {double(c.r), double(c.g), double(c.b)}; }

std::vector<std::size_t> kmeans_pp(std::span<const Eigen::Vector3d> samples, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t n = samples.size();
  std::vector<Eigen::Vector3d> centers;
  centers.push_back(samples[std::min(n - 1, static_cast<std::size_t>(unit_draw(rng) * double(n)))]);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (samples[i] - centers.back()).squaredNorm());
      total += d2[i];
    }
    if (total <= 0.0) break;  // fewer distinct colors than k
    double target = unit_draw(rng) * total;
    std::size_t pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      target -= d2[i];
      if (target < 0.0) {
        pick = i;
        break;
      }
    }
    centers.push_back(samples[pick]);
  }

  std::vector<std::size_t> assign(n, 0);
  for (int iter = 0; iter < 10; ++iter) {
    bool changed = iter == 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < centers.size(); ++c) {
        const double d = (samples[i] - centers[c]).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[i] != best) changed = true;
      assign[i] = best;
    }
    if (!changed) break;
    std::vector<Eigen::Vector3d> sums(centers.size(), Eigen::Vector3d::Zero());
    std::vector<std::size_t> counts(centers.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums[assign[i]] += samples[i];
      ++counts[assign[i]];
    }
    for (std::size_t c = 0; c < centers.size(); ++c) {
      if (counts[c] > 0) centers[c] = sums[c] / double(counts[c]);
    }
  }
  return assign;
}

}  // namespace

// --- Trimap ---------------------------------------------------------------

Trimap::Trimap(std::size_t width, std::size_t height, TrimapLabel fill)
    : width_(width), height_(height), labels_(width * height, fill) {
  if (width == 0 || height == 0) throw ValidationError("Trimap: zero dimension");
}

Trimap Trimap::from_box(std::size_t width, std::size_t height, const Rect& box) {
  Trimap t(width, height, TrimapLabel::SureBG);
  for (std::size_t y = box.y; y < std::min(height, box.y + box.height); ++y) {
    for (std::size_t x = box.x; x < std::min(width, box.x + box.width); ++x) t.set(x, y, TrimapLabel::ProbFG);
  }
  return t;
}

BinaryMask Trimap::foreground() const {
  BinaryMask m(width_, height_);
  for (std::size_t y = 0; y < height_; ++y) {
    for (std::size_t x = 0; x < width_; ++x) m.set(x, y, is_foreground(at(x, y)));
  }
  return m;
}

void Trimap::validate() const {
  bool fg = false, bg = false;
  for (auto l : labels_) {
    (is_foreground(l) ? fg : bg) = true;
  }
  if (!fg || !bg) throw ValidationError("Trimap: needs at least one foreground and one background pixel");
}

// --- Gmm ------------------------------------------------------------------

double Gmm::component_cost(std::size_t k, const Eigen::Vector3d& z) const {
  const auto& c = components_[k];
  const Eigen::Vector3d d = z - c.mean;
  return -std::log(c.weight) + 0.5 * c.log_det + 0.5 * d.dot(c.inverse * d) +
         0.5 * kCovarianceEpsilon * c.inverse.trace();
}

std::size_t Gmm::best_component(const Eigen::Vector3d& z) const {
  std::size_t best = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const double c = component_cost(k, z);
    if (c < best_cost) {
      best_cost = c;
      best = k;
    }
  }
  return best;
}

Gmm Gmm::estimate(std::span<const Eigen::Vector3d> samples, std::span<const std::size_t> assignment,
                  std::size_t k) {
  std::vector<Eigen::Vector3d> sums(k, Eigen::Vector3d::Zero());
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    sums[assignment[i]] += samples[i];
    ++counts[assignment[i]];
  }
  std::vector<Eigen::Matrix3d> scatter(k, Eigen::Matrix3d::Zero());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::size_t a = assignment[i];
    const Eigen::Vector3d d = samples[i] - sums[a] / double(counts[a]);
    scatter[a] += d * d.transpose();
  }
  Gmm g;
  const double total = static_cast<double>(samples.size());
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    GaussianComponent comp;
    const double n = static_cast<double>(counts[c]);
    comp.weight = n / total;
    comp.mean = sums[c] / n;
    comp.covariance = scatter[c] / n + kCovarianceEpsilon * Eigen::Matrix3d::Identity();
    comp.inverse = comp.covariance.inverse();
    comp.log_det = std::log(comp.covariance.determinant()) + 3.0 * std::log(2.0 * std::numbers::pi);
    g.components_.push_back(comp);
  }
  return g;
}

Gmm Gmm::refit(std::span<const Eigen::Vector3d> samples) const {
  std::vector<std::size_t> assign(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) assign[i] = best_component(samples[i]);
  return estimate(samples, assign, components_.size());
}

Gmm fit_gmm(std::span<const Eigen::Vector3d> samples, std::size_t k, std::uint64_t seed,
            std::vector<std::string>* warnings) {
  if (samples.empty()) throw ValidationError("fit_gmm: no samples");
  if (k == 0) throw ValidationError("fit_gmm: k must be positive");
  if (samples.size() < k) {
    if (warnings) {
      warnings->push_back("fit_gmm: reducing components from " + std::to_string(k) + " to " +
                          std::to_string(samples.size()));
    }
    k = samples.size();
  }
  const auto assign = kmeans_pp(samples, k, seed);
  return Gmm::estimate(samples, assign, k).refit(samples);
}

// --- beta -----------------------------------------------------------------

double beta_estimate(const Image& img) {
  const std::size_t w = img.width(), h = img.height();
  double sum = 0.0;
  std::size_t pairs = 0;
  auto acc = [&](std::size_t x0, std::size_t y0, std::size_t x1, std::size_t y1) {
    sum += (to_vec(img.color_at(x0, y0)) - to_vec(img.color_at(x1, y1))).squaredNorm();
    ++pairs;
  };
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (x + 1 < w) acc(x, y, x + 1, y);
      if (y + 1 < h) acc(x, y, x, y + 1);
      if (x + 1 < w && y + 1 < h) acc(x, y, x + 1, y + 1);
      if (x > 0 && y + 1 < h) acc(x, y, x - 1, y + 1);
    }
  }
  if (pairs == 0 || sum <= 0.0) return kBetaSentinel;
  return 1.0 / (2.0 * sum / double(pairs));
}

// --- max-flow / min-cut ---------------------------------------------------

GridGraph::GridGraph(std::size_t w, std::size_t h)
    : width(w), height(h), source_cap(w * h, 0.0), sink_cap(w * h, 0.0), nlinks(w * h, {0.0, 0.0, 0.0, 0.0}) {}

namespace {

// Dinic's algorithm on an explicit residual graph.
class FlowNetwork {
 public:
  explicit FlowNetwork(std::size_t nodes) : head_(nodes, kNone), level_(nodes), cursor_(nodes) {}

  void add_edge(std::size_t u, std::size_t v, double cap_uv, double cap_vu) {
    edges_.push_back({v, head_[u], cap_uv});
    head_[u] = edges_.size() - 1;
    edges_.push_back({u, head_[v], cap_vu});
    head_[v] = edges_.size() - 1;
    max_cap_ = std::max({max_cap_, cap_uv, cap_vu});
  }

  double max_flow(std::size_t s, std::size_t t) {
    eps_ = std::max(1e-12, max_cap_ * 1e-13);
    double flow = 0.0;
    while (bfs(s, t)) {
      cursor_ = head_;
      for (double f; (f = augment(s, t)) > 0.0;) flow += f;
    }
    return flow;
  }

  std::vector<bool> reachable_from(std::size_t s) const {
    std::vector<bool> seen(head_.size(), false);
    std::vector<std::size_t> stack{s};
    seen[s] = true;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t e = head_[u]; e != kNone; e = edges_[e].next) {
        if (edges_[e].cap > eps_ && !seen[edges_[e].to]) {
          seen[edges_[e].to] = true;
          stack.push_back(edges_[e].to);
        }
      }
    }
    return seen;
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  struct Arc {
    std::size_t to;
    std::size_t next;
    double cap;
  };

  bool bfs(std::size_t s, std::size_t t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::vector<std::size_t> queue{s};
    level_[s] = 0;
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      const std::size_t u = queue[qi];
      for (std::size_t e = head_[u]; e != kNone; e = edges_[e].next) {
        if (edges_[e].cap > eps_ && level_[edges_[e].to] < 0) {
          level_[edges_[e].to] = level_[u] + 1;
          queue.push_back(edges_[e].to);
        }
      }
    }
    return level_[t] >= 0;
  }

  // Finds one blocking-flow path iteratively and pushes its bottleneck.
  double augment(std::size_t s, std::size_t t) {
    std::vector<std::size_t> path;
    std::size_t u = s;
    while (true) {
      if (u == t) {
        double bottleneck = std::numeric_limits<double>::infinity();
        for (std::size_t e : path) bottleneck = std::min(bottleneck, edges_[e].cap);
        for (std::size_t e : path) {
          edges_[e].cap -= bottleneck;
          edges_[e ^ 1].cap += bottleneck;
        }
        return bottleneck;
      }
      std::size_t& e = cursor_[u];
      while (e != kNone && !(edges_[e].cap > eps_ && level_[edges_[e].to] == level_[u] + 1)) e = edges_[e].next;
      if (e != kNone) {
        path.push_back(e);
        u = edges_[e].to;
        continue;
      }
      // Dead end: prune u from the level graph and retreat.
      level_[u] = -1;
      if (path.empty()) return 0.0;
      const std::size_t back = path.back();
      path.pop_back();
      u = edges_[back ^ 1].to;
      cursor_[u] = edges_[cursor_[u]].next;
    }
  }

  std::vector<Arc> edges_;
  std::vector<std::size_t> head_;
  std::vector<int> level_;
  std::vector<std::size_t> cursor_;
  double max_cap_ = 0.0;
  double eps_ = 1e-12;
};

template <typename F>
void for_each_nlink(std::size_t w, std::size_t h, F&& f) {
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t p = y * w + x;
      if (x + 1 < w) f(p, p + 1, GridGraph::kRight);
      if (y + 1 < h) f(p, p + w, GridGraph::kDown);
      if (x + 1 < w && y + 1 < h) f(p, p + w + 1, GridGraph::kDownRight);
      if (x > 0 && y + 1 < h) f(p, p + w - 1, GridGraph::kDownLeft);
    }
  }
}

}  // namespace

double cut_cost(const GridGraph& g, const BinaryMask& labels) {
  double cost = 0.0;
  for (std::size_t p = 0; p < labels.size(); ++p) cost += labels[p] ? g.sink_cap[p] : g.source_cap[p];
  for_each_nlink(g.width, g.height, [&](std::size_t p, std::size_t q, std::size_t dir) {
    if (labels[p] != labels[q]) cost += g.nlinks[p][dir];
  });
  return cost;
}

CutResult min_cut(const GridGraph& g) {
  const std::size_t n = g.width * g.height;
  const std::size_t s = n, t = n + 1;
  FlowNetwork net(n + 2);
  for (std::size_t p = 0; p < n; ++p) {
    if (g.source_cap[p] < 0 || g.sink_cap[p] < 0) throw ValidationError("min_cut: negative t-link");
    if (g.source_cap[p] > 0) net.add_edge(s, p, g.source_cap[p], 0.0);
    if (g.sink_cap[p] > 0) net.add_edge(p, t, g.sink_cap[p], 0.0);
  }
  for_each_nlink(g.width, g.height, [&](std::size_t p, std::size_t q, std::size_t dir) {
    const double w = g.nlinks[p][dir];
    if (w < 0) throw ValidationError("min_cut: negative n-link");
    if (w > 0) net.add_edge(p, q, w, w);
  });
  CutResult r{BinaryMask(g.width, g.height), 0.0, 0.0};
  r.flow_value = net.max_flow(s, t);
  const auto side = net.reachable_from(s);
  for (std::size_t p = 0; p < n; ++p) {
    if (side[p]) r.source_side.set(p % g.width, p / g.width);
  }
  r.cut_value = cut_cost(g, r.source_side);
  return r;
}

// --- GrabCut --------------------------------------------------------------

GrabCutResult grabcut_run(const Image& img, const Trimap& trimap, const GrabCutParams& params) {
  if (img.width() != trimap.width() || img.height() != trimap.height()) {
    throw DimensionError("grabcut_run: image and trimap dims differ");
  }
  trimap.validate();
  GrabCutResult result{trimap.foreground(), {}, 0, {}};
  if (params.iterations <= 0) return result;

  const std::size_t w = img.width(), h = img.height(), n = w * h;
  std::vector<Eigen::Vector3d> colors(n);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) colors[y * w + x] = to_vec(img.color_at(x, y));
  }

  // Smoothness weights depend only on the image.
  const double beta = beta_estimate(img);
  GridGraph graph(w, h);
  std::vector<double> nlink_sum(n, 0.0);
  for_each_nlink(w, h, [&](std::size_t p, std::size_t q, std::size_t dir) {
    const bool diagonal = dir == GridGraph::kDownRight || dir == GridGraph::kDownLeft;
    const double dist = diagonal ? std::numbers::sqrt2 : 1.0;
    const double wt = params.gamma * std::exp(-beta * (colors[p] - colors[q]).squaredNorm()) / dist;
    graph.nlinks[p][dir] = wt;
    nlink_sum[p] += wt;
    nlink_sum[q] += wt;
  });
  // Exceeds the cost of cutting every n-link around any pixel, so pins are never cut.
  const double pin = 1.0 + *std::max_element(nlink_sum.begin(), nlink_sum.end());

  BinaryMask labels = result.mask;
  auto class_samples = [&](bool fg) {
    std::vector<Eigen::Vector3d> s;
    for (std::size_t p = 0; p < n; ++p) {
      if (labels[p] == fg) s.push_back(colors[p]);
    }
    return s;
  };

  Gmm fg_model, bg_model;
  for (int iter = 0; iter < params.iterations; ++iter) {
    const auto fg_samples = class_samples(true);
    const auto bg_samples = class_samples(false);
    if (fg_samples.empty() || bg_samples.empty()) {
      result.warnings.push_back("grabcut_run: a class became empty; stopping early");
      break;
    }
    if (iter == 0) {
      fg_model = fit_gmm(fg_samples, params.components, params.seed, &result.warnings);
      bg_model = fit_gmm(bg_samples, params.components, params.seed + 1, &result.warnings);
    } else {
      fg_model = fg_model.refit(fg_samples);
      bg_model = bg_model.refit(bg_samples);
    }

    std::vector<double> cost_fg(n), cost_bg(n);
    for (std::size_t p = 0; p < n; ++p) {
      cost_fg[p] = fg_model.cost(colors[p]);
      cost_bg[p] = bg_model.cost(colors[p]);
      switch (trimap[p]) {
        case TrimapLabel::SureFG:
          graph.source_cap[p] = pin;
          graph.sink_cap[p] = 0.0;
          break;
        case TrimapLabel::SureBG:
          graph.source_cap[p] = 0.0;
          graph.sink_cap[p] = pin;
          break;
        default: {
          const double m = std::min(cost_fg[p], cost_bg[p]);
          graph.source_cap[p] = cost_bg[p] - m;
          graph.sink_cap[p] = cost_fg[p] - m;
        }
      }
    }

    const BinaryMask next = min_cut(graph).source_side;
    double energy = 0.0;
    for (std::size_t p = 0; p < n; ++p) energy += next[p] ? cost_fg[p] : cost_bg[p];
    for_each_nlink(w, h, [&](std::size_t p, std::size_t q, std::size_t dir) {
      if (next[p] != next[q]) energy += graph.nlinks[p][dir];
    });
    result.energies.push_back(energy);
    result.iterations_run = iter + 1;
    const bool fixpoint = next == labels;
    labels = next;
    if (fixpoint) break;
  }
  result.mask = labels;
  return result;
}

}  // namespace amodal
