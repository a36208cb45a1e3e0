#include "amodal/metrics.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "amodal/error.hpp"
#include "amodal/png_io.hpp"

namespace amodal {

namespace {

using json = nlohmann::json;

std::vector<double> luma(const Image& img) {
  std::vector<double> y(img.width() * img.height());
  for (std::size_t py = 0; py < img.height(); ++py) {
    for (std::size_t px = 0; px < img.width(); ++px) {
      const std::uint8_t* p = img.pixel(px, py);
      y[py * img.width() + px] =
          img.channels() < 3 ? double(p[0]) : 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
    }
  }
  return y;
}

std::array<double, kSsimWindow * kSsimWindow> gaussian_window() {
  constexpr double sigma = 1.5;
  constexpr int half = int(kSsimWindow) / 2;
  std::array<double, kSsimWindow * kSsimWindow> w{};
  double sum = 0.0;
  for (int dy = -half; dy <= half; ++dy) {
    for (int dx = -half; dx <= half; ++dx) {
      double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      w[(dy + half) * kSsimWindow + (dx + half)] = v;
      sum += v;
    }
  }
  for (double& v : w) v /= sum;
  return w;
}

std::optional<double> mean_of(const std::vector<EvalRow>& rows, std::optional<double> EvalRow::*field) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : rows) {
    if (r.*field) {
      sum += *(r.*field);
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / double(n);
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_cell(const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); }

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// Composites the completed object over `bg` so the label score sees the object alone.
Image object_only(const PipelineResult& r, Color bg) {
  return extract_visible(r.completed, r.alpha, bg);
}

}  // namespace

double ssim(const Image& a, const Image& b) {
  if (!a.same_dims(b)) throw DimensionError("ssim: image dims differ");
  if (a.width() < kSsimWindow || a.height() < kSsimWindow) {
    throw ValidationError("ssim: images must be at least 11x11, got " + std::to_string(a.width()) + "x" +
                          std::to_string(a.height()));
  }
  static const auto window = gaussian_window();
  constexpr double L = 255.0;
  constexpr double C1 = (0.01 * L) * (0.01 * L);
  constexpr double C2 = (0.03 * L) * (0.03 * L);

  const auto ya = luma(a), yb = luma(b);
  const std::size_t w = a.width();
  const std::size_t nx = a.width() - kSsimWindow + 1, ny = a.height() - kSsimWindow + 1;
  double total = 0.0;
  for (std::size_t oy = 0; oy < ny; ++oy) {
    for (std::size_t ox = 0; ox < nx; ++ox) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (std::size_t ky = 0; ky < kSsimWindow; ++ky) {
        const std::size_t row = (oy + ky) * w + ox;
        for (std::size_t kx = 0; kx < kSsimWindow; ++kx) {
          const double g = window[ky * kSsimWindow + kx];
          const double va = ya[row + kx], vb = yb[row + kx];
          ma += g * va;
          mb += g * vb;
          saa += g * va * va;
          sbb += g * vb * vb;
          sab += g * va * vb;
        }
      }
      const double var_a = saa - ma * ma, var_b = sbb - mb * mb, cov = sab - ma * mb;
      total += ((2 * ma * mb + C1) * (2 * cov + C2)) / ((ma * ma + mb * mb + C1) * (var_a + var_b + C2));
    }
  }
  return total / double(nx * ny);
}

std::pair<Image, Image> visible_region_pair(const Image& original, const BinaryMask& visible,
                                            const Image& completed, const CanvasPlacement& p, Color bg) {
  if (!original.same_dims(visible)) throw DimensionError("visible mask does not match the original image");
  if (original.width() != p.orig_width || original.height() != p.orig_height) {
    throw DimensionError("placement does not describe the original image");
  }
  if (completed.width() != p.new_width || completed.height() != p.new_height) {
    throw DimensionError("completed image does not match the canvas");
  }
  const auto box = bbox(visible);
  if (!box) throw ValidationError("visible mask is empty");

  Image lhs = extract_visible(to_rgb(crop(original, *box)), crop(visible, *box), bg);
  const Rect shifted{box->x + p.offset_x, box->y + p.offset_y, box->width, box->height};
  Image rhs = extract_visible(to_rgb(crop(completed, shifted)), crop(visible, *box), bg);
  return {std::move(lhs), std::move(rhs)};
}

std::vector<EvalCase> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& s) {
    std::filesystem::path q(s);
    return q.is_absolute() ? q : base / q;
  };

  std::vector<EvalCase> cases;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.filename().string() + ":" + std::to_string(lineno) + ": ";
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ParseError(where + "not a JSON object", line);
    auto str = [&](const char* key, bool required) -> std::optional<std::string> {
      if (!j.contains(key) || j[key].is_null()) {
        if (required) throw ParseError(where + "missing \"" + key + "\"", line);
        return std::nullopt;
      }
      if (!j[key].is_string()) throw ParseError(where + "\"" + key + "\" must be a string", line);
      return j[key].get<std::string>();
    };
    EvalCase c;
    c.name = *str("image", true);
    c.image = resolve(c.name);
    c.query = *str("query", true);
    if (auto m = str("visible_mask", false)) c.visible_mask = resolve(*m);
    c.category = str("category", false);
    cases.push_back(std::move(c));
  }
  return cases;
}

MetricMeans EvalReport::aggregates() const {
  MetricMeans m;
  m.clip = mean_of(rows, &EvalRow::clip);
  m.lpips = mean_of(rows, &EvalRow::lpips);
  m.feature_sim = mean_of(rows, &EvalRow::feature_sim);
  if (!rows.empty()) {
    double s = 0.0, t = 0.0;
    for (const auto& r : rows) {
      s += r.ssim;
      t += r.runtime_s;
    }
    m.ssim = s / double(rows.size());
    m.runtime_s = t / double(rows.size());
  }
  return m;
}

EvalRow evaluate_case(const EvalCase& c, const Image& original, const PipelineResult& result, MetricBackend* metrics,
                      const std::optional<BinaryMask>& visible_mask, Color bg) {
  EvalRow row;
  row.name = c.name;
  row.category = c.category;
  const BinaryMask& visible = visible_mask ? *visible_mask : result.spatial.visible_mask;
  auto [orig_crop, done_crop] = visible_region_pair(original, visible, result.completed, result.spatial.placement, bg);
  row.ssim = ssim(orig_crop, done_crop);
  if (!metrics) return row;

  auto attempt = [&](const char* name, std::optional<double>& slot, auto&& fn) {
    try {
      slot = fn();
    } catch (const std::exception& e) {
      row.metric_errors[name] = e.what();
    }
  };
  attempt("clip", row.clip, [&] { return metrics->clip_score(object_only(result, bg), result.spatial.occlusion.target); });
  attempt("lpips", row.lpips, [&] { return metrics->lpips(orig_crop, done_crop); });
  attempt("feature_sim", row.feature_sim, [&] { return metrics->feature_sim(orig_crop, done_crop); });
  return row;
}

EvalReport run_benchmark(const std::vector<EvalCase>& cases, const PipelineConfig& cfg, const Backends& backends,
                         const BenchmarkOptions& opts) {
  if (cases.empty()) throw ValidationError("manifest has no cases");
  struct Slot {
    std::optional<EvalRow> row;
    std::optional<EvalFailure> failure;
  };
  std::vector<Slot> slots(cases.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < cases.size(); i = next++) {
      const EvalCase& c = cases[i];
      const auto start = std::chrono::steady_clock::now();
      try {
        TaskQuery q{load_png(c.image), c.query};
        std::optional<BinaryMask> vis;
        if (c.visible_mask) {
          vis = load_mask_png(*c.visible_mask);
          if (!q.image.same_dims(*vis)) throw DimensionError("visible mask does not match the image");
        }
        PipelineResult r = run_pipeline(q, cfg, backends);
        EvalRow row = evaluate_case(c, q.image, r, backends.metrics.get(), vis, cfg.background);
        row.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        slots[i].row = std::move(row);
      } catch (const std::exception& e) {
        slots[i].failure = EvalFailure{c.name, e.what()};
      }
    }
  };

  const std::size_t n = std::max<std::size_t>(1, std::min(opts.parallelism, cases.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  EvalReport report;
  for (auto& s : slots) {
    if (s.row) report.rows.push_back(std::move(*s.row));
    if (s.failure) report.failures.push_back(std::move(*s.failure));
  }
  return report;
}

void write_report(const EvalReport& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const MetricMeans agg = report.aggregates();

  json j;
  j["cases"] = json::array();
  for (const auto& r : report.rows) {
    json row = {{"case", r.name},         {"clip", opt_json(r.clip)}, {"lpips", opt_json(r.lpips)},
                {"feature_sim", opt_json(r.feature_sim)}, {"ssim", r.ssim}, {"runtime_s", r.runtime_s}};
    row["category"] = r.category ? json(*r.category) : json(nullptr);
    if (!r.metric_errors.empty()) row["metric_errors"] = r.metric_errors;
    j["cases"].push_back(std::move(row));
  }
  j["failures"] = json::array();
  for (const auto& f : report.failures) j["failures"].push_back({{"case", f.name}, {"error", f.error}});
  j["failure_count"] = report.failures.size();
  j["aggregates"] = {{"clip", opt_json(agg.clip)},   {"lpips", opt_json(agg.lpips)},
                     {"feature_sim", opt_json(agg.feature_sim)}, {"ssim", opt_json(agg.ssim)},
                     {"runtime_s", opt_json(agg.runtime_s)},     {"count", report.rows.size()}};

  std::ofstream js(out_dir / "report.json");
  js << j.dump(2) << "\n";
  if (!js) throw IoError("cannot write " + (out_dir / "report.json").string());

  std::ostringstream csv;
  csv << "case,clip,lpips,feature_sim,ssim,runtime_s\n";
  for (const auto& r : report.rows) {
    csv << csv_escape(r.name) << ',' << csv_cell(r.clip) << ',' << csv_cell(r.lpips) << ','
        << csv_cell(r.feature_sim) << ',' << fmt_double(r.ssim) << ',' << fmt_double(r.runtime_s) << '\n';
  }
  std::ofstream cs(out_dir / "report.csv");
  cs << csv.str();
  if (!cs) throw IoError("cannot write " + (out_dir / "report.csv").string());
}

}  // namespace amodal
