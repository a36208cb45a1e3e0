#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "amodal/config.hpp"
#include "amodal/demo_scene.hpp"
#include "amodal/dump.hpp"
#include "amodal/error.hpp"
#include "amodal/grabcut.hpp"
#include "amodal/metrics.hpp"
#include "amodal/mock_backends.hpp"
#include "amodal/pipeline.hpp"
#include "amodal/png_io.hpp"
#include "amodal/wire.hpp"

namespace py = pybind11;
using namespace amodal;

namespace {

using MaskArray = py::array_t<bool, py::array::c_style | py::array::forcecast>;
using ImageArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

BinaryMask to_mask(const MaskArray& a) {
  if (a.ndim() != 2) throw ValidationError("mask must be a 2-D array");
  const auto h = static_cast<std::size_t>(a.shape(0)), w = static_cast<std::size_t>(a.shape(1));
  std::vector<std::uint8_t> bits(w * h);
  const bool* p = a.data();
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = p[i] ? 1 : 0;
  return BinaryMask(w, h, std::move(bits));
}

py::array_t<bool> from_mask(const BinaryMask& m) {
  py::array_t<bool> out({m.height(), m.width()});
  bool* p = out.mutable_data();
  for (std::size_t i = 0; i < m.size(); ++i) p[i] = m[i];
  return out;
}

Image to_image(const ImageArray& a) {
  if (a.ndim() == 2) {
    return Image(a.shape(1), a.shape(0), 1, std::vector<std::uint8_t>(a.data(), a.data() + a.size()));
  }
  if (a.ndim() != 3 || (a.shape(2) != 3 && a.shape(2) != 4)) {
    throw ValidationError("image must be HxW, HxWx3 or HxWx4 uint8");
  }
  return Image(a.shape(1), a.shape(0), a.shape(2), std::vector<std::uint8_t>(a.data(), a.data() + a.size()));
}

py::array_t<std::uint8_t> from_image(const Image& img) {
  py::array_t<std::uint8_t> out({img.height(), img.width(), img.channels()});
  std::copy(img.samples().begin(), img.samples().end(), out.mutable_data());
  return out;
}

Color to_color(const std::tuple<int, int, int>& c) {
  return parse_color(nlohmann::json{std::get<0>(c), std::get<1>(c), std::get<2>(c)});
}

py::dict result_dict(const PipelineResult& r, const PipelineConfig& cfg) {
  py::dict d;
  d["rgba"] = from_image(r.rgba);
  d["completed"] = from_image(r.completed);
  d["masked_input"] = from_image(r.masked_input);
  d["visible_mask"] = from_mask(r.spatial.visible_mask);
  d["inpaint_mask"] = from_mask(r.spatial.inpaint_mask);
  d["alpha"] = from_mask(r.alpha);
  d["prompt"] = r.prompt.prompt_text;
  d["placement"] = r.spatial.placement;
  nlohmann::json trace = to_json(r.trace, false);
  trace["spatial"] = to_json(r.spatial, cfg.boundary_strategy);
  d["trace_json"] = trace.dump();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Amodal completion core: mask geometry, GrabCut, SSIM and the mock-backed pipeline.";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", error.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", error.ptr());
  py::register_exception<IoError>(m, "IoError", error.ptr());
  py::register_exception<ParseError>(m, "ParseError", error.ptr());
  py::register_exception<ProtocolError>(m, "ProtocolError", error.ptr());
  py::register_exception<TransportError>(m, "TransportError", error.ptr());
  py::register_exception<AuthError>(m, "AuthError", error.ptr());
  py::register_exception<FixtureError>(m, "FixtureError", error.ptr());
  py::register_exception<PipelineError>(m, "PipelineError", error.ptr());

  py::class_<CanvasPlacement>(m, "CanvasPlacement")
      .def_readonly("orig_width", &CanvasPlacement::orig_width)
      .def_readonly("orig_height", &CanvasPlacement::orig_height)
      .def_readonly("new_width", &CanvasPlacement::new_width)
      .def_readonly("new_height", &CanvasPlacement::new_height)
      .def_readonly("offset_x", &CanvasPlacement::offset_x)
      .def_readonly("offset_y", &CanvasPlacement::offset_y)
      .def("is_identity", &CanvasPlacement::is_identity)
      .def("__eq__", [](const CanvasPlacement& a, const CanvasPlacement& b) { return a == b; })
      .def("__repr__", [](const CanvasPlacement& p) {
        return "CanvasPlacement(" + std::to_string(p.new_width) + "x" + std::to_string(p.new_height) + " at (" +
               std::to_string(p.offset_x) + ", " + std::to_string(p.offset_y) + "))";
      });

  m.def(
      "compute_canvas",
      [](std::size_t width, std::size_t height, double left, double right, double top, double bottom) {
        return compute_canvas(width, height, ExpansionSpec{left, right, top, bottom});
      },
      py::arg("width"), py::arg("height"), py::kw_only(), py::arg("left") = 0.0, py::arg("right") = 0.0,
      py::arg("top") = 0.0, py::arg("bottom") = 0.0);

  m.def(
      "dilate", [](const MaskArray& mask, std::size_t radius) { return from_mask(dilate(to_mask(mask), {radius})); },
      py::arg("mask"), py::arg("radius"));
  m.def(
      "erode", [](const MaskArray& mask, std::size_t radius) { return from_mask(erode(to_mask(mask), {radius})); },
      py::arg("mask"), py::arg("radius"));
  m.def(
      "boundary_mask", [](const CanvasPlacement& p) { return from_mask(boundary_mask(p)); }, py::arg("placement"));
  m.def(
      "compose_inpaint_mask",
      [](const std::vector<MaskArray>& occluders, const MaskArray& visible, const CanvasPlacement& p,
         std::size_t radius, bool protect_visible) {
        std::vector<BinaryMask> occ;
        for (const auto& o : occluders) occ.push_back(to_mask(o));
        return from_mask(compose_inpaint_mask(occ, to_mask(visible), p, {radius}, protect_visible));
      },
      py::arg("occluders"), py::arg("visible"), py::arg("placement"), py::arg("radius"),
      py::arg("protect_visible") = true);
  m.def(
      "place_on_canvas",
      [](const ImageArray& image, const CanvasPlacement& p, std::tuple<int, int, int> bg) {
        return from_image(place_on_canvas(to_image(image), p, to_color(bg)));
      },
      py::arg("image"), py::arg("placement"), py::arg("background") = std::make_tuple(255, 255, 255));
  m.def("default_dilation_radius", &default_dilation_radius, py::arg("width"), py::arg("height"));

  m.def(
      "ssim", [](const ImageArray& a, const ImageArray& b) { return ssim(to_image(a), to_image(b)); }, py::arg("a"),
      py::arg("b"));

  m.def(
      "otsu_threshold",
      [](py::array_t<float, py::array::c_style | py::array::forcecast> values) {
        FloatImage f{static_cast<std::size_t>(values.size()), 1,
                     std::vector<float>(values.data(), values.data() + values.size())};
        return otsu_bin(f);
      },
      py::arg("values"), "Otsu threshold bin (1-255) of values in [0, 1].");

  m.def(
      "grabcut",
      [](const ImageArray& image, std::tuple<std::size_t, std::size_t, std::size_t, std::size_t> box, int iterations,
         std::uint64_t seed) {
        const Image img = to_image(image);
        const auto [x, y, w, h] = box;
        GrabCutParams params;
        params.iterations = iterations;
        params.seed = seed;
        const auto r = grabcut_run(img, Trimap::from_box(img.width(), img.height(), Rect{x, y, w, h}), params);
        return py::make_tuple(from_mask(r.mask), r.energies);
      },
      py::arg("image"), py::arg("box"), py::arg("iterations") = 5, py::arg("seed") = 0,
      "GrabCut from a box (x, y, width, height). Returns (mask, energy per iteration).");

  m.def(
      "complete",
      [](const std::filesystem::path& image, const std::string& query, const std::filesystem::path& config) {
        const AppConfig cfg = load_app_config(config);
        const Backends backends = make_backends(cfg);
        PipelineResult r;
        {
          py::gil_scoped_release release;
          r = run_pipeline({load_png(image), query}, cfg.pipeline, backends);
        }
        return result_dict(r, cfg.pipeline);
      },
      py::arg("image"), py::arg("query"), py::arg("config"),
      "Runs the full pipeline with the backends named in a JSON config.");

  m.def(
      "make_demo",
      [](const std::filesystem::path& dir) {
        write_demo(clock_tower_scene(), dir);
        for (const auto& s : boundary_fixture_scenes()) write_demo(s, dir / "boundary");
      },
      py::arg("dir"), "Writes the synthetic demo scenes with mock fixtures and configs.");

  m.def(
      "wire_examples",
      [](const ImageArray& image, const MaskArray& mask, const std::string& prompt, const std::string& label) {
        const Image img = to_image(image);
        const BinaryMask msk = to_mask(mask);
        MockInpainting inpainting;
        MockSegmentation segmentation = MockSegmentation::fixtures({{label, msk}});
        MockMetrics metrics;
        py::dict d;
        d["segment_request"] = wire::encode_segment_request(img, label).dump();
        d["segment_response"] = wire::encode_segment_response(segmentation.segment(img, label)).dump();
        d["inpaint_request"] = wire::encode_inpaint_request(img, msk, prompt, {}).dump();
        d["inpaint_response"] = wire::encode_inpaint_response(inpainting.inpaint(img, msk, prompt, {})).dump();
        d["metrics_request"] = wire::encode_metrics_request(img, &img, &label).dump();
        d["metrics_response"] =
            wire::encode_metrics_response({metrics.clip_score(img, label), metrics.lpips(img, img),
                                           metrics.feature_sim(img, img)})
                .dump();
        return d;
      },
      py::arg("image"), py::arg("mask"), py::arg("prompt"), py::arg("label"),
      "Wire messages the clients and the mock service produce, as JSON strings.");
}
