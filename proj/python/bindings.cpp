#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>

#include "glassdepth/completion.hpp"
#include "glassdepth/heightmap.hpp"
#include "glassdepth/io.hpp"
#include "glassdepth/metrics.hpp"
#include "glassdepth/synthgen.hpp"

namespace py = pybind11;
using namespace glassdepth;

namespace {

template <typename T>
using InArray = py::array_t<T, py::array::c_style | py::array::forcecast>;

template <typename R, typename T>
R raster_from_array(const InArray<T>& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a (H, W) array");
  R out(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::copy_n(a.data(), out.size(), out.data.data());
  return out;
}

template <typename T>
py::array_t<T> array_from_raster(const Raster<T>& r) {
  py::array_t<T> a({r.height, r.width});
  std::copy_n(r.data.data(), r.size(), a.mutable_data());
  return a;
}

NormalMap normals_from_array(const InArray<double>& a) {
  if (a.ndim() != 3 || a.shape(2) != 3)
    throw std::invalid_argument("expected a (H, W, 3) array");
  NormalMap out(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  auto u = a.unchecked<3>();
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      out.at(x, y) = Eigen::Vector3d(u(y, x, 0), u(y, x, 1), u(y, x, 2));
  return out;
}

py::array_t<double> array_from_normals(const NormalMap& n) {
  py::array_t<double> a({n.height, n.width, 3});
  auto u = a.mutable_unchecked<3>();
  for (int y = 0; y < n.height; ++y)
    for (int x = 0; x < n.width; ++x)
      for (int c = 0; c < 3; ++c) u(y, x, c) = n.at(x, y)[c];
  return a;
}

BoundaryMap boundary_from_arrays(const InArray<uint8_t>& labels,
                                 const InArray<double>& prob) {
  BoundaryMap b;
  b.labels = raster_from_array<Raster<uint8_t>>(labels);
  b.occlusion_prob = raster_from_array<Raster<double>>(prob);
  require_shape(b.labels.width, b.labels.height, b.occlusion_prob.width,
                b.occlusion_prob.height, "boundary");
  return b;
}

py::dict diagnostics_dict(const SolveDiagnostics& diag) {
  py::dict d;
  d["iterations"] = diag.iterations;
  d["converged"] = diag.converged;
  d["relative_residual"] = diag.relative_residual;
  d["energy"] = diag.energy;
  d["energy_data"] = diag.energy_data;
  d["energy_smooth"] = diag.energy_smooth;
  d["energy_normal"] = diag.energy_normal;
  d["energy_trace"] = diag.energy_trace;
  py::list regions;
  for (const auto& r : diag.regions) {
    py::dict e;
    e["pixel_count"] = r.pixels.size();
    e["indeterminate"] = r.indeterminate;
    regions.append(e);
  }
  d["regions"] = regions;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "depth completion for transparent objects";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_IOError);
  py::register_exception<NumericalError>(m, "NumericalError",
                                         PyExc_ArithmeticError);

  py::class_<CameraIntrinsics>(m, "CameraIntrinsics")
      .def(py::init([](double fx, double fy, double cx, double cy, int width,
                       int height) {
             CameraIntrinsics intr{fx, fy, cx, cy, width, height};
             intr.validate();
             return intr;
           }),
           py::arg("fx"), py::arg("fy"), py::arg("cx"), py::arg("cy"),
           py::arg("width"), py::arg("height"))
      .def_readonly("fx", &CameraIntrinsics::fx)
      .def_readonly("fy", &CameraIntrinsics::fy)
      .def_readonly("cx", &CameraIntrinsics::cx)
      .def_readonly("cy", &CameraIntrinsics::cy)
      .def_readonly("width", &CameraIntrinsics::width)
      .def_readonly("height", &CameraIntrinsics::height);

  m.def(
      "project",
      [](const CameraIntrinsics& intr, std::array<double, 3> p) {
        auto uv = project(Eigen::Vector3d(p[0], p[1], p[2]), intr);
        return std::make_pair(uv.x(), uv.y());
      },
      py::arg("intrinsics"), py::arg("point"));
  m.def(
      "backproject",
      [](const CameraIntrinsics& intr, double u, double v, double depth) {
        Eigen::Vector3d p = backproject(u, v, depth, intr);
        return std::array<double, 3>{p.x(), p.y(), p.z()};
      },
      py::arg("intrinsics"), py::arg("u"), py::arg("v"), py::arg("depth"));

  m.def(
      "render_scene",
      [](const std::string& spec_json) {
        Scene scene = render_scene(scene_spec_from_json(spec_json));
        py::dict d;
        d["gt_depth"] = array_from_raster<double>(scene.gt_depth);
        d["gt_normals"] = array_from_normals(scene.gt_normals);
        d["gt_mask"] = array_from_raster<uint8_t>(scene.gt_mask);
        d["gt_boundary_labels"] =
            array_from_raster<uint8_t>(scene.gt_boundary.labels);
        d["gt_boundary_prob"] =
            array_from_raster<double>(scene.gt_boundary.occlusion_prob);
        return d;
      },
      py::arg("spec_json"));

  m.def(
      "derive_boundaries",
      [](const InArray<double>& depth, const InArray<uint8_t>& mask,
         double occ_threshold, double rel_threshold) {
        BoundaryMap b = derive_boundaries(
            raster_from_array<DepthImage>(depth),
            raster_from_array<TransparencyMask>(mask), occ_threshold,
            rel_threshold);
        return std::make_pair(array_from_raster<uint8_t>(b.labels),
                              array_from_raster<double>(b.occlusion_prob));
      },
      py::arg("depth"), py::arg("mask"), py::arg("occ_threshold") = 0.02,
      py::arg("rel_threshold") = 0.03);

  m.def(
      "complete_depth",
      [](const InArray<double>& raw, const InArray<double>& normals,
         const InArray<uint8_t>& boundary_labels,
         const InArray<double>& occlusion_prob, const InArray<uint8_t>& mask,
         const CameraIntrinsics& intr, double lambda_d, double lambda_s,
         double lambda_n, double tolerance, int max_iterations,
         double boundary_sigma, double b_cut, bool use_mask,
         bool use_boundary_weighting) {
        CompletionConfig cfg;
        cfg.weights = {lambda_d, lambda_s, lambda_n};
        cfg.solver.tolerance = tolerance;
        cfg.solver.max_iterations = max_iterations;
        cfg.boundary_sigma = boundary_sigma;
        cfg.b_cut = b_cut;
        cfg.use_mask = use_mask;
        cfg.use_boundary_weighting = use_boundary_weighting;
        auto [depth, diag] = complete_depth(
            raster_from_array<DepthImage>(raw), normals_from_array(normals),
            boundary_from_arrays(boundary_labels, occlusion_prob),
            raster_from_array<TransparencyMask>(mask), intr, cfg);
        return std::make_pair(array_from_raster<double>(depth),
                              diagnostics_dict(diag));
      },
      py::arg("raw_depth"), py::arg("normals"), py::arg("boundary_labels"),
      py::arg("occlusion_prob"), py::arg("mask"), py::arg("intrinsics"),
      py::arg("lambda_d") = 1000.0, py::arg("lambda_s") = 0.001,
      py::arg("lambda_n") = 1.0, py::arg("tolerance") = 1e-6,
      py::arg("max_iterations") = -1, py::arg("boundary_sigma") = 0.0,
      py::arg("b_cut") = 0.01, py::arg("use_mask") = true,
      py::arg("use_boundary_weighting") = true);

  m.def(
      "depth_metrics",
      [](const InArray<double>& pred, const InArray<double>& gt,
         const InArray<uint8_t>& mask) -> py::object {
        auto r = depth_metrics(raster_from_array<DepthImage>(pred),
                               raster_from_array<DepthImage>(gt),
                               raster_from_array<TransparencyMask>(mask));
        if (!r) return py::none();
        py::dict d;
        d["rmse"] = r->rmse;
        d["rel"] = r->rel;
        d["mae"] = r->mae;
        d["d105"] = r->delta_105;
        d["d110"] = r->delta_110;
        d["d125"] = r->delta_125;
        return d;
      },
      py::arg("pred"), py::arg("gt"), py::arg("mask"));

  m.def(
      "normal_metrics",
      [](const InArray<double>& pred, const InArray<double>& gt,
         const InArray<uint8_t>& mask) -> py::object {
        auto r = normal_metrics(normals_from_array(pred),
                                normals_from_array(gt),
                                raster_from_array<TransparencyMask>(mask));
        if (!r) return py::none();
        py::dict d;
        d["mean_deg"] = r->mean_deg;
        d["median_deg"] = r->median_deg;
        d["pct_1125"] = r->pct_1125;
        d["pct_225"] = r->pct_225;
        d["pct_30"] = r->pct_30;
        return d;
      },
      py::arg("pred"), py::arg("gt"), py::arg("mask"));

  m.def(
      "mask_metrics",
      [](const InArray<uint8_t>& pred, const InArray<uint8_t>& gt) {
        MaskMetrics r = mask_metrics(raster_from_array<TransparencyMask>(pred),
                                     raster_from_array<TransparencyMask>(gt));
        py::dict d;
        d["iou"] = r.iou;
        d["tpr"] = r.tpr;
        return d;
      },
      py::arg("pred"), py::arg("gt"));

  m.def(
      "eval_resize_depth",
      [](const InArray<double>& depth, int width, int height) {
        return array_from_raster<double>(eval_resize(
            raster_from_array<DepthImage>(depth), width, height));
      },
      py::arg("depth"), py::arg("width") = kEvalWidth,
      py::arg("height") = kEvalHeight);
  m.def(
      "eval_resize_mask",
      [](const InArray<uint8_t>& mask, int width, int height) {
        return array_from_raster<uint8_t>(eval_resize(
            raster_from_array<TransparencyMask>(mask), width, height));
      },
      py::arg("mask"), py::arg("width") = kEvalWidth,
      py::arg("height") = kEvalHeight);

  m.def(
      "backproject_cloud",
      [](const InArray<double>& depth, const CameraIntrinsics& intr,
         const InArray<double>& rotation, std::array<double, 3> translation) {
        if (rotation.ndim() != 2 || rotation.shape(0) != 3 ||
            rotation.shape(1) != 3)
          throw std::invalid_argument("rotation must be (3, 3)");
        RigidTransform t;
        auto r = rotation.unchecked<2>();
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) t.rotation(i, j) = r(i, j);
        t.translation =
            Eigen::Vector3d(translation[0], translation[1], translation[2]);
        t.validate();
        auto cloud =
            backproject_cloud(raster_from_array<DepthImage>(depth), intr, t);
        py::array_t<double> out(
            {static_cast<py::ssize_t>(cloud.size()), py::ssize_t{3}});
        auto u = out.mutable_unchecked<2>();
        for (py::ssize_t i = 0; i < u.shape(0); ++i)
          for (int c = 0; c < 3; ++c) u(i, c) = cloud[i][c];
        return out;
      },
      py::arg("depth"), py::arg("intrinsics"), py::arg("rotation"),
      py::arg("translation"));

  m.def(
      "build_heightmap",
      [](const InArray<double>& points, std::array<double, 3> min_corner,
         std::array<double, 3> max_corner, double resolution) {
        if (points.ndim() != 2 || points.shape(1) != 3)
          throw std::invalid_argument("points must be (N, 3)");
        std::vector<Eigen::Vector3d> cloud(points.shape(0));
        auto u = points.unchecked<2>();
        for (py::ssize_t i = 0; i < u.shape(0); ++i)
          cloud[i] = Eigen::Vector3d(u(i, 0), u(i, 1), u(i, 2));
        Workspace ws;
        ws.min_corner =
            Eigen::Vector3d(min_corner[0], min_corner[1], min_corner[2]);
        ws.max_corner =
            Eigen::Vector3d(max_corner[0], max_corner[1], max_corner[2]);
        ws.resolution = resolution;
        ws.validate();
        Heightmap hm = build_heightmap(cloud, ws);
        return std::make_pair(array_from_raster<double>(hm.height),
                              array_from_raster<uint8_t>(hm.valid));
      },
      py::arg("points"), py::arg("min_corner"), py::arg("max_corner"),
      py::arg("resolution"));

  m.def(
      "rotation_stack",
      [](const InArray<double>& height, const InArray<uint8_t>& valid, int n) {
        Heightmap hm;
        hm.height = raster_from_array<Raster<double>>(height);
        hm.valid = raster_from_array<Raster<uint8_t>>(valid);
        require_shape(hm.height.width, hm.height.height, hm.valid.width,
                      hm.valid.height, "heightmap");
        py::list out;
        for (const Heightmap& h : rotation_stack(hm, n))
          out.append(std::make_pair(array_from_raster<double>(h.height),
                                    array_from_raster<uint8_t>(h.valid)));
        return out;
      },
      py::arg("height"), py::arg("valid"), py::arg("n") = 16);
}
