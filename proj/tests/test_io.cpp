#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <glassdepth/io.hpp>
#include <glassdepth/rng.hpp>
#include <glassdepth/synthgen.hpp>

using namespace glassdepth;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("glassdepth_io_" + std::to_string(mix64(
                                   std::chrono::steady_clock::now()
                                       .time_since_epoch()
                                       .count())));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("png16 round trip is bit-exact") {
  TempDir tmp;
  Raster<uint16_t> img(17, 9);
  Rng rng(1);
  for (size_t i = 0; i < img.size(); ++i)
    img[i] = static_cast<uint16_t>(rng.next_u64());
  write_png16(tmp.path / "a.png", img);
  CHECK(read_png16(tmp.path / "a.png") == img);
}

TEST_CASE("png8 round trip is bit-exact") {
  TempDir tmp;
  Raster<uint8_t> img(33, 5);
  Rng rng(2);
  for (size_t i = 0; i < img.size(); ++i)
    img[i] = static_cast<uint8_t>(rng.next_u64());
  write_png8(tmp.path / "a.png", img);
  CHECK(read_png8(tmp.path / "a.png") == img);
}

TEST_CASE("pfm round trip preserves doubles to float precision") {
  TempDir tmp;
  Raster<double> img(7, 11);
  Rng rng(3);
  for (size_t i = 0; i < img.size(); ++i) img[i] = rng.uniform(-5.0, 5.0);
  write_pfm(tmp.path / "a.pfm", img);
  Raster<double> back = read_pfm(tmp.path / "a.pfm");
  REQUIRE(back.same_shape(img.width, img.height));
  for (size_t i = 0; i < img.size(); ++i)
    CHECK(back[i] == static_cast<double>(static_cast<float>(img[i])));
}

TEST_CASE("pfm3 round trips float-exact normals bit-exactly") {
  TempDir tmp;
  NormalMap nm(6, 4);
  Rng rng(4);
  // Dyadic components are exactly representable in float, so the round trip
  // can compare ==. (Truncating via cast<float>().cast<double>() is not
  // reliable: the optimizer may elide the conversion pair.)
  auto dyadic = [&] {
    return std::round(rng.uniform(-1.0, 1.0) * 1024.0) / 1024.0;
  };
  for (size_t i = 0; i < nm.size(); ++i)
    nm[i] = Eigen::Vector3d(dyadic(), dyadic(), -std::abs(dyadic()));
  nm[3] = Eigen::Vector3d::Zero();  // undefined stays undefined
  write_pfm3(tmp.path / "n.pfm", nm);
  CHECK(read_pfm3(tmp.path / "n.pfm") == nm);
}

TEST_CASE("depth png quantizes to integer millimeters") {
  TempDir tmp;
  DepthImage d(4, 3);
  d.at(0, 0) = 0.5;       // 500 mm
  d.at(1, 0) = 0.8014;    // 801 mm
  d.at(2, 0) = 0.0011;    // 1 mm
  d.at(3, 0) = 0.0004;    // rounds to 0 = sentinel
  d.at(0, 1) = 10.0;      // 10000 mm
  write_depth_png(tmp.path / "d.png", d);
  DepthImage back = read_depth_png(tmp.path / "d.png");
  CHECK(back.at(0, 0) == 0.5);
  CHECK(back.at(1, 0) == 0.801);
  CHECK(back.at(2, 0) == 0.001);
  CHECK(back.at(3, 0) == DepthImage::kInvalid);
  CHECK(back.at(0, 1) == 10.0);
  CHECK(back.at(1, 1) == DepthImage::kInvalid);

  // Writing an already-quantized image back is a fixed point.
  write_depth_png(tmp.path / "d2.png", back);
  CHECK(read_depth_png(tmp.path / "d2.png") == back);
}

TEST_CASE("depth beyond 65535 mm clamps") {
  TempDir tmp;
  DepthImage d(2, 1);
  d.at(0, 0) = 70.0;  // 70000 mm, over the 16-bit range
  d.at(1, 0) = 1.0;
  write_depth_png(tmp.path / "far.png", d);
  DepthImage back = read_depth_png(tmp.path / "far.png");
  CHECK(back.at(0, 0) == 65.535);
  CHECK(back.at(1, 0) == 1.0);
}

TEST_CASE("mask png uses 0/255 and round trips") {
  TempDir tmp;
  TransparencyMask m(5, 5);
  m.at(1, 2) = 1;
  m.at(4, 4) = 1;
  write_mask_png(tmp.path / "m.png", m);
  Raster<uint8_t> raw = read_png8(tmp.path / "m.png");
  CHECK(raw.at(1, 2) == 255);
  CHECK(raw.at(0, 0) == 0);
  CHECK(read_mask_png(tmp.path / "m.png") == m);
}

TEST_CASE("boundary round trip with binary and non-binary probability") {
  TempDir tmp;
  BoundaryMap b(8, 6);
  b.labels.at(2, 2) = kOcclusion;
  b.occlusion_prob.at(2, 2) = 1.0;
  b.labels.at(5, 1) = kContact;

  SUBCASE("binary probability implied by labels") {
    write_boundary(tmp.path / "b.png", b);
    CHECK_FALSE(fs::exists(tmp.path / "b.prob.pfm"));
    CHECK(read_boundary(tmp.path / "b.png") == b);
  }

  SUBCASE("smoothed probability gets a side-car pfm") {
    b.occlusion_prob.at(3, 2) = 0.25;  // float-exact
    write_boundary(tmp.path / "b.png", b);
    CHECK(fs::exists(tmp.path / "b.prob.pfm"));
    CHECK(read_boundary(tmp.path / "b.png") == b);
  }
}

TEST_CASE("scene spec json round trips all primitive kinds") {
  SceneSpec spec;
  spec.intrinsics = {200.0, 200.0, 128.0, 72.0, 256, 144};
  spec.seed = 99;
  spec.z_max = 8.0;
  spec.primitives.push_back(
      Primitive::make_plane({0.0, 0.35, 0.0}, {0.0, -1.0, 0.0}));
  spec.primitives.push_back(
      Primitive::make_sphere({0.1, 0.25, 1.25}, 0.1, true));
  spec.primitives.push_back(Primitive::make_box(
      {-0.1, 0.3, 1.4}, {0.05, 0.05, 0.05},
      Eigen::Quaterniond(Eigen::AngleAxisd(0.5, Eigen::Vector3d(0, -1, 0))),
      true));
  spec.primitives.push_back(Primitive::make_cylinder(
      {0.0, 0.35, 1.1}, {0.0, -1.0, 0.0}, 0.04, 0.12, true));
  spec.support_plane = 0;

  SceneSpec back = scene_spec_from_json(scene_spec_to_json(spec));
  CHECK(back.seed == spec.seed);
  CHECK(back.z_max == spec.z_max);
  CHECK(back.support_plane == spec.support_plane);
  REQUIRE(back.primitives.size() == spec.primitives.size());
  for (size_t i = 0; i < spec.primitives.size(); ++i) {
    const Primitive &a = spec.primitives[i], &b = back.primitives[i];
    CHECK(a.kind == b.kind);
    CHECK(a.transparent == b.transparent);
    CHECK(a.point == b.point);
    CHECK(a.normal == b.normal);
    CHECK(a.center == b.center);
    CHECK(a.radius == b.radius);
    CHECK(a.half_extents == b.half_extents);
    CHECK(a.rotation.coeffs() == b.rotation.coeffs());
    CHECK(a.base == b.base);
    CHECK(a.axis == b.axis);
    CHECK(a.height == b.height);
  }
  // Serialization is canonical: same spec -> same text.
  CHECK(scene_spec_to_json(back) == scene_spec_to_json(spec));
}

TEST_CASE("scene directory save/load round trips rasters bit-exactly") {
  TempDir tmp;
  SceneSpec spec;
  spec.intrinsics = {200.0, 200.0, 64.0, 36.0, 128, 72};
  spec.seed = 11;
  spec.primitives.push_back(
      Primitive::make_plane({0.0, 0.35, 0.0}, {0.0, -1.0, 0.0}));
  spec.primitives.push_back(
      Primitive::make_plane({0.0, 0.0, 1.9}, {0.0, 0.0, -1.0}));
  spec.primitives.push_back(
      Primitive::make_sphere({0.0, 0.29, 1.2}, 0.06, true));
  spec.support_plane = 0;

  Scene scene = render_scene(spec);
  scene.id = "scene_0000";
  CorruptionModel corr;
  corr.seed = 5;
  scene.raw_depth = corrupt_depth(scene, corr);
  scene = perturb_inputs(scene, {});

  // Quantize depth to mm first so the comparison below can be exact.
  save_scene(tmp.path / "s", scene);
  Scene q = load_scene(tmp.path / "s");
  save_scene(tmp.path / "s2", q);
  Scene back = load_scene(tmp.path / "s2");

  CHECK(back.id == q.id);
  CHECK(back.seed == q.seed);
  CHECK(back.gt_depth == q.gt_depth);
  CHECK(back.raw_depth == q.raw_depth);
  CHECK(back.gt_mask == q.gt_mask);
  CHECK(back.input_mask == q.input_mask);
  CHECK(back.gt_boundary == q.gt_boundary);
  CHECK(back.input_boundary == q.input_boundary);
  REQUIRE(back.spec.has_value());
  CHECK(scene_spec_to_json(*back.spec) == scene_spec_to_json(*q.spec));
  // Normals go through float; a second round trip is exact.
  CHECK(back.gt_normals == q.gt_normals);
  CHECK(back.input_normals == q.input_normals);
  CHECK_NOTHROW(back.check_dimensions());
}
