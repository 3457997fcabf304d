#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <glassdepth/heightmap.hpp>
#include <glassdepth/synthgen.hpp>

using namespace glassdepth;

namespace {

// Camera hanging above the table looking straight down: world z is height.
RigidTransform overhead(double camera_height) {
  RigidTransform t;
  t.rotation << 1, 0, 0, 0, -1, 0, 0, 0, -1;
  t.translation = Eigen::Vector3d(0, 0, camera_height);
  return t;
}

Workspace square_workspace(double half_extent, double z_max, double res) {
  Workspace ws;
  ws.min_corner = Eigen::Vector3d(-half_extent, -half_extent, -0.01);
  ws.max_corner = Eigen::Vector3d(half_extent, half_extent, z_max);
  ws.resolution = res;
  return ws;
}

int valid_cells(const Heightmap& h) {
  int n = 0;
  for (size_t i = 0; i < h.valid.size(); ++i)
    if (h.valid[i]) ++n;
  return n;
}

}  // namespace

TEST_CASE("backproject_cloud lists valid pixels in row-major order") {
  CameraIntrinsics intr{300.0, 300.0, 4.0, 3.0, 8, 6};
  DepthImage depth(8, 6, 0.5);
  depth.at(2, 1) = DepthImage::kInvalid;

  auto cloud = backproject_cloud(depth, intr, {});
  CHECK(cloud.size() == 47);
  // First entry is pixel (0,0); the principal pixel sits on the optical
  // axis. Pixel (4,3) is the 28th in row-major order, minus the hole at
  // (2,1) before it.
  CHECK(cloud[0].isApprox(0.5 * intr.ray(0, 0), 1e-12));
  CHECK((cloud[27] - Eigen::Vector3d(0, 0, 0.5)).norm() == 0.0);

  SUBCASE("translation shifts every point") {
    RigidTransform t;
    t.translation = Eigen::Vector3d(0.1, -0.2, 0.3);
    auto shifted = backproject_cloud(depth, intr, t);
    REQUIRE(shifted.size() == cloud.size());
    for (size_t i = 0; i < cloud.size(); ++i)
      CHECK((shifted[i] - cloud[i] - t.translation).norm() < 1e-15);
  }

  SUBCASE("rotation preserves pairwise distances") {
    RigidTransform t;
    t.rotation << 1, 0, 0, 0, 0, 1, 0, -1, 0;
    t.validate();
    auto rotated = backproject_cloud(depth, intr, t);
    for (size_t i = 0; i < cloud.size(); i += 7)
      for (size_t j = i + 1; j < cloud.size(); j += 11)
        CHECK(std::abs((rotated[i] - rotated[j]).norm() -
                       (cloud[i] - cloud[j]).norm()) < 1e-12);
  }

  SUBCASE("a frontal plane backprojects to a plane of constant z") {
    for (const auto& p : cloud) CHECK(p.z() == 0.5);
  }
}

TEST_CASE("rigid transform validation rejects improper rotations") {
  RigidTransform t;
  t.rotation *= 2.0;
  CHECK_THROWS_AS(t.validate(), ConfigError);
  RigidTransform mirror;
  mirror.rotation << -1, 0, 0, 0, 1, 0, 0, 0, 1;  // det = -1
  CHECK_THROWS_AS(mirror.validate(), ConfigError);
  CHECK_NOTHROW(overhead(0.5).validate());
}

TEST_CASE("workspace validation and grid sizing") {
  Workspace ws = square_workspace(0.08, 0.2, 0.002);
  CHECK_NOTHROW(ws.validate());
  CHECK(ws.cells_x() == 80);
  CHECK(ws.cells_y() == 80);

  Workspace flat = ws;
  flat.max_corner.z() = flat.min_corner.z();
  CHECK_THROWS_AS(flat.validate(), ConfigError);
  Workspace coarse = ws;
  coarse.resolution = 0.0;
  CHECK_THROWS_AS(coarse.validate(), ConfigError);
  // A cell-fraction extent still yields one cell.
  Workspace sliver = ws;
  sliver.max_corner = sliver.min_corner + Eigen::Vector3d(1e-4, 1e-4, 0.1);
  CHECK(sliver.cells_x() == 1);
}

TEST_CASE("build_heightmap bins points and keeps the highest") {
  Workspace ws = square_workspace(0.05, 1.0, 0.01);  // 10x10 cells

  SUBCASE("single point lands in its cell") {
    Heightmap hm = build_heightmap({{0.021, -0.039, 0.7}}, ws);
    CHECK(valid_cells(hm) == 1);
    CHECK(hm.valid.at(7, 1) == 1);
    CHECK(hm.height.at(7, 1) == 0.7);
  }

  SUBCASE("max wins regardless of order") {
    std::vector<Eigen::Vector3d> cloud = {
        {0.001, 0.001, 0.3}, {0.002, 0.002, 0.9}, {0.003, 0.003, 0.6}};
    Heightmap a = build_heightmap(cloud, ws);
    std::reverse(cloud.begin(), cloud.end());
    Heightmap b = build_heightmap(cloud, ws);
    CHECK(a == b);
    CHECK(a.height.at(5, 5) == 0.9);
    CHECK(valid_cells(a) == 1);
  }

  SUBCASE("bounds are closed at min and open at max") {
    Heightmap hm = build_heightmap(
        {
            {-0.05, -0.05, 0.5},   // exactly min corner: kept
            {0.05, 0.0, 0.5},      // x at max: dropped
            {0.0, 0.0, 1.0},       // z at max: dropped
            {-0.0501, 0.0, 0.5},   // below min: dropped
        },
        ws);
    CHECK(valid_cells(hm) == 1);
    CHECK(hm.valid.at(0, 0) == 1);
  }

  SUBCASE("empty and all-outside clouds give empty maps") {
    CHECK(valid_cells(build_heightmap({}, ws)) == 0);
    CHECK(valid_cells(build_heightmap({{9.0, 9.0, 9.0}}, ws)) == 0);
  }
}

TEST_CASE("sphere on a table shows up as a centered bump") {
  const double H = 0.5, r = 0.05;
  SceneSpec spec;
  spec.intrinsics = {300.0, 300.0, 32.0, 32.0, 64, 64};
  spec.primitives.push_back(
      Primitive::make_plane({0, 0, H}, {0, 0, -1}));
  spec.primitives.push_back(
      Primitive::make_sphere({0, 0, H - r}, r, true));
  spec.support_plane = 0;
  Scene s = render_scene(spec);

  Workspace ws = square_workspace(0.08, 0.2, 0.002);
  ws.cam_to_world = overhead(H);
  auto cloud = backproject_cloud(s.gt_depth, s.intrinsics, ws.cam_to_world);
  Heightmap hm = build_heightmap(cloud, ws);

  // Peak: the sphere top, one full diameter above the table plane.
  double peak = -1.0;
  int px = -1, py = -1;
  for (int y = 0; y < hm.rows(); ++y)
    for (int x = 0; x < hm.width(); ++x)
      if (hm.valid.at(x, y) && hm.height.at(x, y) > peak) {
        peak = hm.height.at(x, y);
        px = x;
        py = y;
      }
  CHECK(peak == doctest::Approx(2 * r).epsilon(1e-9));
  CHECK(px == 40);
  CHECK(py == 40);

  // Away from the bump the surface is the table at height zero. The frame
  // projects to cells 14..65, so cell (20,20) is covered and cell (5,5)
  // is outside the view and stays invalid.
  CHECK(hm.valid.at(20, 20) == 1);
  CHECK(std::abs(hm.height.at(20, 20)) < 1e-12);
  CHECK(hm.valid.at(5, 5) == 0);
  int bump = 0;
  for (int y = 0; y < hm.rows(); ++y)
    for (int x = 0; x < hm.width(); ++x)
      if (hm.valid.at(x, y) && hm.height.at(x, y) > r) ++bump;
  // Cells above the center height form a disk of roughly the sphere radius
  // (25 cells at this resolution).
  CHECK(bump > 1000);
  CHECK(bump < 2300);
}

TEST_CASE("rotation_stack starts with the input itself") {
  Heightmap h(5, 4);
  for (size_t i = 0; i < h.height.size(); ++i) {
    h.height[i] = 0.01 * static_cast<double>(i);
    h.valid[i] = i % 3 == 0 ? 0 : 1;
  }
  auto stack = rotation_stack(h, 7);
  REQUIRE(stack.size() == 7);
  CHECK(stack[0] == h);
  CHECK_THROWS_AS(rotation_stack(h, 0), ConfigError);
  CHECK(rotation_stack(h, 1).size() == 1);
}

TEST_CASE("quarter turns on square grids permute cells exactly") {
  Heightmap h(3, 3);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) {
      h.height.at(x, y) = 10.0 * y + x;
      h.valid.at(x, y) = 1;
    }
  h.valid.at(2, 0) = 0;

  auto stack = rotation_stack(h, 4);
  REQUIRE(stack.size() == 4);

  // 90 degrees: out(x, y) = in(y, h-1-x).
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) {
      CHECK(stack[1].height.at(x, y) == h.height.at(y, 2 - x));
      CHECK(stack[1].valid.at(x, y) == h.valid.at(y, 2 - x));
      CHECK(stack[2].height.at(x, y) == h.height.at(2 - x, 2 - y));
      CHECK(stack[3].height.at(x, y) == h.height.at(2 - y, x));
    }

  // Two quarter turns compose into the half turn.
  auto once = rotation_stack(h, 4)[1];
  auto twice = rotation_stack(once, 4)[1];
  CHECK(twice == stack[2]);
}

TEST_CASE("half turn is exact on non-square grids") {
  Heightmap h(4, 2);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 4; ++x) {
      h.height.at(x, y) = x + 10.0 * y;
      h.valid.at(x, y) = 1;
    }
  h.valid.at(0, 1) = 0;

  auto stack = rotation_stack(h, 2);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 4; ++x) {
      CHECK(stack[1].height.at(x, y) == h.height.at(3 - x, 1 - y));
      CHECK(stack[1].valid.at(x, y) == h.valid.at(3 - x, 1 - y));
    }

  // A quarter turn of a non-square grid has to resample, and cells swung
  // outside the footprint come back invalid.
  auto quarters = rotation_stack(h, 4);
  CHECK(valid_cells(quarters[1]) < valid_cells(h));
  CHECK(quarters[2] == stack[1]);
}

TEST_CASE("sixteen rotations of a centered disk agree on the overlap") {
  const int n = 64;
  const double c = (n - 1) / 2.0, radius = 20.0, height = 0.07;
  Heightmap disk(n, n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      if ((x - c) * (x - c) + (y - c) * (y - c) <= radius * radius) {
        disk.height.at(x, y) = height;
        disk.valid.at(x, y) = 1;
      }

  auto stack = rotation_stack(disk, 16);
  REQUIRE(stack.size() == 16);
  CHECK(stack[0] == disk);
  const int base = valid_cells(disk);
  for (int k = 1; k < 16; ++k) {
    int overlap = 0;
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        if (!stack[k].valid.at(x, y)) continue;
        CHECK(std::abs(stack[k].height.at(x, y) - height) < 1e-6);
        if (disk.valid.at(x, y)) ++overlap;
      }
    // Bilinear support erodes at most a two-cell rim off the disk edge.
    CHECK(overlap > M_PI * (radius - 2.5) * (radius - 2.5));
    CHECK(valid_cells(stack[k]) <= base);
  }
  // The quarter turns are not eroded at all.
  CHECK(valid_cells(stack[4]) == base);
  CHECK(valid_cells(stack[8]) == base);
  CHECK(valid_cells(stack[12]) == base);
}