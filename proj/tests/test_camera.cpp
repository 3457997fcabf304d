#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <glassdepth/camera.hpp>
#include <glassdepth/rng.hpp>

using namespace glassdepth;

namespace {

CameraIntrinsics vga() { return {600.0, 600.0, 320.0, 240.0, 640, 480}; }

}  // namespace

TEST_CASE("validate accepts a normal camera and rejects broken ones") {
  CHECK_NOTHROW(vga().validate());

  auto broken = [](auto mutate) {
    CameraIntrinsics c = vga();
    mutate(c);
    return c;
  };
  CHECK_THROWS_AS(broken([](auto& c) { c.fx = 0.0; }).validate(), ConfigError);
  CHECK_THROWS_AS(broken([](auto& c) { c.fy = -1.0; }).validate(), ConfigError);
  CHECK_THROWS_AS(broken([](auto& c) { c.width = 0; }).validate(), ConfigError);
  CHECK_THROWS_AS(broken([](auto& c) { c.cx = 0.0; }).validate(), ConfigError);
  CHECK_THROWS_AS(broken([](auto& c) { c.cx = 640.0; }).validate(), ConfigError);
  CHECK_THROWS_AS(broken([](auto& c) { c.cy = -3.0; }).validate(), ConfigError);
  CHECK_THROWS_AS(broken([](auto& c) { c.cy = 500.0; }).validate(), ConfigError);
}

TEST_CASE("project maps the principal ray and an off-axis point") {
  const CameraIntrinsics intr = vga();
  Eigen::Vector2d uv = project({0.0, 0.0, 0.5}, intr);
  CHECK(uv.x() == doctest::Approx(320.0).epsilon(1e-12));
  CHECK(uv.y() == doctest::Approx(240.0).epsilon(1e-12));

  // 600 * 0.1 / 0.5 + 320
  uv = project({0.1, 0.0, 0.5}, intr);
  CHECK(uv.x() == doctest::Approx(440.0).epsilon(1e-12));
  CHECK(uv.y() == doctest::Approx(240.0).epsilon(1e-12));

  CHECK_THROWS_AS(project({0.0, 0.0, 0.0}, intr), std::domain_error);
  CHECK_THROWS_AS(project({0.0, 0.0, -0.5}, intr), std::domain_error);
}

TEST_CASE("backproject inverts the projection examples") {
  const CameraIntrinsics intr = vga();
  Eigen::Vector3d p = backproject(320.0, 240.0, 0.5, intr);
  CHECK(p.isApprox(Eigen::Vector3d(0.0, 0.0, 0.5), 1e-12));
  p = backproject(440.0, 240.0, 0.5, intr);
  CHECK(p.isApprox(Eigen::Vector3d(0.1, 0.0, 0.5), 1e-12));

  // Homogeneity: doubling depth doubles the point.
  Eigen::Vector3d a = backproject(123.0, 77.0, 1.0, intr);
  Eigen::Vector3d b = backproject(123.0, 77.0, 2.0, intr);
  CHECK((b - 2.0 * a).norm() == doctest::Approx(0.0).epsilon(1e-15));

  CHECK_THROWS_AS(backproject(10.0, 10.0, 0.0, intr), std::domain_error);
  CHECK_THROWS_AS(backproject(10.0, 10.0, -1.0, intr), std::domain_error);
}

TEST_CASE("project/backproject round trip on random pixels and depths") {
  const CameraIntrinsics intr = vga();
  Rng rng(42);
  for (int i = 0; i < 100; ++i) {
    const double u = rng.uniform(0.0, intr.width);
    const double v = rng.uniform(0.0, intr.height);
    const double d = rng.uniform(0.05, 10.0);

    Eigen::Vector3d p = backproject(u, v, d, intr);
    Eigen::Vector2d uv = project(p, intr);
    CHECK(std::abs(uv.x() - u) < 1e-9);
    CHECK(std::abs(uv.y() - v) < 1e-9);

    // And point -> pixel -> point, relative 1e-9.
    Eigen::Vector3d q = backproject(uv.x(), uv.y(), p.z(), intr);
    CHECK((q - p).norm() < 1e-9 * p.norm());
  }
}

TEST_CASE("ray matches backproject direction and has unit z") {
  const CameraIntrinsics intr = vga();
  Rng rng(7);
  for (int i = 0; i < 20; ++i) {
    const double u = rng.uniform(0.0, intr.width);
    const double v = rng.uniform(0.0, intr.height);
    Eigen::Vector3d r = intr.ray(u, v);
    CHECK(r.z() == 1.0);
    const double d = rng.uniform(0.1, 5.0);
    CHECK((d * r - backproject(u, v, d, intr)).norm() < 1e-12);
  }
}
