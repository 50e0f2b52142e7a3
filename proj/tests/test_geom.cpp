#include <doctest.h>

#include <Eigen/Geometry>
#include <cmath>

#include "dbenet/geom.hpp"
#include "dbenet/kdtree.hpp"
#include "support/oracles.hpp"

using namespace dbenet;

TEST_CASE("apply_transform identity and axis rotation") {
  PointCloud c;
  c.points = {{1, 0, 0}, {0.5, -0.25, 2}};
  PointCloud same = apply_transform(c, RigidTransform::identity());
  for (size_t i = 0; i < c.points.size(); ++i) CHECK((same.points[i] - c.points[i]).norm() == 0.0);

  RigidTransform rz;  // 90 degrees about z
  rz.rotation = Eigen::AngleAxisd(M_PI / 2, Vec3::UnitZ()).toRotationMatrix();
  PointCloud rot = apply_transform(c, rz);
  CHECK((rot.points[0] - Vec3(0, 1, 0)).norm() < 1e-15);
}

TEST_CASE("transform round trip through invert") {
  Rng rng(11);
  auto pts = oracle::random_points(rng, 50);
  PointCloud c;
  c.points = pts;
  RigidTransform T = oracle::random_transform(rng);
  PointCloud back = apply_transform(apply_transform(c, T), invert(T));
  for (size_t i = 0; i < pts.size(); ++i) CHECK((back.points[i] - pts[i]).norm() < 1e-12);
}

TEST_CASE("compose matches sequential application") {
  Rng rng(12);
  RigidTransform t1 = oracle::random_transform(rng);
  RigidTransform t2 = oracle::random_transform(rng);
  CHECK(compose(RigidTransform::identity(), t1).matrix().isApprox(t1.matrix(), 1e-15));
  CHECK(invert(RigidTransform::identity()).matrix().isApprox(Mat4::Identity(), 1e-15));
  for (int i = 0; i < 20; ++i) {
    Vec3 p(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    CHECK((compose(t1, t2).apply(p) - t1.apply(t2.apply(p))).norm() < 1e-12);
  }
}

TEST_CASE("apply_transform preserves pairwise distances") {
  Rng rng(13);
  auto pts = oracle::random_points(rng, 30);
  PointCloud c;
  c.points = pts;
  RigidTransform T = oracle::random_transform(rng);
  PointCloud moved = apply_transform(c, T);
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j) {
      const double before = (pts[i] - pts[j]).norm();
      const double after = (moved.points[i] - moved.points[j]).norm();
      CHECK(std::abs(before - after) < 1e-9);
    }
}

TEST_CASE("voxel_downsample basics") {
  PointCloud single;
  single.points = {{0.2, 0.3, 0.4}};
  PointCloud out = voxel_downsample(single, 0.05);
  REQUIRE(out.size() == 1);
  CHECK((out.points[0] - Vec3(0.2, 0.3, 0.4)).norm() < 1e-15);

  PointCloud two;
  two.points = {{0, 0, 0}, {0.01, 0, 0}};
  out = voxel_downsample(two, 0.05);
  REQUIRE(out.size() == 1);
  CHECK((out.points[0] - Vec3(0.005, 0, 0)).norm() < 1e-15);

  CHECK_THROWS_AS(voxel_downsample(two, 0.0), InvalidArgument);
}

TEST_CASE("voxel_downsample keeps well-separated points") {
  Rng rng(14);
  PointCloud c;
  const double voxel = 0.05;
  for (int i = 0; i < 20; ++i) c.points.emplace_back(i * 2.5 * voxel, 0, 0);
  PointCloud out = voxel_downsample(c, voxel);
  CHECK(out.size() == c.size());
}

TEST_CASE("voxel_downsample averages auxiliary channels") {
  PointCloud c;
  c.points = {{0.01, 0.01, 0.01}, {0.02, 0.01, 0.01}};
  c.aux = {0.2, 0.4, 0.6, 0.8};
  c.aux_channels = 2;
  PointCloud out = voxel_downsample(c, 0.05);
  REQUIRE(out.size() == 1);
  CHECK(out.aux_at(0, 0) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(out.aux_at(0, 1) == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("voxel_downsample idempotent on centered grid") {
  // Points placed at voxel centers stay put, so a second pass is a no-op.
  PointCloud c;
  const double voxel = 0.1;
  for (int x = 0; x < 4; ++x)
    for (int y = 0; y < 3; ++y) c.points.emplace_back((x + 0.5) * voxel, (y + 0.5) * voxel, 0.5 * voxel);
  PointCloud once = voxel_downsample(c, voxel);
  PointCloud twice = voxel_downsample(once, voxel);
  REQUIRE(once.size() == twice.size());
  for (int64_t i = 0; i < once.size(); ++i)
    CHECK((once.points[static_cast<size_t>(i)] - twice.points[static_cast<size_t>(i)]).norm() == 0.0);
}

TEST_CASE("boundary points go to the higher-index voxel") {
  PointCloud c;
  c.points = {{0.05, 0, 0}, {0.049999, 0, 0}};
  PointCloud out = voxel_downsample(c, 0.05);
  CHECK(out.size() == 2);  // 0.05 lands in voxel 1, 0.049999 in voxel 0
}

TEST_CASE("kabsch recovers exact transforms") {
  Rng rng(15);
  auto src = oracle::random_points(rng, 12);

  SUBCASE("identity") {
    RigidTransform T = kabsch(src, src);
    CHECK((T.rotation - Mat3::Identity()).norm() < 1e-12);
    CHECK(T.translation.norm() < 1e-12);
  }

  SUBCASE("known z-rotation") {
    RigidTransform rz;
    rz.rotation = Eigen::AngleAxisd(M_PI / 2, Vec3::UnitZ()).toRotationMatrix();
    rz.translation = Vec3(0.3, -0.2, 0.7);
    std::vector<Vec3> dst;
    for (const auto& p : src) dst.push_back(rz.apply(p));
    RigidTransform T = kabsch(src, dst);
    CHECK((T.rotation - rz.rotation).norm() < 1e-10);
    CHECK((T.translation - rz.translation).norm() < 1e-10);
  }

  SUBCASE("random transforms, property check") {
    for (int trial = 0; trial < 25; ++trial) {
      RigidTransform T = oracle::random_transform(rng);
      std::vector<Vec3> dst;
      for (const auto& p : src) dst.push_back(T.apply(p));
      RigidTransform est = kabsch(src, dst);
      CHECK((est.rotation - T.rotation).norm() < 1e-9);
      CHECK((est.translation - T.translation).norm() < 1e-9);
    }
  }
}

TEST_CASE("kabsch never returns a reflection") {
  // Near-planar source with a mirrored destination.
  std::vector<Vec3> src = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 1e-6}};
  std::vector<Vec3> dst;
  for (const auto& p : src) dst.emplace_back(p.x(), p.y(), -p.z());
  RigidTransform T = kabsch(src, dst);
  CHECK(T.rotation.determinant() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("kabsch degenerate inputs") {
  std::vector<Vec3> two = {{0, 0, 0}, {1, 0, 0}};
  CHECK_THROWS_AS(kabsch(two, two), DegenerateInput);
  std::vector<Vec3> line = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
  CHECK_THROWS_AS(kabsch(line, line), DegenerateInput);
}

TEST_CASE("knn and radius match brute force") {
  Rng rng(16);
  auto pts = oracle::random_points(rng, 200);
  SpatialIndex index(pts);
  for (int q = 0; q < 20; ++q) {
    Vec3 query(rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2));
    for (int k : {1, 5, 17}) CHECK(index.knn(query, k) == oracle::knn_brute(pts, query, k));
    for (double r : {0.1, 0.4, 0.9}) CHECK(index.radius_search(query, r) == oracle::radius_brute(pts, query, r));
  }
}

TEST_CASE("knn edges") {
  std::vector<Vec3> pts = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  SpatialIndex index(pts);
  CHECK(index.knn(Vec3(1, 0, 0), 1) == std::vector<int>{1});
  CHECK(index.knn(Vec3(0, 0, 0), 10) == std::vector<int>{0, 1, 2});  // k > n returns all
  CHECK(index.radius_search(Vec3(0.5, 0.5, 2.0), 0.25).empty());
}

TEST_CASE("knn tie-break prefers lower id") {
  std::vector<Vec3> pts = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}};
  SpatialIndex index(pts);
  CHECK(index.knn(Vec3(0, 0, 0), 2) == std::vector<int>{0, 1});
}

TEST_CASE("kabsch round-trips apply_transform") {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    auto src = oracle::random_points(rng, 8);
    PointCloud c;
    c.points = src;
    RigidTransform T = oracle::random_transform(rng);
    PointCloud moved = apply_transform(c, T);
    RigidTransform est = kabsch(src, moved.points);
    CHECK((est.rotation - T.rotation).norm() < 1e-9);
    CHECK((est.translation - T.translation).norm() < 1e-9);
  }
}
