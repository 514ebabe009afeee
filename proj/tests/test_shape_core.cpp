#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include "helpers.hpp"
#include "morpho/cohort.hpp"
#include "morpho/csv.hpp"
#include "morpho/error.hpp"
#include "morpho/log.hpp"
#include "morpho/measure.hpp"
#include "morpho/mesh_io.hpp"
#include "morpho/procrustes.hpp"
#include "morpho/synth.hpp"

using namespace morpho;
using morpho::test::random_rotation;
using morpho::test::random_shape;
using morpho::test::TempDir;

namespace {

// Axis-aligned box [0,a]x[0,b]x[0,c], outward faces, all vertices LV_ENDO.
TriMesh box(double a, double b, double c) {
  TriMesh m;
  m.vertices.resize(8, 3);
  for (int i = 0; i < 8; ++i) m.vertices.row(i) << (i & 1 ? a : 0.0), (i & 2 ? b : 0.0), (i & 4 ? c : 0.0);
  m.faces = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
             {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  m.regions.assign(8, Region::LvEndo);
  return m;
}

// Template shell of the given region projected onto a sphere of radius r about c.
TriMesh sphere_shell(int resolution, Region region, double r, const Eigen::Vector3d& c = Eigen::Vector3d::Zero()) {
  TriMesh m = make_template(resolution);
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  int n = 0;
  for (Eigen::Index v = 0; v < m.n_vertices(); ++v)
    if (m.regions[static_cast<std::size_t>(v)] == region) {
      centroid += m.vertices.row(v).transpose();
      ++n;
    }
  centroid /= n;
  // Undo the per-axis ellipsoid radii so the shell is a true icosphere again.
  Eigen::Vector3d extent = Eigen::Vector3d::Zero();
  for (Eigen::Index v = 0; v < m.n_vertices(); ++v)
    if (m.regions[static_cast<std::size_t>(v)] == region)
      extent = extent.cwiseMax((m.vertices.row(v).transpose() - centroid).cwiseAbs());
  for (Eigen::Index v = 0; v < m.n_vertices(); ++v)
    if (m.regions[static_cast<std::size_t>(v)] == region) {
      const Eigen::Vector3d d = (m.vertices.row(v).transpose() - centroid).cwiseQuotient(extent).normalized();
      m.vertices.row(v) = (c + r * d).transpose();
    }
  return m;
}

}  // namespace

TEST_SUITE("shape_core") {

TEST_CASE("rigid_align recovers a known transform exactly") {
  Rng rng = make_stream(101);
  std::uniform_real_distribution<double> t(-50.0, 50.0);
  for (int trial = 0; trial < 100; ++trial) {
    const ShapeVector x = random_shape(rng, 30);
    RigidTransform truth;
    truth.rotation = random_rotation(rng);
    truth.translation = Eigen::Vector3d(t(rng), t(rng), t(rng));
    const ShapeVector y = truth.apply(x);
    const AlignResult r = rigid_align(x, y);
    CHECK((r.transform.rotation - truth.rotation).norm() < 1e-9);
    CHECK((r.transform.translation - truth.translation).norm() < 1e-9);
    CHECK(r.transform.is_proper());
    CHECK(rms_landmark_distance(r.aligned, y) < 1e-9);
  }
}

TEST_CASE("rigid_align never returns a reflection") {
  Rng rng = make_stream(7);
  const ShapeVector x = random_shape(rng, 20);
  // Mirror image: the best proper rotation cannot match exactly.
  Eigen::VectorXd m = x.coords();
  for (Eigen::Index i = 0; i < x.n_landmarks(); ++i) m(3 * i) = -m(3 * i);
  const AlignResult r = rigid_align(x, ShapeVector(m));
  CHECK(r.transform.rotation.determinant() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rms_landmark_distance(r.aligned, ShapeVector(m)) > 1e-3);
}

TEST_CASE("rigid_align rejects degenerate configurations") {
  Eigen::VectorXd line(9);
  line << 0, 0, 0, 1, 1, 1, 2, 2, 2;
  Rng rng = make_stream(3);
  const ShapeVector good = random_shape(rng, 3);
  CHECK_THROWS_AS(rigid_align(ShapeVector(line), good), NumericalError);
  CHECK_THROWS_AS(rigid_align(good, ShapeVector(Eigen::VectorXd::Zero(9))), NumericalError);
  CHECK_THROWS_AS(rigid_align(good, random_shape(rng, 4)), DimensionError);
}

TEST_CASE("transform algebra") {
  Rng rng = make_stream(5);
  RigidTransform a{random_rotation(rng), Eigen::Vector3d(1, 2, 3)};
  RigidTransform b{random_rotation(rng), Eigen::Vector3d(-4, 0, 2)};
  const ShapeVector x = random_shape(rng, 6);
  CHECK(rms_landmark_distance(a.then(b).apply(x), b.apply(a.apply(x))) < 1e-12);
  CHECK(rms_landmark_distance(a.inverse().apply(a.apply(x)), x) < 1e-12);
}

TEST_CASE("GPA on rigid copies collapses to one shape") {
  Rng rng = make_stream(202);
  const ShapeVector base = random_shape(rng, 40);
  std::uniform_real_distribution<double> t(-20.0, 20.0);
  ShapeMatrix shapes(12, base.size());
  for (int i = 0; i < 12; ++i) {
    RigidTransform tr{random_rotation(rng), Eigen::Vector3d(t(rng), t(rng), t(rng))};
    shapes.row(i) = tr.apply(base).coords().transpose();
  }
  const AtlasModel atlas = generalized_procrustes(shapes, {1e-12, 100});
  CHECK(atlas.converged);
  for (int i = 0; i < 12; ++i) {
    for (int j = i + 1; j < 12; ++j) CHECK(rms_landmark_distance(row_shape(atlas.aligned, i), row_shape(atlas.aligned, j)) < 1e-8);
    // transforms[i] maps input row i onto aligned row i
    CHECK(rms_landmark_distance(atlas.transforms[static_cast<std::size_t>(i)].apply(row_shape(shapes, i)),
                                row_shape(atlas.aligned, i)) < 1e-9);
  }
  CHECK((atlas.mean_shape.coords() - atlas.aligned.colwise().mean().transpose()).norm() < 1e-9);
}

TEST_CASE("GPA flags non-convergence instead of throwing") {
  Rng rng = make_stream(9);
  ShapeMatrix shapes(5, 30);
  for (int i = 0; i < 5; ++i) shapes.row(i) = random_shape(rng, 10).coords().transpose();
  ScopedWarningCapture cap;
  const AtlasModel atlas = generalized_procrustes(shapes, {1e-300, 1});
  CHECK_FALSE(atlas.converged);
  CHECK(atlas.iterations_run == 1);
  CHECK(cap.messages().size() == 1);
}

TEST_CASE("box volume is exact") {
  const TriMesh m = box(2.0, 3.0, 4.0);
  CHECK(std::abs(signed_volume_mm3(m, m.faces) - 24.0) < 1e-12);
  CHECK(std::abs(closed_volume(m, {Region::LvEndo}) - 0.024) < 1e-12);
}

TEST_CASE("inward faces are flipped with a warning") {
  TriMesh m = box(1.0, 1.0, 1.0);
  for (auto& f : m.faces) std::swap(f[1], f[2]);
  CHECK(signed_volume_mm3(m, m.faces) == doctest::Approx(-1.0));
  ScopedWarningCapture cap;
  CHECK(closed_volume(m, {Region::LvEndo}) == doctest::Approx(1e-3));
  CHECK(cap.messages().size() == 1);
}

TEST_CASE("open or inconsistent surfaces are rejected") {
  TriMesh m = box(1.0, 1.0, 1.0);
  m.faces.pop_back();
  CHECK_THROWS_AS(require_closed_oriented(m.faces), DataError);
  TriMesh flipped = box(1.0, 1.0, 1.0);
  std::swap(flipped.faces[0][1], flipped.faces[0][2]);
  CHECK_THROWS_AS(require_closed_oriented(flipped.faces), DataError);
}

TEST_CASE("icosphere volume approaches the sphere") {
  const TriMesh m = sphere_shell(3, Region::LvEndo, 10.0);
  const double v = closed_volume(m, {Region::LvEndo}) * 1000.0;  // mm^3
  const double exact = 4.0 / 3.0 * std::numbers::pi * 1000.0;
  CHECK(std::abs(v - exact) / exact < 0.01);
  CHECK(v < exact);  // inscribed polyhedron
}

TEST_CASE("concentric spheres give the analytic mass") {
  TriMesh m = sphere_shell(4, Region::LvEndo, 25.0);
  const TriMesh epi = sphere_shell(4, Region::LvEpi, 33.0);
  for (Eigen::Index v = 0; v < m.n_vertices(); ++v)
    if (m.regions[static_cast<std::size_t>(v)] == Region::LvEpi) m.vertices.row(v) = epi.vertices.row(v);
  const double analytic = kMyocardialDensity * 4.0 / 3.0 * std::numbers::pi * (33.0 * 33.0 * 33.0 - 25.0 * 25.0 * 25.0) / 1000.0;
  CHECK(std::abs(measure(m).lv_mass - analytic) / analytic < 0.01);
}

TEST_CASE("OFF round trip is exact") {
  TempDir dir("off");
  TriMesh m = make_template(1);
  m.vertices(0, 0) = 0.1 + 0.2;  // not representable in short decimal
  write_off(dir / "a.off", m);
  const TriMesh r = read_off(dir / "a.off");
  CHECK(r.vertices == m.vertices);
  CHECK(r.faces == m.faces);
}

TEST_CASE("malformed OFF is a format error") {
  TempDir dir("badoff");
  {
    std::ofstream(dir / "bad.off") << "OFF\n3 1 0\n0 0 0\n1 0 0\n";
  }
  CHECK_THROWS_AS(read_off(dir / "bad.off"), FormatError);
  {
    std::ofstream(dir / "idx.off") << "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n";
  }
  CHECK_THROWS_AS(read_off(dir / "idx.off"), FormatError);
  CHECK_THROWS_AS(read_off(dir / "missing.off"), FormatError);
}

TEST_CASE("corpus requires shared connectivity") {
  TempDir dir("corpus");
  const TriMesh t = make_template(1);
  ShapeMatrix shapes(2, 3 * t.n_vertices());
  shapes.row(0) = flatten(t).coords().transpose();
  shapes.row(1) = shapes.row(0).array() + 1.0;
  write_corpus(dir.path(), {"b", "a"}, shapes, t);
  const MeshCorpus c = load_corpus(dir.path());
  REQUIRE(c.ids.size() == 2);
  CHECK(c.ids[0] == "a");
  CHECK(c.shapes.row(0) == shapes.row(1));
  CHECK(c.templ.regions == t.regions);

  TriMesh other = make_template(1);
  other.faces.pop_back();
  write_off(dir / "c.off", other);
  CHECK_THROWS_AS(load_corpus(dir.path()), FormatError);
}

TEST_CASE("template measurements") {
  const MeasurementSet m = measure(make_template(2));
  CHECK(m.lv_edv == doctest::Approx(126.5).epsilon(0.01));
  CHECK(m.rv_edv == doctest::Approx(127.5).epsilon(0.01));
  CHECK(m.lv_mass == doctest::Approx(131.0).epsilon(0.01));
}

TEST_CASE("region names round trip") {
  for (Region r : {Region::LvEndo, Region::LvEpi, Region::Rv, Region::Septum}) CHECK(parse_region(region_name(r)) == r);
  CHECK_THROWS_AS(parse_region("AORTA"), FormatError);
}

TEST_CASE("csv quoting") {
  TempDir dir("csv");
  CsvTable t;
  t.header = {"id", "note"};
  t.rows = {{"a", "x, \"y\""}, {"b", ""}};
  write_csv(dir / "t.csv", t);
  const CsvTable r = read_csv(dir / "t.csv");
  CHECK(r.header == t.header);
  CHECK(r.rows == t.rows);
  CHECK(r.column("note") == 1);
  CHECK_THROWS_AS(r.column("zzz"), DataError);
}

TEST_CASE("cohort join and labels") {
  TempDir dir("cohort");
  const TriMesh t = make_template(1);
  ShapeMatrix shapes(3, 3 * t.n_vertices());
  for (int i = 0; i < 3; ++i) shapes.row(i) = flatten(t).coords().transpose().array() + i;
  write_corpus(dir / "m", {"s1", "s2", "s3"}, shapes, t);
  {
    std::ofstream(dir / "d.csv") << "subject_id,group,age\ns3,HTN,40\ns1,ctrl,30\ns2,HTN,NA\ns9,ctrl,1\n";
  }
  CohortFiles f;
  f.meshes = dir / "m";
  f.demographics = dir / "d.csv";
  f.class_column = "group";
  f.case_label = "HTN";
  const Cohort c = load_cohort(f);
  CHECK(c.ids == std::vector<std::string>{"s1", "s2", "s3"});
  CHECK(c.labels == std::vector<int>{0, 1, 1});
  CHECK(std::isnan(c.columns(1, 0)));
  CHECK_THROWS_AS(c.column("age"), DataError);
  CHECK(c.subset({0, 2}).column("age")(1) == 40.0);

  {
    std::ofstream(dir / "short.csv") << "subject_id,group\ns1,ctrl\n";
  }
  f.demographics = dir / "short.csv";
  CHECK_THROWS_AS(load_cohort(f), DataError);
}

TEST_CASE("standardizer uses population SD and rejects constants") {
  Eigen::MatrixXd raw(4, 2);
  raw << 1, 5, 2, 5, 3, 5, 4, 5;
  CHECK_THROWS_AS(Standardizer::fit({"a", "b"}, raw), DataError);
  const Standardizer s = Standardizer::fit({"a"}, raw.col(0));
  CHECK(s.sds(0) == doctest::Approx(std::sqrt(1.25)));
  const Eigen::MatrixXd z = s.apply(raw.col(0));
  CHECK(z.mean() == doctest::Approx(0.0));
  CHECK(z.squaredNorm() / 4.0 == doctest::Approx(1.0));
}

}  // TEST_SUITE
