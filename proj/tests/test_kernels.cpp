#include <doctest.h>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "morpho/simd/kernels.hpp"
#include "morpho/synth.hpp"

using namespace morpho;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::normal_distribution<double> d(0.0, 10.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// Every kernel of `k` against the scalar table, over lengths that exercise the tails.
void check_against_scalar(const simd::KernelTable& k) {
  const simd::KernelTable& s = simd::scalar_kernels();
  Rng rng = make_stream(44);
  for (std::size_t n = 0; n <= 41; ++n) {
    const auto a = random_vec(rng, 3 * n), b = random_vec(rng, 3 * n);
    CHECK(rel(k.dot(a.data(), b.data(), a.size()), s.dot(a.data(), b.data(), a.size())) < 1e-12);
    CHECK(rel(k.squared_distance(a.data(), b.data(), a.size()), s.squared_distance(a.data(), b.data(), a.size())) < 1e-12);

    auto y1 = b, y2 = b;
    k.axpy(0.7, a.data(), y1.data(), a.size());
    s.axpy(0.7, a.data(), y2.data(), a.size());
    for (std::size_t i = 0; i < y1.size(); ++i) CHECK(std::abs(y1[i] - y2[i]) < 1e-12);

    const auto ps = k.point_sum(a.data(), n), pr = s.point_sum(a.data(), n);
    for (int j = 0; j < 3; ++j) CHECK(rel(ps[j], pr[j]) < 1e-12);

    const simd::Vec3 ca{1.0, -2.0, 0.5}, cb{0.0, 3.0, -1.0};
    const auto cc = k.cross_covariance(a.data(), ca, b.data(), cb, n);
    const auto cr = s.cross_covariance(a.data(), ca, b.data(), cb, n);
    for (int j = 0; j < 9; ++j) CHECK(rel(cc[j], cr[j]) < 1e-11);

    const simd::Mat3 rot{0.36, 0.48, -0.8, -0.8, 0.6, 0.0, 0.48, 0.64, 0.6};
    const simd::Vec3 t{5.0, -1.0, 2.0};
    std::vector<double> o1(a.size()), o2(a.size());
    k.transform_points(rot, t, a.data(), o1.data(), n);
    s.transform_points(rot, t, a.data(), o2.data(), n);
    for (std::size_t i = 0; i < o1.size(); ++i) CHECK(std::abs(o1[i] - o2[i]) < 1e-12);
  }
  const TriMesh m = make_template(2);
  std::vector<std::int32_t> faces;
  for (const auto& f : m.faces) faces.insert(faces.end(), f.begin(), f.end());
  for (std::size_t nf : {std::size_t{0}, std::size_t{1}, std::size_t{5}, m.faces.size()})
    CHECK(rel(k.triple_product_sum(m.vertices.data(), faces.data(), nf),
              s.triple_product_sum(m.vertices.data(), faces.data(), nf)) < 1e-12);
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("scalar kernels match direct formulas") {
  const simd::KernelTable& s = simd::scalar_kernels();
  const std::vector<double> a{1, 2, 3, 4, 5, 6}, b{6, 5, 4, 3, 2, 1};
  CHECK(s.dot(a.data(), b.data(), 6) == 56.0);
  CHECK(s.squared_distance(a.data(), b.data(), 6) == 70.0);
  const auto p = s.point_sum(a.data(), 2);
  CHECK(p == simd::Vec3{5, 7, 9});
  // Unit tetrahedron: 6 * volume = 1.
  const std::vector<double> v{0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1};
  const std::vector<std::int32_t> f{0, 2, 1, 0, 1, 3, 0, 3, 2, 1, 2, 3};
  CHECK(s.triple_product_sum(v.data(), f.data(), 4) == doctest::Approx(1.0));
}

TEST_CASE("AVX2 kernels agree with scalar kernels") {
  const simd::KernelTable* k = simd::avx2_kernels();
  if (k == nullptr || !simd::cpu_has_avx2()) {
    MESSAGE("AVX2 variant not available; skipped");
    return;
  }
  check_against_scalar(*k);
}

TEST_CASE("selected table is consistent with the environment") {
  const char* env = std::getenv("MORPHO_SIMD");
  if (env != nullptr && std::string(env) == "scalar") CHECK(simd::kernels().name == simd::scalar_kernels().name);
  check_against_scalar(simd::kernels());
}

}  // TEST_SUITE
