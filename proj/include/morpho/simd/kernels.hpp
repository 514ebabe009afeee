#pragma once

// Inner loops over flattened shape data. Each kernel has a scalar reference
// implementation and, on x86-64, an AVX2+FMA variant selected at runtime.
// Variants agree to rounding; tests/test_kernels.cpp checks equivalence.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace morpho::simd {

// 3x3 row-major matrix as produced by cross_covariance.
using Mat3 = std::array<double, 9>;
using Vec3 = std::array<double, 3>;

struct KernelTable {
  std::string_view name;

  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  // Sum of xyz triples over n points.
  Vec3 (*point_sum)(const double* xyz, std::size_t n_points);
  // sum_i (a_i - ca)(b_i - cb)^T over interleaved xyz points
  Mat3 (*cross_covariance)(const double* a, const Vec3& ca, const double* b, const Vec3& cb,
                           std::size_t n_points);
  // out_i = R * (in_i) + t for interleaved xyz points; R row-major
  void (*transform_points)(const Mat3& rotation, const Vec3& translation, const double* in, double* out,
                           std::size_t n_points);
  // sum over faces of v0 . (v1 x v2), i.e. 6x the signed enclosed volume
  double (*triple_product_sum)(const double* xyz, const std::int32_t* faces, std::size_t n_faces);
};

const KernelTable& scalar_kernels();
// nullptr when the binary was built without x86-64 support.
const KernelTable* avx2_kernels();
bool cpu_has_avx2();

// Selected once: AVX2 when compiled in and supported by the CPU, unless
// MORPHO_SIMD=scalar is set in the environment.
const KernelTable& kernels();

// Convenience wrappers over kernels().
inline double dot(std::span<const double> a, std::span<const double> b) {
  return kernels().dot(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  kernels().axpy(alpha, x.data(), y.data(), x.size());
}
inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  return kernels().squared_distance(a.data(), b.data(), a.size());
}

}  // namespace morpho::simd
