#include "morpho/simd/kernels.hpp"

namespace morpho::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double squared_distance_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

Vec3 point_sum_scalar(const double* xyz, std::size_t n_points) {
  Vec3 s{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n_points; ++i) {
    s[0] += xyz[3 * i];
    s[1] += xyz[3 * i + 1];
    s[2] += xyz[3 * i + 2];
  }
  return s;
}

Mat3 cross_covariance_scalar(const double* a, const Vec3& ca, const double* b, const Vec3& cb,
                             std::size_t n_points) {
  Mat3 h{};
  for (std::size_t i = 0; i < n_points; ++i) {
    const double ax = a[3 * i] - ca[0], ay = a[3 * i + 1] - ca[1], az = a[3 * i + 2] - ca[2];
    const double bx = b[3 * i] - cb[0], by = b[3 * i + 1] - cb[1], bz = b[3 * i + 2] - cb[2];
    h[0] += ax * bx; h[1] += ax * by; h[2] += ax * bz;
    h[3] += ay * bx; h[4] += ay * by; h[5] += ay * bz;
    h[6] += az * bx; h[7] += az * by; h[8] += az * bz;
  }
  return h;
}

void transform_points_scalar(const Mat3& r, const Vec3& t, const double* in, double* out, std::size_t n_points) {
  for (std::size_t i = 0; i < n_points; ++i) {
    const double x = in[3 * i], y = in[3 * i + 1], z = in[3 * i + 2];
    out[3 * i] = r[0] * x + r[1] * y + r[2] * z + t[0];
    out[3 * i + 1] = r[3] * x + r[4] * y + r[5] * z + t[1];
    out[3 * i + 2] = r[6] * x + r[7] * y + r[8] * z + t[2];
  }
}

double triple_product_sum_scalar(const double* xyz, const std::int32_t* faces, std::size_t n_faces) {
  double s = 0.0;
  for (std::size_t f = 0; f < n_faces; ++f) {
    const double* p = xyz + 3 * static_cast<std::size_t>(faces[3 * f]);
    const double* q = xyz + 3 * static_cast<std::size_t>(faces[3 * f + 1]);
    const double* r = xyz + 3 * static_cast<std::size_t>(faces[3 * f + 2]);
    s += p[0] * (q[1] * r[2] - q[2] * r[1]) + p[1] * (q[2] * r[0] - q[0] * r[2]) +
         p[2] * (q[0] * r[1] - q[1] * r[0]);
  }
  return s;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar",
                                 dot_scalar,
                                 axpy_scalar,
                                 squared_distance_scalar,
                                 point_sum_scalar,
                                 cross_covariance_scalar,
                                 transform_points_scalar,
                                 triple_product_sum_scalar};
  return table;
}

}  // namespace morpho::simd
