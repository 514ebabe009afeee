// Compiled with -mavx2 -mfma on x86-64 (see src/CMakeLists.txt). Nothing in
// this file may run before dispatch.cpp has confirmed CPU support.

#include "morpho/simd/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

namespace morpho::simd {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double lane(__m256d v, int i) {
  alignas(32) double buf[4];
  _mm256_store_pd(buf, v);
  return buf[i];
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  if (i + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    i += 4;
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double squared_distance_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
    acc1 = _mm256_fmadd_pd(d1, d1, acc1);
  }
  if (i + 4 <= n) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
    i += 4;
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Four points are three registers: [x0 y0 z0 x1] [y1 z1 x2 y2] [z2 x3 y3 z3].
Vec3 point_sum_avx2(const double* xyz, std::size_t n_points) {
  __m256d s0 = _mm256_setzero_pd();
  __m256d s1 = _mm256_setzero_pd();
  __m256d s2 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n_points; i += 4) {
    const double* p = xyz + 3 * i;
    s0 = _mm256_add_pd(s0, _mm256_loadu_pd(p));
    s1 = _mm256_add_pd(s1, _mm256_loadu_pd(p + 4));
    s2 = _mm256_add_pd(s2, _mm256_loadu_pd(p + 8));
  }
  Vec3 s{lane(s0, 0) + lane(s0, 3) + lane(s1, 2) + lane(s2, 1),
         lane(s0, 1) + lane(s1, 0) + lane(s1, 3) + lane(s2, 2),
         lane(s0, 2) + lane(s1, 1) + lane(s2, 0) + lane(s2, 3)};
  for (; i < n_points; ++i) {
    s[0] += xyz[3 * i];
    s[1] += xyz[3 * i + 1];
    s[2] += xyz[3 * i + 2];
  }
  return s;
}

Mat3 cross_covariance_avx2(const double* a, const Vec3& ca, const double* b, const Vec3& cb,
                           std::size_t n_points) {
  const __m256i ix = _mm256_setr_epi64x(0, 3, 6, 9);
  const __m256i iy = _mm256_setr_epi64x(1, 4, 7, 10);
  const __m256i iz = _mm256_setr_epi64x(2, 5, 8, 11);
  const __m256d cax = _mm256_set1_pd(ca[0]), cay = _mm256_set1_pd(ca[1]), caz = _mm256_set1_pd(ca[2]);
  const __m256d cbx = _mm256_set1_pd(cb[0]), cby = _mm256_set1_pd(cb[1]), cbz = _mm256_set1_pd(cb[2]);
  __m256d h[9];
  for (auto& v : h) v = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n_points; i += 4) {
    const double* pa = a + 3 * i;
    const double* pb = b + 3 * i;
    const __m256d ax = _mm256_sub_pd(_mm256_i64gather_pd(pa, ix, 8), cax);
    const __m256d ay = _mm256_sub_pd(_mm256_i64gather_pd(pa, iy, 8), cay);
    const __m256d az = _mm256_sub_pd(_mm256_i64gather_pd(pa, iz, 8), caz);
    const __m256d bx = _mm256_sub_pd(_mm256_i64gather_pd(pb, ix, 8), cbx);
    const __m256d by = _mm256_sub_pd(_mm256_i64gather_pd(pb, iy, 8), cby);
    const __m256d bz = _mm256_sub_pd(_mm256_i64gather_pd(pb, iz, 8), cbz);
    h[0] = _mm256_fmadd_pd(ax, bx, h[0]);
    h[1] = _mm256_fmadd_pd(ax, by, h[1]);
    h[2] = _mm256_fmadd_pd(ax, bz, h[2]);
    h[3] = _mm256_fmadd_pd(ay, bx, h[3]);
    h[4] = _mm256_fmadd_pd(ay, by, h[4]);
    h[5] = _mm256_fmadd_pd(ay, bz, h[5]);
    h[6] = _mm256_fmadd_pd(az, bx, h[6]);
    h[7] = _mm256_fmadd_pd(az, by, h[7]);
    h[8] = _mm256_fmadd_pd(az, bz, h[8]);
  }
  Mat3 out;
  for (int k = 0; k < 9; ++k) out[k] = hsum(h[k]);
  for (; i < n_points; ++i) {
    const double ax = a[3 * i] - ca[0], ay = a[3 * i + 1] - ca[1], az = a[3 * i + 2] - ca[2];
    const double bx = b[3 * i] - cb[0], by = b[3 * i + 1] - cb[1], bz = b[3 * i + 2] - cb[2];
    out[0] += ax * bx; out[1] += ax * by; out[2] += ax * bz;
    out[3] += ay * bx; out[4] += ay * by; out[5] += ay * bz;
    out[6] += az * bx; out[7] += az * by; out[8] += az * bz;
  }
  return out;
}

// One point per register: lanes [x y z -], columns of R broadcast-multiplied.
void transform_points_avx2(const Mat3& r, const Vec3& t, const double* in, double* out, std::size_t n_points) {
  const __m256d c0 = _mm256_setr_pd(r[0], r[3], r[6], 0.0);
  const __m256d c1 = _mm256_setr_pd(r[1], r[4], r[7], 0.0);
  const __m256d c2 = _mm256_setr_pd(r[2], r[5], r[8], 0.0);
  const __m256d vt = _mm256_setr_pd(t[0], t[1], t[2], 0.0);
  const __m256i mask = _mm256_setr_epi64x(-1, -1, -1, 0);
  for (std::size_t i = 0; i < n_points; ++i) {
    const double* p = in + 3 * i;
    __m256d acc = _mm256_fmadd_pd(c0, _mm256_broadcast_sd(p), vt);
    acc = _mm256_fmadd_pd(c1, _mm256_broadcast_sd(p + 1), acc);
    acc = _mm256_fmadd_pd(c2, _mm256_broadcast_sd(p + 2), acc);
    _mm256_maskstore_pd(out + 3 * i, mask, acc);
  }
}

double triple_product_sum_avx2(const double* xyz, const std::int32_t* faces, std::size_t n_faces) {
  const __m128i stride = _mm_setr_epi32(0, 3, 6, 9);
  const __m128i three = _mm_set1_epi32(3);
  const __m128i one = _mm_set1_epi32(1);
  __m256d acc = _mm256_setzero_pd();
  std::size_t f = 0;
  for (; f + 4 <= n_faces; f += 4) {
    const int* fp = faces + 3 * f;
    __m128i v[3];
    for (int c = 0; c < 3; ++c) v[c] = _mm_mullo_epi32(_mm_i32gather_epi32(fp + c, stride, 4), three);
    __m256d x[3], y[3], z[3];
    for (int c = 0; c < 3; ++c) {
      x[c] = _mm256_i32gather_pd(xyz, v[c], 8);
      const __m128i vy = _mm_add_epi32(v[c], one);
      y[c] = _mm256_i32gather_pd(xyz, vy, 8);
      z[c] = _mm256_i32gather_pd(xyz, _mm_add_epi32(vy, one), 8);
    }
    const __m256d cx = _mm256_fmsub_pd(y[1], z[2], _mm256_mul_pd(z[1], y[2]));
    const __m256d cy = _mm256_fmsub_pd(z[1], x[2], _mm256_mul_pd(x[1], z[2]));
    const __m256d cz = _mm256_fmsub_pd(x[1], y[2], _mm256_mul_pd(y[1], x[2]));
    acc = _mm256_fmadd_pd(x[0], cx, acc);
    acc = _mm256_fmadd_pd(y[0], cy, acc);
    acc = _mm256_fmadd_pd(z[0], cz, acc);
  }
  double s = hsum(acc);
  for (; f < n_faces; ++f) {
    const double* p = xyz + 3 * static_cast<std::size_t>(faces[3 * f]);
    const double* q = xyz + 3 * static_cast<std::size_t>(faces[3 * f + 1]);
    const double* r = xyz + 3 * static_cast<std::size_t>(faces[3 * f + 2]);
    s += p[0] * (q[1] * r[2] - q[2] * r[1]) + p[1] * (q[2] * r[0] - q[0] * r[2]) +
         p[2] * (q[0] * r[1] - q[1] * r[0]);
  }
  return s;
}

const KernelTable kAvx2Table{"avx2",
                             dot_avx2,
                             axpy_avx2,
                             squared_distance_avx2,
                             point_sum_avx2,
                             cross_covariance_avx2,
                             transform_points_avx2,
                             triple_product_sum_avx2};

}  // namespace

const KernelTable* avx2_kernels() { return &kAvx2Table; }

}  // namespace morpho::simd

#else

namespace morpho::simd {
const KernelTable* avx2_kernels() { return nullptr; }
}  // namespace morpho::simd

#endif
