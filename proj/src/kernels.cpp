#include "swmor/kernels.hpp"

#include "swmor/common.hpp"

#include <cstdlib>
#include <cstring>

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#endif
#if defined(__aarch64__)
#include <arm_neon.h>
#endif

namespace swmor::kernels {

namespace {

void check_sizes(std::size_t a, std::size_t b) {
    if (a != b) throw DimensionMismatch("kernels", "vector lengths differ");
}

}  // namespace

double dot_scalar(std::span<const double> x, std::span<const double> y) {
    check_sizes(x.size(), y.size());
    const std::size_t n = x.size();
    double s[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        for (int k = 0; k < 4; ++k) s[k] += x[i + k] * y[i + k];
    double tail = 0.0;
    for (; i < n; ++i) tail += x[i] * y[i];
    return ((s[0] + s[1]) + (s[2] + s[3])) + tail;
}

void axpy_scalar(double a, std::span<const double> x, std::span<double> y) {
    check_sizes(x.size(), y.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

#if defined(__x86_64__) || defined(_M_X64)
__attribute__((target("avx2,fma"))) double dot_avx2(std::span<const double> x,
                                                    std::span<const double> y) {
    check_sizes(x.size(), y.size());
    const std::size_t n = x.size();
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(x.data() + i), _mm256_loadu_pd(y.data() + i), acc);
    alignas(32) double s[4];
    _mm256_store_pd(s, acc);
    double tail = 0.0;
    for (; i < n; ++i) tail += x[i] * y[i];
    return ((s[0] + s[1]) + (s[2] + s[3])) + tail;
}

__attribute__((target("avx2,fma"))) void axpy_avx2(double a, std::span<const double> x,
                                                   std::span<double> y) {
    check_sizes(x.size(), y.size());
    const std::size_t n = x.size();
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d r =
            _mm256_fmadd_pd(va, _mm256_loadu_pd(x.data() + i), _mm256_loadu_pd(y.data() + i));
        _mm256_storeu_pd(y.data() + i, r);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}
#endif

#if defined(__aarch64__)
double dot_neon(std::span<const double> x, std::span<const double> y) {
    check_sizes(x.size(), y.size());
    const std::size_t n = x.size();
    float64x2_t a0 = vdupq_n_f64(0.0), a1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        a0 = vfmaq_f64(a0, vld1q_f64(x.data() + i), vld1q_f64(y.data() + i));
        a1 = vfmaq_f64(a1, vld1q_f64(x.data() + i + 2), vld1q_f64(y.data() + i + 2));
    }
    double tail = 0.0;
    for (; i < n; ++i) tail += x[i] * y[i];
    return ((vgetq_lane_f64(a0, 0) + vgetq_lane_f64(a0, 1)) +
            (vgetq_lane_f64(a1, 0) + vgetq_lane_f64(a1, 1))) +
           tail;
}

void axpy_neon(double a, std::span<const double> x, std::span<double> y) {
    check_sizes(x.size(), y.size());
    const std::size_t n = x.size();
    const float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(y.data() + i, vfmaq_f64(vld1q_f64(y.data() + i), va, vld1q_f64(x.data() + i)));
    for (; i < n; ++i) y[i] += a * x[i];
}
#endif

bool isa_available(Isa isa) {
    switch (isa) {
        case Isa::Scalar:
            return true;
        case Isa::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Isa::Neon:
#if defined(__aarch64__)
            return true;
#else
            return false;
#endif
    }
    return false;
}

namespace {

struct Table {
    Isa isa;
    double (*dot)(std::span<const double>, std::span<const double>);
    void (*axpy)(double, std::span<const double>, std::span<double>);
};

Table select() {
    const char* env = std::getenv("SWMOR_KERNELS");
    const bool force_scalar = env != nullptr && std::strcmp(env, "scalar") == 0;
    if (!force_scalar) {
#if defined(__x86_64__) || defined(_M_X64)
        if (isa_available(Isa::Avx2)) return {Isa::Avx2, &dot_avx2, &axpy_avx2};
#endif
#if defined(__aarch64__)
        return {Isa::Neon, &dot_neon, &axpy_neon};
#endif
    }
    return {Isa::Scalar, &dot_scalar, &axpy_scalar};
}

const Table& table() {
    static const Table t = select();
    return t;
}

}  // namespace

double dot(std::span<const double> x, std::span<const double> y) { return table().dot(x, y); }
void axpy(double a, std::span<const double> x, std::span<double> y) { table().axpy(a, x, y); }
Isa active_isa() { return table().isa; }

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
        case Isa::Neon: return "neon";
    }
    return "unknown";
}

}  // namespace swmor::kernels
