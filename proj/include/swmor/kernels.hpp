#pragma once

#include <span>
#include <string_view>

namespace swmor::kernels {

enum class Isa { Scalar, Avx2, Neon };

// Reference implementations. Summation order: four interleaved partial sums,
// combined as (s0 + s1) + (s2 + s3), so scalar and SIMD variants agree closely.
double dot_scalar(std::span<const double> x, std::span<const double> y);
void axpy_scalar(double a, std::span<const double> x, std::span<double> y);

#if defined(__x86_64__) || defined(_M_X64)
double dot_avx2(std::span<const double> x, std::span<const double> y);
void axpy_avx2(double a, std::span<const double> x, std::span<double> y);
#endif
#if defined(__aarch64__)
double dot_neon(std::span<const double> x, std::span<const double> y);
void axpy_neon(double a, std::span<const double> x, std::span<double> y);
#endif

// Runtime-dispatched entry points. Selection happens once, on first use, from
// CPU feature detection; SWMOR_KERNELS=scalar forces the reference path.
double dot(std::span<const double> x, std::span<const double> y);
void axpy(double a, std::span<const double> x, std::span<double> y);

Isa active_isa();
std::string_view isa_name(Isa isa);
bool isa_available(Isa isa);

}  // namespace swmor::kernels
