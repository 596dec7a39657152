#pragma once

#include "swmor/common.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>

namespace swmor {

// Counter-based generator: draw k of stream s is splitmix64(seed, s, k).
// Any language can reproduce a stream from (seed, stream) alone.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(splitmix64(seed ^ splitmix64(stream + 0x632BE59BD9B4E019ULL))) {}

    std::uint64_t next_u64() { return splitmix64(key_ + 0x9E3779B97F4A7C15ULL * counter_++); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    double normal() {
        double u1 = uniform();
        const double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    Mat normal_matrix(Index rows, Index cols) {
        Mat m(rows, cols);
        for (Index j = 0; j < cols; ++j)
            for (Index i = 0; i < rows; ++i) m(i, j) = normal();
        return m;
    }

    Mat orthogonal(Index n) {
        Eigen::HouseholderQR<Mat> qr(normal_matrix(n, n));
        Mat q = qr.householderQ() * Mat::Identity(n, n);
        const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
        for (Index j = 0; j < n; ++j)
            if (r(j, j) < 0) q.col(j) *= -1.0;
        return q;
    }

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace swmor
