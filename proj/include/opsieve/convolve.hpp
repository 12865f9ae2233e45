#pragma once

// 2-D linear convolution of grid fields with compactly supported kernels.
// Two interchangeable paths: an FFTW-based one (default) and a direct
// sliding-window sum; both produce the "full" convolution so sliding-window
// maxima can be taken over centers outside the original window.

#include <algorithm>
#include <cmath>
#include <functional>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "opsieve/common.hpp"

namespace opsieve::convolve {

/// Kernel sampled on grid offsets: value(i, j) with i, j in [-hw, hw],
/// stored row-major with side 2*hw + 1.
struct KernelTable {
    int hw = 0;
    std::vector<double> values;  // (2hw+1)^2

    int side() const { return 2 * hw + 1; }
    double at(int di, int dj) const { return values[size_t(di + hw) * side() + size_t(dj + hw)]; }
};

/// Indicator of a disk of radius R, sampled at node-center offsets of spacing h.
inline KernelTable disk_kernel(double R, double h) {
    KernelTable k;
    k.hw = int(std::ceil(R / h)) + 1;
    const int s = k.side();
    k.values.assign(size_t(s) * s, 0.0);
    for (int i = -k.hw; i <= k.hw; ++i)
        for (int j = -k.hw; j <= k.hw; ++j)
            if (double(i) * i + double(j) * j <= (R / h) * (R / h))
                k.values[size_t(i + k.hw) * s + size_t(j + k.hw)] = 1.0;
    return k;
}

/// Radial profile f(r) sampled at node-center offsets; support is cut where
/// f drops below `cutoff` (checked along the axis, f assumed non-increasing
/// at large r).
inline KernelTable radial_kernel(const std::function<double(double)>& f, double h, double max_r,
                                 double cutoff = 0.0) {
    int hw = int(std::ceil(max_r / h));
    if (cutoff > 0.0) {
        int w = 1;
        while (w < hw && std::abs(f(w * h)) > cutoff) ++w;
        hw = w;
    }
    KernelTable k;
    k.hw = hw;
    const int s = k.side();
    k.values.assign(size_t(s) * s, 0.0);
    for (int i = -hw; i <= hw; ++i)
        for (int j = -hw; j <= hw; ++j)
            k.values[size_t(i + hw) * s + size_t(j + hw)] = f(h * std::hypot(double(i), double(j)));
    return k;
}

/// Indicator-of-disk times a radial profile (kernel restricted to r <= R).
inline KernelTable windowed_radial_kernel(const std::function<double(double)>& f, double R,
                                          double h) {
    KernelTable k;
    k.hw = int(std::ceil(R / h)) + 1;
    const int s = k.side();
    k.values.assign(size_t(s) * s, 0.0);
    for (int i = -k.hw; i <= k.hw; ++i)
        for (int j = -k.hw; j <= k.hw; ++j) {
            const double r = h * std::hypot(double(i), double(j));
            if (double(i) * i + double(j) * j <= (R / h) * (R / h))
                k.values[size_t(i + k.hw) * s + size_t(j + k.hw)] = f(r);
        }
    return k;
}

/// Full linear convolution of an n-by-n field (row-major) with a kernel table.
/// Output has side n + 2*hw; output index (oi, oj) corresponds to a center at
/// field index (oi - hw, oj - hw), which may lie outside [0, n).
inline std::vector<double> full_direct(const std::vector<double>& field, int n,
                                       const KernelTable& k) {
    const int hw = k.hw, m = n + 2 * hw;
    std::vector<double> out(size_t(m) * m, 0.0);
    for (int ai = 0; ai < n; ++ai)
        for (int aj = 0; aj < n; ++aj) {
            const double v = field[size_t(ai) * n + aj];
            if (v == 0.0) continue;
            for (int di = -hw; di <= hw; ++di)
                for (int dj = -hw; dj <= hw; ++dj) {
                    const double kv = k.at(di, dj);
                    if (kv == 0.0) continue;
                    out[size_t(ai + hw + di) * m + size_t(aj + hw + dj)] += v * kv;
                }
        }
    return out;
}

namespace detail {
inline std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace detail

/// Same contract as full_direct, computed through FFTW r2c transforms.
inline std::vector<double> full_fft(const std::vector<double>& field, int n,
                                    const KernelTable& k) {
    const int hw = k.hw;
    const int m = n + 2 * hw;  // linear convolution length per axis
    const int mc = m / 2 + 1;

    double* a = fftw_alloc_real(size_t(m) * m);
    double* b = fftw_alloc_real(size_t(m) * m);
    fftw_complex* fa = fftw_alloc_complex(size_t(m) * mc);
    fftw_complex* fb = fftw_alloc_complex(size_t(m) * mc);

    std::fill(a, a + size_t(m) * m, 0.0);
    std::fill(b, b + size_t(m) * m, 0.0);
    for (int i = 0; i < n; ++i)
        std::copy_n(field.data() + size_t(i) * n, n, a + size_t(i) * m);
    const int s = k.side();
    for (int i = 0; i < s; ++i)
        std::copy_n(k.values.data() + size_t(i) * s, s, b + size_t(i) * m);

    fftw_plan pa, pb, pc;
    {
        std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
        pa = fftw_plan_dft_r2c_2d(m, m, a, fa, FFTW_ESTIMATE);
        pb = fftw_plan_dft_r2c_2d(m, m, b, fb, FFTW_ESTIMATE);
        pc = fftw_plan_dft_c2r_2d(m, m, fa, a, FFTW_ESTIMATE);
    }
    fftw_execute(pa);
    fftw_execute(pb);
    const double scale = 1.0 / (double(m) * m);
    for (size_t i = 0; i < size_t(m) * mc; ++i) {
        const double re = fa[i][0] * fb[i][0] - fa[i][1] * fb[i][1];
        const double im = fa[i][0] * fb[i][1] + fa[i][1] * fb[i][0];
        fa[i][0] = re * scale;
        fa[i][1] = im * scale;
    }
    fftw_execute(pc);

    std::vector<double> out(size_t(m) * m);
    std::copy_n(a, size_t(m) * m, out.begin());
    {
        std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
        fftw_destroy_plan(pa);
        fftw_destroy_plan(pb);
        fftw_destroy_plan(pc);
    }
    fftw_free(a);
    fftw_free(b);
    fftw_free(fa);
    fftw_free(fb);
    return out;
}

/// Dispatch helper; the FFT path is the default, the direct path exists for
/// small problems and as the agreement oracle.
inline std::vector<double> full(const std::vector<double>& field, int n, const KernelTable& k,
                                bool use_fft = true) {
    return use_fft ? full_fft(field, n, k) : full_direct(field, n, k);
}

}  // namespace opsieve::convolve
