#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "gdr/image.hpp"
#include "gdr/operators.hpp"

namespace gdr {

struct MetricReport {
    double mse = 0.0;
    double psnr_db = 0.0;  // +inf when mse == 0
    double ssim = 0.0;
};

inline double mse(const ImageTensor& a, const ImageTensor& b) {
    require_same_shape(a, b, "mse");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

/// 10 log10(1/mse) on the [0,1] scale (MAX = 1); identical inputs give +inf.
inline double psnr(const ImageTensor& a, const ImageTensor& b) {
    const double m = mse(a, b);
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / m);
}

namespace detail {

// Valid-mode separable correlation with a symmetric 1-D window: horizontal
// pass then vertical pass, one channel plane at a time.
inline std::vector<double> window_filter_valid(const std::vector<double>& plane,
                                               int h, int w,
                                               const std::vector<double>& win) {
    const int k = static_cast<int>(win.size());
    const int oh = h - k + 1;
    const int ow = w - k + 1;
    std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i) acc += win[i] * plane[y * w + x + i];
            tmp[y * ow + x] = acc;
        }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i) acc += win[i] * tmp[(y + i) * ow + x];
            out[y * ow + x] = acc;
        }
    return out;
}

}  // namespace detail

/// SSIM with the reference defaults: 11×11 Gaussian window (σ = 1.5),
/// K1 = 0.01, K2 = 0.03 on the [0,1] scale, mean over valid window
/// positions only, channels averaged after per-channel SSIM.
inline double ssim(const ImageTensor& a, const ImageTensor& b) {
    require_same_shape(a, b, "ssim");
    constexpr int kWindow = 11;
    constexpr double kC1 = 0.01 * 0.01;
    constexpr double kC2 = 0.03 * 0.03;
    if (std::min(a.height(), a.width()) < kWindow)
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");

    const std::vector<double> win = gaussian_kernel(kWindow, 1.5);
    const int h = a.height(), w = a.width();
    const std::size_t plane_size = static_cast<std::size_t>(h) * w;

    double channel_sum = 0.0;
    for (int c = 0; c < a.channels(); ++c) {
        std::vector<double> pa(plane_size), pb(plane_size), paa(plane_size),
            pbb(plane_size), pab(plane_size);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double va = a(y, x, c);
                const double vb = b(y, x, c);
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                pa[i] = va;
                pb[i] = vb;
                paa[i] = va * va;
                pbb[i] = vb * vb;
                pab[i] = va * vb;
            }
        const auto mu_a = detail::window_filter_valid(pa, h, w, win);
        const auto mu_b = detail::window_filter_valid(pb, h, w, win);
        const auto m_aa = detail::window_filter_valid(paa, h, w, win);
        const auto m_bb = detail::window_filter_valid(pbb, h, w, win);
        const auto m_ab = detail::window_filter_valid(pab, h, w, win);

        double acc = 0.0;
        for (std::size_t i = 0; i < mu_a.size(); ++i) {
            const double ma = mu_a[i], mb = mu_b[i];
            const double var_a = m_aa[i] - ma * ma;
            const double var_b = m_bb[i] - mb * mb;
            const double cov = m_ab[i] - ma * mb;
            acc += ((2.0 * ma * mb + kC1) * (2.0 * cov + kC2)) /
                   ((ma * ma + mb * mb + kC1) * (var_a + var_b + kC2));
        }
        channel_sum += acc / static_cast<double>(mu_a.size());
    }
    return channel_sum / a.channels();
}

inline MetricReport compare(const ImageTensor& reference,
                            const ImageTensor& candidate) {
    MetricReport r;
    r.mse = mse(reference, candidate);
    r.psnr_db = psnr(reference, candidate);
    r.ssim = ssim(reference, candidate);
    return r;
}

}  // namespace gdr
