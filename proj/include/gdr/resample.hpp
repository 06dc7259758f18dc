#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "gdr/image.hpp"

namespace gdr {

/// Keys cubic convolution kernel with a = -0.5 (the common "bicubic").
inline double keys_cubic(double t) {
    t = std::fabs(t);
    if (t < 1.0) return (1.5 * t - 2.5) * t * t + 1.0;
    if (t < 2.0) return ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0;
    return 0.0;
}

/// One resampling axis materialized as explicit sparse rows: output sample i
/// is sum over (index, weight) taps into the input axis. Circular indexing;
/// every row's weights sum to 1.
struct AxisResampleMap {
    int n_in = 0;
    int n_out = 0;
    // rows[i] holds (input index, weight) pairs; indices unique per row.
    std::vector<std::vector<std::pair<int, double>>> rows;
};

/// Builds the antialiased Keys bicubic map from n_in to n_out samples.
/// When downscaling the kernel is stretched by the scale factor so its
/// footprint covers the source region; taps wrap circularly and weights
/// that land on the same source index accumulate.
inline AxisResampleMap build_axis_map(int n_in, int n_out) {
    if (n_in < 1 || n_out < 1)
        throw std::invalid_argument("resample axis sizes must be positive");
    AxisResampleMap map;
    map.n_in = n_in;
    map.n_out = n_out;
    map.rows.resize(n_out);

    const double scale = static_cast<double>(n_in) / n_out;
    const double stretch = std::max(1.0, scale);

    for (int i = 0; i < n_out; ++i) {
        const double center = (i + 0.5) * scale - 0.5;
        const int lo = static_cast<int>(std::ceil(center - 2.0 * stretch));
        const int hi = static_cast<int>(std::floor(center + 2.0 * stretch));

        std::map<int, double> taps;
        double sum = 0.0;
        for (int j = lo; j <= hi; ++j) {
            const double w = keys_cubic((j - center) / stretch);
            if (w == 0.0) continue;
            int idx = j % n_in;
            if (idx < 0) idx += n_in;
            taps[idx] += w;
            sum += w;
        }
        auto& row = map.rows[i];
        row.reserve(taps.size());
        for (const auto& [idx, w] : taps) row.emplace_back(idx, w / sum);
    }
    return map;
}

/// Exact transpose of an axis map (column gather of the original rows).
inline AxisResampleMap transpose_axis_map(const AxisResampleMap& map) {
    AxisResampleMap t;
    t.n_in = map.n_out;
    t.n_out = map.n_in;
    t.rows.resize(map.n_in);
    for (int i = 0; i < map.n_out; ++i)
        for (const auto& [j, w] : map.rows[i]) t.rows[j].emplace_back(i, w);
    return t;
}

namespace detail {

inline ImageTensor apply_axis_w(const AxisResampleMap& map,
                                const ImageTensor& img) {
    if (img.width() != map.n_in)
        throw std::invalid_argument("axis map width mismatch");
    ImageTensor out(img.height(), map.n_out, img.channels());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < map.n_out; ++x)
            for (int c = 0; c < img.channels(); ++c) {
                double acc = 0.0;
                for (const auto& [j, w] : map.rows[x]) acc += w * img(y, j, c);
                out(y, x, c) = acc;
            }
    return out;
}

inline ImageTensor apply_axis_h(const AxisResampleMap& map,
                                const ImageTensor& img) {
    if (img.height() != map.n_in)
        throw std::invalid_argument("axis map height mismatch");
    ImageTensor out(map.n_out, img.width(), img.channels());
    for (int y = 0; y < map.n_out; ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < img.channels(); ++c) {
                double acc = 0.0;
                for (const auto& [j, w] : map.rows[y]) acc += w * img(j, x, c);
                out(y, x, c) = acc;
            }
    return out;
}

}  // namespace detail

/// Separable bicubic resize to out_h × out_w (width pass, then height pass).
inline ImageTensor resize_bicubic(const ImageTensor& img, int out_h, int out_w) {
    const AxisResampleMap wmap = build_axis_map(img.width(), out_w);
    const AxisResampleMap hmap = build_axis_map(img.height(), out_h);
    return detail::apply_axis_h(hmap, detail::apply_axis_w(wmap, img));
}

/// Center crop to the largest centered square, then bicubic resample to
/// side×side. When the crop already has the requested side the pixels are
/// copied verbatim.
inline ImageTensor center_crop_resize(const ImageTensor& img, int side) {
    if (side < 1) throw std::invalid_argument("center_crop_resize: side < 1");
    const int crop = std::min(img.height(), img.width());
    const int top = (img.height() - crop) / 2;
    const int left = (img.width() - crop) / 2;

    ImageTensor square(crop, crop, img.channels());
    for (int y = 0; y < crop; ++y)
        for (int x = 0; x < crop; ++x)
            for (int c = 0; c < img.channels(); ++c)
                square(y, x, c) = img(top + y, left + x, c);

    if (crop == side) return square;
    return resize_bicubic(square, side, side);
}

}  // namespace gdr
