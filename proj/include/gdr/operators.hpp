#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "gdr/image.hpp"
#include "gdr/resample.hpp"
#include "gdr/rng.hpp"

namespace gdr {

/// Sampled Gaussian, normalized so the taps sum to 1 exactly.
inline std::vector<double> gaussian_kernel(int size, double sigma) {
    if (size < 1 || size % 2 == 0)
        throw std::invalid_argument("gaussian_kernel: size must be odd and positive");
    if (!(sigma > 0.0))
        throw std::invalid_argument("gaussian_kernel: sigma must be positive");
    std::vector<double> k(size);
    const double c = (size - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        k[i] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
        sum += k[i];
    }
    for (double& v : k) v /= sum;
    return k;
}

namespace detail {

// Circular 1-D convolution along one axis. The kernel is indexed so that
// out[p] = sum_i k[i] * in[p + i - (size-1)/2 mod n].
inline ImageTensor conv_axis(const ImageTensor& img,
                             const std::vector<double>& kernel, bool along_w) {
    const int n = along_w ? img.width() : img.height();
    const int size = static_cast<int>(kernel.size());
    const int half = (size - 1) / 2;
    ImageTensor out(img.height(), img.width(), img.channels());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < img.channels(); ++c) {
                const int p = along_w ? x : y;
                double acc = 0.0;
                for (int i = 0; i < size; ++i) {
                    int q = (p + i - half) % n;
                    if (q < 0) q += n;
                    acc += kernel[i] *
                           (along_w ? img(y, q, c) : img(q, x, c));
                }
                out(y, x, c) = acc;
            }
    return out;
}

}  // namespace detail

/// Separable 2-D convolution with circular (periodic) boundary, horizontal
/// pass then vertical pass, channels independent.
inline ImageTensor blur_apply(const ImageTensor& img,
                              const std::vector<double>& kernel) {
    if (static_cast<int>(kernel.size()) > std::min(img.height(), img.width()))
        throw std::invalid_argument(
            "blur: kernel length " + std::to_string(kernel.size()) +
            " exceeds min image side of " + img.shape_string());
    return detail::conv_axis(detail::conv_axis(img, kernel, true), kernel, false);
}

/// Adjoint of blur_apply: circular convolution with the index-reversed
/// kernel. For symmetric kernels this is the same computation as the
/// forward pass.
inline ImageTensor blur_adjoint(const ImageTensor& img,
                                const std::vector<double>& kernel) {
    std::vector<double> rev(kernel.rbegin(), kernel.rend());
    return blur_apply(img, rev);
}

enum class TaskKind { SrBicubic, GaussianBlur };

struct NoiseSpec {
    double sigma = 0.05;
    std::uint64_t seed = 0;
};

/// y = img + sigma*z with z i.i.d. standard normal from the seeded stream.
/// The result is intentionally not clamped: the measurement may leave [0,1].
inline ImageTensor add_noise(const ImageTensor& img, const NoiseSpec& spec) {
    if (!std::isfinite(spec.sigma) || spec.sigma < 0.0)
        throw std::invalid_argument("add_noise: sigma must be finite and >= 0");
    if (spec.sigma == 0.0) return img;
    NormalSampler rng(spec.seed);
    ImageTensor out = img;
    for (double& v : out.data()) v += spec.sigma * rng.next();
    return out;
}

/// Forward/adjoint pair for a linear measurement model y = A(x) + n.
/// Immutable after construction; apply/adjoint are pure, so an instance can
/// be shared across threads.
class LinearDegradation {
public:
    static LinearDegradation gaussian_blur(int h, int w, int c, int kernel_size,
                                           double kernel_sigma) {
        LinearDegradation op;
        op.kind_ = TaskKind::GaussianBlur;
        op.in_h_ = op.out_h_ = h;
        op.in_w_ = op.out_w_ = w;
        op.channels_ = c;
        op.kernel_size_ = kernel_size;
        op.kernel_sigma_ = kernel_sigma;
        op.kernel_ = gaussian_kernel(kernel_size, kernel_sigma);
        if (kernel_size > std::min(h, w))
            throw std::invalid_argument(
                "gaussian_blur: kernel does not fit a " + std::to_string(h) +
                "x" + std::to_string(w) + " image");
        op.state_ = std::make_shared<SharedState>();
        return op;
    }

    /// Bicubic downsampling by an integer factor, materialized as explicit
    /// per-axis sparse row maps; the adjoint is their exact transpose.
    static LinearDegradation sr_bicubic(int h, int w, int c, int factor) {
        if (factor < 1) throw std::invalid_argument("sr factor must be >= 1");
        if (h % factor != 0 || w % factor != 0)
            throw std::invalid_argument(
                "sr" + std::to_string(factor) + "x: image sides " +
                std::to_string(h) + "x" + std::to_string(w) +
                " must be divisible by " + std::to_string(factor));
        LinearDegradation op;
        op.kind_ = TaskKind::SrBicubic;
        op.in_h_ = h;
        op.in_w_ = w;
        op.out_h_ = h / factor;
        op.out_w_ = w / factor;
        op.channels_ = c;
        op.factor_ = factor;
        op.row_map_ = build_axis_map(w, op.out_w_);
        op.col_map_ = build_axis_map(h, op.out_h_);
        op.row_map_t_ = transpose_axis_map(op.row_map_);
        op.col_map_t_ = transpose_axis_map(op.col_map_);
        op.state_ = std::make_shared<SharedState>();
        return op;
    }

    ImageTensor apply(const ImageTensor& x) const {
        check_shape(x, in_h_, in_w_, "apply");
        if (kind_ == TaskKind::GaussianBlur) return blur_apply(x, kernel_);
        return detail::apply_axis_h(col_map_, detail::apply_axis_w(row_map_, x));
    }

    ImageTensor adjoint(const ImageTensor& y) const {
        check_shape(y, out_h_, out_w_, "adjoint");
        if (kind_ == TaskKind::GaussianBlur) return blur_adjoint(y, kernel_);
        // transpose of (col ∘ row) is rowᵀ ∘ colᵀ
        return detail::apply_axis_w(row_map_t_,
                                    detail::apply_axis_h(col_map_t_, y));
    }

    TaskKind kind() const { return kind_; }
    int input_height() const { return in_h_; }
    int input_width() const { return in_w_; }
    int output_height() const { return out_h_; }
    int output_width() const { return out_w_; }
    int channels() const { return channels_; }
    int factor() const { return factor_; }
    int kernel_size() const { return kernel_size_; }
    double kernel_sigma() const { return kernel_sigma_; }
    const std::vector<double>& kernel() const { return kernel_; }

    /// Largest eigenvalue of AᵀA, estimated once per instance and cached
    /// (thread-safe). Used as the Lipschitz constant of the fidelity
    /// gradient when sizing guidance steps.
    double lipschitz() const;

private:
    struct SharedState {
        std::once_flag once;
        double lipschitz = 0.0;
    };

    void check_shape(const ImageTensor& img, int h, int w,
                     const char* what) const {
        if (img.height() != h || img.width() != w ||
            img.channels() != channels_)
            throw std::invalid_argument(
                std::string(what) + ": expected " + std::to_string(h) + "x" +
                std::to_string(w) + "x" + std::to_string(channels_) +
                ", got " + img.shape_string());
    }

    TaskKind kind_ = TaskKind::GaussianBlur;
    int in_h_ = 0, in_w_ = 0, out_h_ = 0, out_w_ = 0, channels_ = 1;
    int factor_ = 0;
    int kernel_size_ = 0;
    double kernel_sigma_ = 0.0;
    std::vector<double> kernel_;
    AxisResampleMap row_map_, col_map_, row_map_t_, col_map_t_;
    std::shared_ptr<SharedState> state_;
};

inline LinearDegradation build_sr4x(int h, int w, int c) {
    return LinearDegradation::sr_bicubic(h, w, c, 4);
}

inline LinearDegradation build_gaussian_blur(int h, int w, int c,
                                             int kernel_size = 61,
                                             double kernel_sigma = 3.0) {
    return LinearDegradation::gaussian_blur(h, w, c, kernel_size, kernel_sigma);
}

/// Power iteration on AᵀA from a seeded random start. Returns the Rayleigh
/// quotient after `iters` iterations, a monotone non-decreasing estimate of
/// the largest eigenvalue of AᵀA.
inline double operator_norm(const LinearDegradation& A, int iters,
                            std::uint64_t seed) {
    if (iters < 10)
        throw std::invalid_argument("operator_norm: iters must be >= 10");
    NormalSampler rng(seed);
    ImageTensor v =
        rng.normal_image(A.input_height(), A.input_width(), A.channels());
    double estimate = 0.0;
    for (int it = 0; it < iters; ++it) {
        const ImageTensor w = A.adjoint(A.apply(v));
        const double vv = dot(v, v);
        if (vv == 0.0) return 0.0;
        estimate = dot(v, w) / vv;
        const double wn = l2_norm(w);
        if (wn == 0.0) return 0.0;
        v = scaled(w, 1.0 / wn);
    }
    return estimate;
}

inline double LinearDegradation::lipschitz() const {
    std::call_once(state_->once, [this] {
        // fixed seed: the estimate is a property of the operator
        state_->lipschitz = operator_norm(*this, 128, 0x9e3779b97f4a7c15ull);
    });
    return state_->lipschitz;
}

}  // namespace gdr
