#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gdr {

/// Dense H×W×C image, row-major by (row, column, channel), values nominally
/// in [0,1]. Storage is double throughout; clamping happens only when a file
/// is written, never inside numerical pipelines.
class ImageTensor {
public:
    ImageTensor() = default;

    ImageTensor(int height, int width, int channels, double fill = 0.0)
        : height_(height), width_(width), channels_(channels),
          data_(check_shape(height, width, channels), fill) {}

    static ImageTensor from_data(int height, int width, int channels,
                                 std::vector<double> data) {
        ImageTensor img;
        const std::size_t n = check_shape(height, width, channels);
        if (data.size() != n) {
            throw std::invalid_argument(
                "image data length " + std::to_string(data.size()) +
                " does not match " + std::to_string(height) + "x" +
                std::to_string(width) + "x" + std::to_string(channels));
        }
        img.height_ = height;
        img.width_ = width;
        img.channels_ = channels;
        img.data_ = std::move(data);
        return img;
    }

    int height() const { return height_; }
    int width() const { return width_; }
    int channels() const { return channels_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(int y, int x, int c) {
        return data_[index(y, x, c)];
    }
    double operator()(int y, int x, int c) const {
        return data_[index(y, x, c)];
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const ImageTensor& other) const {
        return height_ == other.height_ && width_ == other.width_ &&
               channels_ == other.channels_;
    }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    std::string shape_string() const {
        return std::to_string(height_) + "x" + std::to_string(width_) + "x" +
               std::to_string(channels_);
    }

private:
    static std::size_t check_shape(int height, int width, int channels) {
        if (height < 1 || width < 1)
            throw std::invalid_argument("image dimensions must be positive");
        if (channels != 1 && channels != 3)
            throw std::invalid_argument("channel count must be 1 or 3");
        return static_cast<std::size_t>(height) * width * channels;
    }

    std::size_t index(int y, int x, int c) const {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    int height_ = 0;
    int width_ = 0;
    int channels_ = 0;
    std::vector<double> data_;
};

inline void require_same_shape(const ImageTensor& a, const ImageTensor& b,
                               const char* what) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(std::string(what) + ": shape mismatch " +
                                    a.shape_string() + " vs " +
                                    b.shape_string());
    }
}

inline double dot(const ImageTensor& a, const ImageTensor& b) {
    require_same_shape(a, b, "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a.data()[i] * b.data()[i];
    return acc;
}

inline double l2_norm(const ImageTensor& a) { return std::sqrt(dot(a, a)); }

inline double l2_distance(const ImageTensor& a, const ImageTensor& b) {
    require_same_shape(a, b, "l2_distance");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

/// a + s*b
inline ImageTensor axpy(const ImageTensor& a, double s, const ImageTensor& b) {
    require_same_shape(a, b, "axpy");
    ImageTensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += s * b.data()[i];
    return out;
}

inline ImageTensor scaled(const ImageTensor& a, double s) {
    ImageTensor out = a;
    for (double& v : out.data()) v *= s;
    return out;
}

}  // namespace gdr
