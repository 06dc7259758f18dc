#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gdr/image.hpp"

namespace gdr {

/// Idempotent map onto (an approximation of) the image manifold. The
/// provided implementations are linear.
class ManifoldProjector {
public:
    virtual ~ManifoldProjector() = default;
    virtual ImageTensor project(const ImageTensor& x) const = 0;
};

class IdentityProjector : public ManifoldProjector {
public:
    ImageTensor project(const ImageTensor& x) const override { return x; }
};

/// Affine projection onto a k-dimensional PCA subspace:
///   project(x) = μ_p + VᵀV (x - μ_p)
/// in flattened coordinates, with V a k×d matrix of orthonormal rows.
class PcaProjector : public ManifoldProjector {
public:
    PcaProjector(std::vector<double> mean, std::vector<std::vector<double>> basis)
        : mean_(std::move(mean)), basis_(std::move(basis)) {
        for (const auto& row : basis_)
            if (row.size() != mean_.size())
                throw std::invalid_argument("PcaProjector: basis row length != d");
    }

    ImageTensor project(const ImageTensor& x) const override {
        if (x.size() != mean_.size())
            throw std::invalid_argument("PcaProjector: image size " +
                                        std::to_string(x.size()) +
                                        " != trained d = " +
                                        std::to_string(mean_.size()));
        const std::size_t d = mean_.size();
        std::vector<double> centered(d);
        for (std::size_t i = 0; i < d; ++i)
            centered[i] = x.data()[i] - mean_[i];

        ImageTensor out(x.height(), x.width(), x.channels());
        for (std::size_t i = 0; i < d; ++i) out.data()[i] = mean_[i];
        for (const auto& row : basis_) {
            double coeff = 0.0;
            for (std::size_t i = 0; i < d; ++i) coeff += row[i] * centered[i];
            for (std::size_t i = 0; i < d; ++i) out.data()[i] += coeff * row[i];
        }
        return out;
    }

    std::size_t dim() const { return mean_.size(); }
    std::size_t rank() const { return basis_.size(); }
    const std::vector<double>& mean() const { return mean_; }
    const std::vector<std::vector<double>>& basis() const { return basis_; }

    void save(const std::string& path) const;
    static PcaProjector load(const std::string& path);

private:
    std::vector<double> mean_;
    std::vector<std::vector<double>> basis_;
};

/// Sample mean plus top-k right singular vectors of the centered data
/// matrix. Directions whose singular value is numerically zero are dropped,
/// so zero-variance data yields a rank-0 projector that maps everything to
/// the mean.
inline PcaProjector train_pca_projector(const std::vector<ImageTensor>& images,
                                        int k) {
    if (images.size() < 2)
        throw std::invalid_argument("train_pca_projector: need at least 2 images");
    const std::size_t d = images.front().size();
    for (const auto& img : images)
        require_same_shape(img, images.front(), "train_pca_projector");
    const int n = static_cast<int>(images.size());
    const int max_k = std::min<int>(n - 1, static_cast<int>(d));
    if (k < 1 || k > max_k)
        throw std::invalid_argument("train_pca_projector: k must be in [1, " +
                                    std::to_string(max_k) + "], got " +
                                    std::to_string(k));

    std::vector<double> mean(d, 0.0);
    for (const auto& img : images)
        for (std::size_t i = 0; i < d; ++i) mean[i] += img.data()[i];
    for (double& v : mean) v /= n;

    Eigen::MatrixXd centered(n, d);
    for (int r = 0; r < n; ++r)
        for (std::size_t i = 0; i < d; ++i)
            centered(r, i) = images[r].data()[i] - mean[i];

    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered,
                                       Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double tol = 1e-12 * std::max(1.0, sv.size() > 0 ? sv(0) : 0.0);

    std::vector<std::vector<double>> basis;
    for (int j = 0; j < std::min<int>(k, static_cast<int>(sv.size())); ++j) {
        if (sv(j) <= tol) break;
        std::vector<double> row(d);
        for (std::size_t i = 0; i < d; ++i) row[i] = svd.matrixV()(i, j);
        basis.push_back(std::move(row));
    }
    return PcaProjector(std::move(mean), std::move(basis));
}

namespace detail {

inline void write_u64_le(std::ostream& os, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(buf), 8);
}

inline std::uint64_t read_u64_le(std::istream& is) {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

inline void write_f64_le(std::ostream& os, double v) {
    write_u64_le(os, std::bit_cast<std::uint64_t>(v));
}

inline double read_f64_le(std::istream& is) {
    return std::bit_cast<double>(read_u64_le(is));
}

inline constexpr char kProjectorMagic[8] = {'G', 'D', 'R', 'P',
                                            'R', 'O', 'J', '1'};

}  // namespace detail

/// File layout: 8-byte magic "GDRPROJ1", u64 k, u64 d, d doubles for μ_p,
/// then k*d doubles for V row-major. All integers and reals little-endian.
inline void PcaProjector::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("projector: cannot write " + path);
    os.write(detail::kProjectorMagic, 8);
    detail::write_u64_le(os, basis_.size());
    detail::write_u64_le(os, mean_.size());
    for (double v : mean_) detail::write_f64_le(os, v);
    for (const auto& row : basis_)
        for (double v : row) detail::write_f64_le(os, v);
    if (!os) throw std::runtime_error("projector: write failed for " + path);
}

inline PcaProjector PcaProjector::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("projector: cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, detail::kProjectorMagic, 8) != 0)
        throw std::runtime_error("projector: " + path + " has wrong magic");
    const std::uint64_t k = detail::read_u64_le(is);
    const std::uint64_t d = detail::read_u64_le(is);
    if (!is || d == 0 || d > (1ull << 32) || k > d)
        throw std::runtime_error("projector: " + path + " has bad header");
    std::vector<double> mean(d);
    for (auto& v : mean) v = detail::read_f64_le(is);
    std::vector<std::vector<double>> basis(k, std::vector<double>(d));
    for (auto& row : basis)
        for (auto& v : row) v = detail::read_f64_le(is);
    if (!is) throw std::runtime_error("projector: " + path + " truncated");
    return PcaProjector(std::move(mean), std::move(basis));
}

}  // namespace gdr
