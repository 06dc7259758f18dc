#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "gdr/image.hpp"

namespace gdr {

/// Seeded standard-normal stream. The transform is fixed so results are
/// reproducible for a given seed: draw two uniforms from mt19937_64 by
/// taking the top 53 bits (u = (x >> 11) * 2^-53, so u ∈ [0,1)), then
/// Box-Muller:
///   r = sqrt(-2 ln(1-u1)),  z0 = r cos(2π u2),  z1 = r sin(2π u2).
/// Bit-exactness is promised within one build; across platforms the libm
/// calls may differ in the last ulp.
class NormalSampler {
public:
    explicit NormalSampler(std::uint64_t seed) : gen_(seed) {}

    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log1p(-u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    void fill(ImageTensor& img) {
        for (double& v : img.data()) v = next();
    }

    ImageTensor normal_image(int height, int width, int channels) {
        ImageTensor img(height, width, channels);
        fill(img);
        return img;
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace gdr
