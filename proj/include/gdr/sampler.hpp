#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "gdr/denoise.hpp"
#include "gdr/image.hpp"
#include "gdr/rng.hpp"
#include "gdr/schedule.hpp"

namespace gdr {

/// x̂₀ = (x_t − √(1-ᾱ_t) ε̂) / √ᾱ_t, the clean-image estimate implied by a
/// noise prediction. No clamping.
inline ImageTensor tweedie_x0(const ImageTensor& x_t, const ImageTensor& eps,
                              double alpha_bar_t) {
    require_same_shape(x_t, eps, "tweedie_x0");
    if (!(alpha_bar_t > 0.0) || alpha_bar_t > 1.0)
        throw std::invalid_argument("tweedie_x0: alpha_bar_t must be in (0,1]");
    const double sa = std::sqrt(alpha_bar_t);
    const double sb = std::sqrt(1.0 - alpha_bar_t);
    ImageTensor out(x_t.height(), x_t.width(), x_t.channels());
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data()[i] = (x_t.data()[i] - sb * eps.data()[i]) / sa;
    return out;
}

/// Deterministic (η = 0) transition x_prev = √ᾱ_prev x̂₀ + √(1-ᾱ_prev) ε̂.
/// With alpha_bar_prev = 1 (the terminal step) this returns x̂₀ exactly.
inline ImageTensor ddim_step(const ImageTensor& x0hat, const ImageTensor& eps,
                             double alpha_bar_prev) {
    require_same_shape(x0hat, eps, "ddim_step");
    if (!(alpha_bar_prev > 0.0) || alpha_bar_prev > 1.0)
        throw std::invalid_argument("ddim_step: alpha_bar_prev must be in (0,1]");
    if (alpha_bar_prev == 1.0) return x0hat;
    const double sa = std::sqrt(alpha_bar_prev);
    const double sb = std::sqrt(1.0 - alpha_bar_prev);
    ImageTensor out(x0hat.height(), x0hat.width(), x0hat.channels());
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data()[i] = sa * x0hat.data()[i] + sb * eps.data()[i];
    return out;
}

/// The DDIM chain shared by unconditional sampling and guided restoration:
/// x_T seeded standard normal, then for each retained timestep
///   ε̂ = denoiser(x_t, t); x̂₀ = tweedie; x̂₀ = refine(x̂₀, t); x = ddim_step.
/// Returns the final (refined) x̂₀. `refine` must return its input unchanged
/// to reproduce unconditional sampling bit for bit.
template <typename Refine>
ImageTensor ddim_pipeline(const Denoiser& denoiser, const NoiseSchedule& schedule,
                          int num_steps, int height, int width, int channels,
                          std::uint64_t seed, Refine&& refine) {
    const std::vector<int> timesteps = make_ddim_timesteps(num_steps, schedule.T);
    NormalSampler rng(seed);
    ImageTensor x = rng.normal_image(height, width, channels);
    ImageTensor x0hat;
    for (std::size_t i = 0; i < timesteps.size(); ++i) {
        const int t = timesteps[i];
        const ImageTensor eps = denoiser.predict_eps(x, t);
        x0hat = tweedie_x0(x, eps, schedule.alpha_bar(t));
        x0hat = refine(std::move(x0hat), t);
        const double ab_prev =
            i + 1 < timesteps.size() ? schedule.alpha_bar(timesteps[i + 1]) : 1.0;
        x = ddim_step(x0hat, eps, ab_prev);
    }
    return x;
}

/// Guidance-free DDIM sampling; pure function of (seed, parameters).
inline ImageTensor sample_unconditional(const Denoiser& denoiser,
                                        const NoiseSchedule& schedule,
                                        int num_steps, int height, int width,
                                        int channels, std::uint64_t seed) {
    return ddim_pipeline(denoiser, schedule, num_steps, height, width, channels,
                         seed, [](ImageTensor x0, int) { return x0; });
}

}  // namespace gdr
