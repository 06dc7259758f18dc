#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace gdr {

/// Diffusion constants for a linear beta schedule. Index convention:
/// betas[t-1] is β_t for t in 1..T, alpha_bar(0) = 1 and alpha_bar(t) is the
/// cumulative product of (1-β_s) for s ≤ t.
struct NoiseSchedule {
    int T = 0;
    std::vector<double> betas;
    std::vector<double> alphas;
    std::vector<double> alpha_bars;  // size T+1, alpha_bars[0] = 1

    double beta(int t) const { return betas.at(t - 1); }
    double alpha_bar(int t) const { return alpha_bars.at(t); }
};

inline NoiseSchedule make_schedule(int T, double beta_start = 1e-4,
                                   double beta_end = 0.02) {
    if (T < 1) throw std::invalid_argument("make_schedule: T must be >= 1");
    if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
        throw std::invalid_argument(
            "make_schedule: need 0 < beta_start <= beta_end < 1");

    NoiseSchedule s;
    s.T = T;
    s.betas.resize(T);
    s.alphas.resize(T);
    s.alpha_bars.resize(T + 1);
    s.alpha_bars[0] = 1.0;
    double prod = 1.0;
    for (int t = 1; t <= T; ++t) {
        const double frac = T == 1 ? 0.0 : (t - 1) / static_cast<double>(T - 1);
        const double beta = beta_start + (beta_end - beta_start) * frac;
        s.betas[t - 1] = beta;
        s.alphas[t - 1] = 1.0 - beta;
        prod *= 1.0 - beta;
        s.alpha_bars[t] = prod;
    }
    return s;
}

/// Evenly strided descending subsequence of {1..T} of length num_steps.
/// The stride endpoint T is always retained, so the chain starts at the
/// highest-noise timestep; the final transition targets alpha_bar(0) = 1.
inline std::vector<int> make_ddim_timesteps(int num_steps, int T) {
    if (num_steps < 1)
        throw std::invalid_argument("make_ddim_timesteps: num_steps must be >= 1");
    if (num_steps > T)
        throw std::invalid_argument("make_ddim_timesteps: num_steps " +
                                    std::to_string(num_steps) + " exceeds T = " +
                                    std::to_string(T));
    const double stride = static_cast<double>(T) / num_steps;
    std::vector<int> steps(num_steps);
    for (int k = 0; k < num_steps; ++k)
        steps[k] = static_cast<int>(std::llround((num_steps - k) * stride));
    return steps;
}

}  // namespace gdr
