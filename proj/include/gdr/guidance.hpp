#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gdr/image.hpp"
#include "gdr/operators.hpp"
#include "gdr/projector.hpp"
#include "gdr/sampler.hpp"

namespace gdr {

enum class StepMode { Budget, Raw };

/// Multi-step guidance settings. `inner_steps` is the number of projected
/// gradient updates applied to x̂₀ per denoising timestep (0 disables
/// guidance). In budget mode the step size is ρ = scale/(m·L̂), so the total
/// per-timestep movement is independent of m; raw mode uses ρ = scale as-is.
struct GuidanceConfig {
    int inner_steps = 1;
    double scale = 7.5;
    StepMode step_mode = StepMode::Budget;
    const ManifoldProjector* projector = nullptr;  // null = identity

    void validate() const {
        if (inner_steps < 0)
            throw std::invalid_argument("guidance: inner_steps must be >= 0");
        if (!(scale > 0.0))
            throw std::invalid_argument("guidance: scale must be positive");
    }
};

/// Raised when a guidance update produces a non-finite value, e.g. raw mode
/// with a step size beyond the stable range.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(int inner_iteration, const std::string& context)
        : std::runtime_error("guidance diverged at inner iteration " +
                             std::to_string(inner_iteration) + " (" + context +
                             "): non-finite value"),
          inner_iteration_(inner_iteration) {}

    int inner_iteration() const { return inner_iteration_; }

private:
    int inner_iteration_;
};

/// L(x₀) = ½ ‖y − A x₀‖²
inline double fidelity_loss(const ImageTensor& y, const LinearDegradation& A,
                            const ImageTensor& x0) {
    const ImageTensor ax = A.apply(x0);
    require_same_shape(y, ax, "fidelity_loss");
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = y.data()[i] - ax.data()[i];
        acc += r * r;
    }
    return 0.5 * acc;
}

/// ∇L = Aᵀ(A x₀ − y)
inline ImageTensor fidelity_grad(const ImageTensor& y, const LinearDegradation& A,
                                 const ImageTensor& x0) {
    ImageTensor residual = A.apply(x0);
    require_same_shape(y, residual, "fidelity_grad");
    for (std::size_t i = 0; i < residual.size(); ++i)
        residual.data()[i] -= y.data()[i];
    return A.adjoint(residual);
}

/// m projected gradient updates on x̂₀:  x̂₀ ← P(x̂₀ − ρ ∇L(x̂₀)).
/// `op_norm` is the operator_norm estimate L̂ used by budget mode. When
/// `loss_trace` is given it receives the fidelity loss before the first
/// update and after every update.
inline ImageTensor guided_inner_loop(ImageTensor x0hat, const ImageTensor& y,
                                     const LinearDegradation& A,
                                     const GuidanceConfig& cfg, double op_norm,
                                     std::vector<double>* loss_trace = nullptr) {
    cfg.validate();
    if (cfg.inner_steps == 0) return x0hat;

    double rho;
    if (cfg.step_mode == StepMode::Budget) {
        if (!(op_norm > 0.0))
            throw std::invalid_argument(
                "guidance: budget mode needs a positive operator-norm estimate");
        rho = cfg.scale / (cfg.inner_steps * op_norm);
    } else {
        rho = cfg.scale;
    }

    if (loss_trace) loss_trace->push_back(fidelity_loss(y, A, x0hat));
    for (int k = 0; k < cfg.inner_steps; ++k) {
        const ImageTensor grad = fidelity_grad(y, A, x0hat);
        for (std::size_t i = 0; i < x0hat.size(); ++i)
            x0hat.data()[i] -= rho * grad.data()[i];
        if (cfg.projector) x0hat = cfg.projector->project(x0hat);
        if (!x0hat.all_finite()) throw DivergenceError(k, "after update");
        if (loss_trace) loss_trace->push_back(fidelity_loss(y, A, x0hat));
    }
    return x0hat;
}

/// Full restoration pipeline: seeded x_T, then per retained timestep a
/// denoiser evaluation, the Tweedie estimate, the guided inner loop, and a
/// deterministic DDIM transition using the refined x̂₀ (the noise prediction
/// is the pre-guidance one). Deterministic given (seed, configs).
inline ImageTensor restore(const ImageTensor& y, const LinearDegradation& A,
                           const Denoiser& denoiser, const NoiseSchedule& schedule,
                           int num_ddim_steps, const GuidanceConfig& cfg,
                           std::uint64_t seed) {
    cfg.validate();
    if (y.height() != A.output_height() || y.width() != A.output_width() ||
        y.channels() != A.channels())
        throw std::invalid_argument("restore: measurement shape " +
                                    y.shape_string() +
                                    " does not match operator output");
    const double op_norm =
        cfg.step_mode == StepMode::Budget && cfg.inner_steps > 0 ? A.lipschitz()
                                                                 : 0.0;
    return ddim_pipeline(denoiser, schedule, num_ddim_steps, A.input_height(),
                         A.input_width(), A.channels(), seed,
                         [&](ImageTensor x0hat, int) {
                             return guided_inner_loop(std::move(x0hat), y, A,
                                                      cfg, op_norm);
                         });
}

}  // namespace gdr
