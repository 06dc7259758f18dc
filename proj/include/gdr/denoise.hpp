#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gdr/image.hpp"
#include "gdr/schedule.hpp"

namespace gdr {

/// Noise-prediction contract: ε̂(x_t, t), same shape as x_t, deterministic.
class Denoiser {
public:
    virtual ~Denoiser() = default;
    virtual ImageTensor predict_eps(const ImageTensor& x_t, int t) const = 0;
};

namespace detail {

inline ImageTensor eps_from_posterior_mean(const ImageTensor& x_t,
                                           const ImageTensor& x0_mean,
                                           double alpha_bar) {
    const double sa = std::sqrt(alpha_bar);
    const double sb = std::sqrt(1.0 - alpha_bar);
    ImageTensor eps(x_t.height(), x_t.width(), x_t.channels());
    for (std::size_t i = 0; i < eps.size(); ++i)
        eps.data()[i] = (x_t.data()[i] - sa * x0_mean.data()[i]) / sb;
    return eps;
}

}  // namespace detail

/// Exact minimum-MSE denoiser for the isotropic Gaussian prior N(μ, σ_p²I)
/// under the forward process x_t = √ᾱ_t x₀ + √(1-ᾱ_t) z. The posterior mean
///   E[x₀|x_t] = (σ_p² √ᾱ_t x_t + (1-ᾱ_t) μ) / (ᾱ_t σ_p² + (1-ᾱ_t))
/// is converted to a noise prediction through the forward relation.
class GaussianAnalyticDenoiser : public Denoiser {
public:
    GaussianAnalyticDenoiser(ImageTensor mean, double prior_var,
                             NoiseSchedule schedule)
        : mean_(std::move(mean)), prior_var_(prior_var),
          schedule_(std::move(schedule)) {
        if (!(prior_var > 0.0))
            throw std::invalid_argument("prior variance must be positive");
    }

    ImageTensor posterior_mean_x0(const ImageTensor& x_t, int t) const {
        require_same_shape(x_t, mean_, "GaussianAnalyticDenoiser");
        const double ab = schedule_.alpha_bar(t);
        const double sa = std::sqrt(ab);
        const double denom = ab * prior_var_ + (1.0 - ab);
        ImageTensor out(x_t.height(), x_t.width(), x_t.channels());
        for (std::size_t i = 0; i < out.size(); ++i)
            out.data()[i] = (prior_var_ * sa * x_t.data()[i] +
                             (1.0 - ab) * mean_.data()[i]) /
                            denom;
        return out;
    }

    ImageTensor predict_eps(const ImageTensor& x_t, int t) const override {
        if (t < 1)
            throw std::invalid_argument("predict_eps: t must be >= 1");
        return detail::eps_from_posterior_mean(x_t, posterior_mean_x0(x_t, t),
                                               schedule_.alpha_bar(t));
    }

    const ImageTensor& mean() const { return mean_; }
    double prior_var() const { return prior_var_; }
    const NoiseSchedule& schedule() const { return schedule_; }

private:
    ImageTensor mean_;
    double prior_var_;
    NoiseSchedule schedule_;
};

/// Mixture-of-Gaussians prior with isotropic components. ε̂ combines the
/// per-component posterior means weighted by responsibilities computed from
/// the marginal likelihood of x_t under each component,
///   x_t | k  ~  N(√ᾱ_t μ_k, (ᾱ_t σ_k² + 1-ᾱ_t) I).
class GmmAnalyticDenoiser : public Denoiser {
public:
    struct Component {
        double weight;
        ImageTensor mean;
        double var;
    };

    GmmAnalyticDenoiser(std::vector<Component> components,
                        NoiseSchedule schedule)
        : components_(std::move(components)), schedule_(std::move(schedule)) {
        if (components_.empty())
            throw std::invalid_argument("GMM needs at least one component");
        double wsum = 0.0;
        for (const auto& c : components_) {
            if (!(c.weight > 0.0))
                throw std::invalid_argument("GMM weights must be positive");
            if (!(c.var > 0.0))
                throw std::invalid_argument("GMM variances must be positive");
            if (!c.mean.same_shape(components_.front().mean))
                throw std::invalid_argument("GMM component shapes differ");
            wsum += c.weight;
        }
        for (auto& c : components_) c.weight /= wsum;
    }

    ImageTensor posterior_mean_x0(const ImageTensor& x_t, int t) const {
        require_same_shape(x_t, components_.front().mean, "GmmAnalyticDenoiser");
        const double ab = schedule_.alpha_bar(t);
        const double sa = std::sqrt(ab);
        const std::size_t d = x_t.size();

        // log responsibilities via log-sum-exp
        std::vector<double> logp(components_.size());
        for (std::size_t k = 0; k < components_.size(); ++k) {
            const auto& c = components_[k];
            const double marg_var = ab * c.var + (1.0 - ab);
            double sq = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                const double r = x_t.data()[i] - sa * c.mean.data()[i];
                sq += r * r;
            }
            logp[k] = std::log(c.weight) -
                      0.5 * d * std::log(2.0 * std::numbers::pi * marg_var) -
                      0.5 * sq / marg_var;
        }
        const double m = *std::max_element(logp.begin(), logp.end());
        double z = 0.0;
        for (double& lp : logp) {
            lp = std::exp(lp - m);
            z += lp;
        }

        ImageTensor out(x_t.height(), x_t.width(), x_t.channels());
        for (std::size_t k = 0; k < components_.size(); ++k) {
            const auto& c = components_[k];
            const double resp = logp[k] / z;
            const double denom = ab * c.var + (1.0 - ab);
            for (std::size_t i = 0; i < d; ++i)
                out.data()[i] += resp *
                                 (c.var * sa * x_t.data()[i] +
                                  (1.0 - ab) * c.mean.data()[i]) /
                                 denom;
        }
        return out;
    }

    ImageTensor predict_eps(const ImageTensor& x_t, int t) const override {
        if (t < 1)
            throw std::invalid_argument("predict_eps: t must be >= 1");
        return detail::eps_from_posterior_mean(x_t, posterior_mean_x0(x_t, t),
                                               schedule_.alpha_bar(t));
    }

    const std::vector<Component>& components() const { return components_; }

private:
    std::vector<Component> components_;
    NoiseSchedule schedule_;
};

}  // namespace gdr
