#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gdr/denoise.hpp"
#include "gdr/guidance.hpp"
#include "gdr/image.hpp"
#include "gdr/metrics.hpp"
#include "gdr/operators.hpp"
#include "gdr/rng.hpp"
#include "gdr/sampler.hpp"
#include "gdr/schedule.hpp"

namespace gdr {

struct SelftestOptions {
    /// Fault-injection hook: perturbs the adjoint inside the adjoint check so
    /// the failure path can be exercised end to end.
    bool corrupt_adjoint = false;
};

namespace selftest_detail {

inline ImageTensor random_image(NormalSampler& rng, int h, int w, int c,
                                double scale = 1.0, double offset = 0.0) {
    ImageTensor img(h, w, c);
    for (double& v : img.data()) v = offset + scale * rng.next();
    return img;
}

inline Eigen::MatrixXd materialize(const LinearDegradation& A) {
    const int d = A.input_height() * A.input_width() * A.channels();
    const int m = A.output_height() * A.output_width() * A.channels();
    Eigen::MatrixXd M(m, d);
    for (int j = 0; j < d; ++j) {
        ImageTensor basis(A.input_height(), A.input_width(), A.channels());
        basis.data()[j] = 1.0;
        const ImageTensor col = A.apply(basis);
        for (int i = 0; i < m; ++i) M(i, j) = col.data()[i];
    }
    return M;
}

// Plain per-window SSIM, the slow reference route.
inline double ssim_reference(const ImageTensor& a, const ImageTensor& b) {
    const int k = 11;
    const std::vector<double> g1 = gaussian_kernel(k, 1.5);
    std::vector<double> win(static_cast<std::size_t>(k) * k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) win[i * k + j] = g1[i] * g1[j];

    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    double channel_sum = 0.0;
    for (int c = 0; c < a.channels(); ++c) {
        double acc = 0.0;
        int count = 0;
        for (int y = 0; y + k <= a.height(); ++y)
            for (int x = 0; x + k <= a.width(); ++x) {
                double ma = 0, mb = 0, maa = 0, mbb = 0, mab = 0;
                for (int i = 0; i < k; ++i)
                    for (int j = 0; j < k; ++j) {
                        const double w = win[i * k + j];
                        const double va = a(y + i, x + j, c);
                        const double vb = b(y + i, x + j, c);
                        ma += w * va;
                        mb += w * vb;
                        maa += w * va * va;
                        mbb += w * vb * vb;
                        mab += w * va * vb;
                    }
                const double va_ = maa - ma * ma;
                const double vb_ = mbb - mb * mb;
                const double cov = mab - ma * mb;
                acc += ((2 * ma * mb + c1) * (2 * cov + c2)) /
                       ((ma * ma + mb * mb + c1) * (va_ + vb_ + c2));
                ++count;
            }
        channel_sum += acc / count;
    }
    return channel_sum / a.channels();
}

struct Check {
    std::string name;
    bool passed;
    std::string detail;
};

inline Check check_adjoint(const SelftestOptions& opt) {
    double worst = 0.0;
    NormalSampler rng(11);
    const auto ops = {build_gaussian_blur(16, 16, 1, 15, 3.0),
                      build_sr4x(16, 16, 1)};
    for (const auto& A : ops) {
        for (int trial = 0; trial < 20; ++trial) {
            const ImageTensor x = random_image(rng, 16, 16, 1);
            const ImageTensor y =
                random_image(rng, A.output_height(), A.output_width(), 1);
            const ImageTensor ax = A.apply(x);
            ImageTensor aty = A.adjoint(y);
            if (opt.corrupt_adjoint) aty.data()[0] += 1e-3;
            const double lhs = dot(ax, y);
            const double rhs = dot(x, aty);
            const double denom = l2_norm(ax) * l2_norm(y);
            worst = std::max(worst, std::fabs(lhs - rhs) / denom);
        }
    }
    std::ostringstream os;
    os << "max relative inner-product error " << worst;
    return {"adjoint", worst < 1e-10, os.str()};
}

inline Check check_gradient() {
    double worst = 0.0;
    NormalSampler rng(12);
    const auto ops = {build_gaussian_blur(8, 8, 1, 5, 1.5),
                      build_sr4x(8, 8, 1)};
    const double h = 1e-5;
    for (const auto& A : ops) {
        for (int trial = 0; trial < 3; ++trial) {
            ImageTensor x = random_image(rng, 8, 8, 1, 0.3, 0.5);
            const ImageTensor y =
                random_image(rng, A.output_height(), A.output_width(), 1, 0.3,
                             0.5);
            const ImageTensor grad = fidelity_grad(y, A, x);
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                x.data()[i] += h;
                const double lp = fidelity_loss(y, A, x);
                x.data()[i] -= 2 * h;
                const double lm = fidelity_loss(y, A, x);
                x.data()[i] += h;
                const double fd = (lp - lm) / (2 * h);
                num += (fd - grad.data()[i]) * (fd - grad.data()[i]);
                den += grad.data()[i] * grad.data()[i];
            }
            worst = std::max(worst, std::sqrt(num / den));
        }
    }
    std::ostringstream os;
    os << "max relative gradient error " << worst;
    return {"gradient", worst < 1e-6, os.str()};
}

inline Check check_posterior_mean() {
    // tight analytic prior, 2x downsample, compare against the dense
    // closed-form posterior mean
    const int side = 4;
    const double prior_sigma = 0.02, noise_sigma = 0.05, scale = 0.2;
    NormalSampler rng(13);
    ImageTensor mu(side, side, 1);
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x)
            mu(y, x, 0) = 0.35 + 0.3 * (x + y) / (2.0 * (side - 1));

    const LinearDegradation A = LinearDegradation::sr_bicubic(side, side, 1, 2);
    ImageTensor truth = mu;
    for (double& v : truth.data()) v += prior_sigma * rng.next();
    ImageTensor y = A.apply(truth);
    for (double& v : y.data()) v += noise_sigma * rng.next();

    const Eigen::MatrixXd M = materialize(A);
    const int d = static_cast<int>(truth.size());
    const int m = static_cast<int>(y.size());
    Eigen::VectorXd mu_v(d), y_v(m);
    for (int i = 0; i < d; ++i) mu_v(i) = mu.data()[i];
    for (int i = 0; i < m; ++i) y_v(i) = y.data()[i];
    const double pv = prior_sigma * prior_sigma;
    const Eigen::MatrixXd gram =
        pv * M * M.transpose() +
        noise_sigma * noise_sigma * Eigen::MatrixXd::Identity(m, m);
    const Eigen::VectorXd post =
        mu_v + pv * M.transpose() * gram.ldlt().solve(y_v - M * mu_v);

    const NoiseSchedule schedule = make_schedule(1000);
    const GaussianAnalyticDenoiser denoiser(mu, pv, schedule);
    GuidanceConfig cfg;
    cfg.inner_steps = 15;
    cfg.scale = scale;
    const ImageTensor restored = restore(y, A, denoiser, schedule, 100, cfg, 99);

    double num = 0.0, den = 0.0;
    for (int i = 0; i < d; ++i) {
        num += (restored.data()[i] - post(i)) * (restored.data()[i] - post(i));
        den += post(i) * post(i);
    }
    const double rel = std::sqrt(num / den);
    std::ostringstream os;
    os << "relative L2 distance to closed-form posterior mean " << rel;
    return {"posterior-mean", rel < 0.1, os.str()};
}

inline Check check_ssim_reference() {
    NormalSampler rng(14);
    double worst = 0.0;
    for (int trial = 0; trial < 3; ++trial) {
        const ImageTensor a = random_image(rng, 16, 16, 1, 0.2, 0.5);
        const ImageTensor b = random_image(rng, 16, 16, 1, 0.2, 0.5);
        worst = std::max(worst, std::fabs(ssim(a, b) - ssim_reference(a, b)));
    }
    std::ostringstream os;
    os << "max |ssim - reference| " << worst;
    return {"ssim-reference", worst < 1e-6, os.str()};
}

inline Check check_psnr_formula() {
    const ImageTensor a(16, 16, 1, 0.0);
    const ImageTensor b(16, 16, 1, 0.1);
    const double got = psnr(a, b);
    const double err = std::fabs(got - 20.0);
    std::ostringstream os;
    os << "psnr at mse 0.01 = " << got;
    return {"psnr-formula", err < 1e-9 && std::isinf(psnr(a, a)), os.str()};
}

inline Check check_descent() {
    NormalSampler rng(15);
    bool ok = true;
    double worst_rise = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const bool use_blur = trial % 2 == 0;
        const LinearDegradation A = use_blur
                                        ? build_gaussian_blur(8, 8, 1, 5, 1.5)
                                        : build_sr4x(8, 8, 1);
        const ImageTensor x0 = random_image(rng, 8, 8, 1, 0.3, 0.5);
        const ImageTensor y = random_image(
            rng, A.output_height(), A.output_width(), 1, 0.3, 0.5);
        GuidanceConfig cfg;
        cfg.inner_steps = 1 + trial % 20;
        cfg.scale = (0.2 + 1.5 * rng.uniform()) * cfg.inner_steps;
        std::vector<double> trace;
        guided_inner_loop(x0, y, A, cfg, A.lipschitz(), &trace);
        for (std::size_t i = 1; i < trace.size(); ++i) {
            const double rise = trace[i] - trace[i - 1];
            worst_rise = std::max(worst_rise, rise);
            if (rise > 1e-12) ok = false;
        }
    }
    std::ostringstream os;
    os << "worst per-iteration loss increase " << worst_rise;
    return {"descent", ok, os.str()};
}

}  // namespace selftest_detail

/// Runs the embedded verification suite, printing one pass/fail line per
/// check. Returns the number of failed checks.
inline int run_selftest(std::ostream& os, const SelftestOptions& opt = {}) {
    using namespace selftest_detail;
    const std::vector<std::function<Check()>> checks = {
        [&] { return check_adjoint(opt); },
        [] { return check_gradient(); },
        [] { return check_posterior_mean(); },
        [] { return check_ssim_reference(); },
        [] { return check_psnr_formula(); },
        [] { return check_descent(); },
    };
    int failures = 0;
    for (const auto& run : checks) {
        const Check c = run();
        os << (c.passed ? "[PASS] " : "[FAIL] ") << c.name << ": " << c.detail
           << "\n";
        if (!c.passed) ++failures;
    }
    os << (failures == 0 ? "selftest OK" : "selftest FAILED") << " ("
       << checks.size() - failures << "/" << checks.size() << " checks)\n";
    return failures;
}

}  // namespace gdr
