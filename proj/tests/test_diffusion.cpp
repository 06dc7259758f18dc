#include <catch2/catch_amalgamated.hpp>

#include <cstring>

#include "gdr/denoise.hpp"
#include "gdr/sampler.hpp"
#include "gdr/schedule.hpp"
#include "oracles.hpp"

using gdr::ImageTensor;

TEST_CASE("make_schedule defaults: linear betas, decreasing alpha_bar") {
    const gdr::NoiseSchedule s = gdr::make_schedule(1000);
    REQUIRE(s.T == 1000);
    CHECK(s.beta(1) == 1e-4);
    CHECK(s.beta(1000) == Catch::Approx(0.02).margin(1e-15));
    for (int t = 2; t <= 1000; ++t) CHECK(s.beta(t) >= s.beta(t - 1));
    CHECK(s.alpha_bar(0) == 1.0);
    for (int t = 1; t <= 1000; ++t) {
        CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
        CHECK(s.alpha_bar(t) > 0.0);
    }
    // direct product recomputation
    double prod = 1.0;
    for (int t = 1; t <= 1000; ++t) prod *= 1.0 - s.beta(t);
    CHECK(s.alpha_bar(1000) == Catch::Approx(prod).epsilon(1e-12));
    CHECK(s.alpha_bar(1000) > 0.0);
    CHECK(s.alpha_bar(1000) < 1e-3);
}

TEST_CASE("make_schedule single step and validation") {
    const gdr::NoiseSchedule s = gdr::make_schedule(1, 0.5, 0.5);
    CHECK(s.alpha_bar(1) == 0.5);
    CHECK_THROWS_AS(gdr::make_schedule(0), std::invalid_argument);
    CHECK_THROWS_AS(gdr::make_schedule(10, 0.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(gdr::make_schedule(10, 0.2, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(gdr::make_schedule(10, 0.1, 1.0), std::invalid_argument);
}

TEST_CASE("make_ddim_timesteps stride structure") {
    const auto t20 = gdr::make_ddim_timesteps(20, 1000);
    REQUIRE(t20.size() == 20);
    CHECK(t20.front() == 1000);
    CHECK(t20.back() == 50);
    for (std::size_t i = 1; i < t20.size(); ++i)
        CHECK(t20[i - 1] - t20[i] == 50);

    const auto full = gdr::make_ddim_timesteps(10, 10);
    const std::vector<int> expect = {10, 9, 8, 7, 6, 5, 4, 3, 2, 1};
    CHECK(full == expect);

    const auto single = gdr::make_ddim_timesteps(1, 1000);
    CHECK(single == std::vector<int>{1000});

    CHECK_THROWS_AS(gdr::make_ddim_timesteps(11, 10), std::invalid_argument);
    CHECK_THROWS_AS(gdr::make_ddim_timesteps(0, 10), std::invalid_argument);
}

TEST_CASE("make_ddim_timesteps: non-divisible counts stay valid") {
    for (auto [steps, T] : {std::pair{7, 100}, {13, 1000}, {3, 10}}) {
        const auto ts = gdr::make_ddim_timesteps(steps, T);
        REQUIRE(static_cast<int>(ts.size()) == steps);
        CHECK(ts.front() <= T);
        CHECK(ts.back() >= 1);
        for (std::size_t i = 1; i < ts.size(); ++i) CHECK(ts[i] < ts[i - 1]);
    }
}

TEST_CASE("tweedie_x0 limits and inversion") {
    gdr::NormalSampler rng(31);
    const ImageTensor x = oracle::random_image(rng, 4, 4, 1);
    const ImageTensor eps = oracle::random_image(rng, 4, 4, 1);

    const ImageTensor same = gdr::tweedie_x0(x, eps, 1.0);
    CHECK(std::memcmp(same.data().data(), x.data().data(),
                      x.size() * sizeof(double)) == 0);

    for (double ab : {1e-4, 0.1, 0.5, 0.9, 0.999}) {
        const ImageTensor x0 = oracle::random_image(rng, 4, 4, 1, 0.3, 0.5);
        const ImageTensor z = oracle::random_image(rng, 4, 4, 1);
        ImageTensor xt(4, 4, 1);
        for (std::size_t i = 0; i < xt.size(); ++i)
            xt.data()[i] = std::sqrt(ab) * x0.data()[i] +
                           std::sqrt(1.0 - ab) * z.data()[i];
        const ImageTensor rec = gdr::tweedie_x0(xt, z, ab);
        for (std::size_t i = 0; i < rec.size(); ++i)
            CHECK(rec.data()[i] == Catch::Approx(x0.data()[i]).margin(1e-12));
    }
    CHECK_THROWS_AS(gdr::tweedie_x0(x, eps, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(gdr::tweedie_x0(x, eps, -0.5), std::invalid_argument);
}

TEST_CASE("tweedie of the analytic eps equals the closed-form posterior mean") {
    const gdr::NoiseSchedule s = gdr::make_schedule(1000);
    gdr::NormalSampler rng(32);
    const ImageTensor mu = oracle::random_image(rng, 4, 4, 1, 0.1, 0.5);
    const double pv = 0.3 * 0.3;
    const gdr::GaussianAnalyticDenoiser den(mu, pv, s);
    for (int t : {1, 10, 250, 999}) {
        const ImageTensor xt = oracle::random_image(rng, 4, 4, 1, 0.7, 0.2);
        const ImageTensor x0 =
            gdr::tweedie_x0(xt, den.predict_eps(xt, t), s.alpha_bar(t));
        const double ab = s.alpha_bar(t);
        for (std::size_t i = 0; i < x0.size(); ++i) {
            // closed form evaluated independently
            const double expect = (pv * std::sqrt(ab) * xt.data()[i] +
                                   (1.0 - ab) * mu.data()[i]) /
                                  (ab * pv + (1.0 - ab));
            CHECK(x0.data()[i] == Catch::Approx(expect).margin(1e-10));
        }
    }
}

TEST_CASE("ddim_step terminal and zero-eps behavior") {
    gdr::NormalSampler rng(33);
    const ImageTensor x0 = oracle::random_image(rng, 4, 4, 1);
    const ImageTensor eps = oracle::random_image(rng, 4, 4, 1);

    const ImageTensor fin = gdr::ddim_step(x0, eps, 1.0);
    CHECK(std::memcmp(fin.data().data(), x0.data().data(),
                      x0.size() * sizeof(double)) == 0);

    const ImageTensor zero_eps(4, 4, 1, 0.0);
    const ImageTensor partial = gdr::ddim_step(x0, zero_eps, 0.49);
    for (std::size_t i = 0; i < partial.size(); ++i)
        CHECK(partial.data()[i] ==
              Catch::Approx(0.7 * x0.data()[i]).margin(1e-15));

    // scalar hand evaluation: sqrt(0.64)=0.8, sqrt(0.36)=0.6
    ImageTensor a(1, 1, 1, 0.3), b(1, 1, 1, 0.2);
    CHECK(gdr::ddim_step(a, b, 0.64).data()[0] ==
          Catch::Approx(0.8 * 0.3 + 0.6 * 0.2).margin(1e-15));

    CHECK_THROWS_AS(gdr::ddim_step(x0, eps, 0.0), std::invalid_argument);
}

TEST_CASE("gaussian analytic trajectory matches the scalar recursion") {
    const gdr::NoiseSchedule s = gdr::make_schedule(1000);
    const double prior_sigma = 0.4;
    gdr::NormalSampler mu_rng(34);
    const ImageTensor mu = oracle::random_image(mu_rng, 2, 2, 1, 0.2, 0.5);
    const gdr::GaussianAnalyticDenoiser den(mu, prior_sigma * prior_sigma, s);

    for (int num_steps : {10, 50}) {
        const oracle::GaussianDdimFlow flow =
            oracle::gaussian_ddim_flow(s, num_steps, prior_sigma * prior_sigma);
        const auto ts = gdr::make_ddim_timesteps(num_steps, s.T);

        gdr::NormalSampler rng(77);
        const ImageTensor xT = rng.normal_image(2, 2, 1);
        ImageTensor x = xT;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            const ImageTensor eps = den.predict_eps(x, ts[i]);
            const ImageTensor x0 = gdr::tweedie_x0(x, eps, s.alpha_bar(ts[i]));
            const double ab_prev =
                i + 1 < ts.size() ? s.alpha_bar(ts[i + 1]) : 1.0;
            x = gdr::ddim_step(x0, eps, ab_prev);
            for (std::size_t p = 0; p < x.size(); ++p) {
                const double expect = flow.coef_x[i] * xT.data()[p] +
                                      flow.coef_mu[i] * mu.data()[p];
                REQUIRE(x.data()[p] == Catch::Approx(expect).margin(1e-9));
            }
        }
    }
}

TEST_CASE("sample_unconditional equals the closed-form flow endpoint") {
    const gdr::NoiseSchedule s = gdr::make_schedule(1000);
    const double prior_sigma = 0.3;
    const ImageTensor mu(3, 3, 1, 0.6);
    const gdr::GaussianAnalyticDenoiser den(mu, prior_sigma * prior_sigma, s);

    const int num_steps = s.T;  // full schedule
    const oracle::GaussianDdimFlow flow =
        oracle::gaussian_ddim_flow(s, num_steps, prior_sigma * prior_sigma);
    const double gain = flow.coef_x.back();
    // the full-schedule flow transports N(0,I) onto the prior: the total
    // gain lands on the prior standard deviation
    CHECK(std::fabs(gain) > 0.9 * prior_sigma);
    CHECK(std::fabs(gain) < 1.1 * prior_sigma);

    double worst_rms = 0.0;
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
        const ImageTensor out =
            gdr::sample_unconditional(den, s, num_steps, 3, 3, 1, seed);
        gdr::NormalSampler rng(seed);
        const ImageTensor xT = rng.normal_image(3, 3, 1);
        double sq = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double expect = flow.coef_x.back() * xT.data()[i] +
                                  flow.coef_mu.back() * mu.data()[i];
            REQUIRE(out.data()[i] == Catch::Approx(expect).margin(1e-9));
            sq += (out.data()[i] - mu.data()[i]) * (out.data()[i] - mu.data()[i]);
        }
        worst_rms = std::max(worst_rms, std::sqrt(sq / out.size()));
    }
    // endpoint spread follows the prior scale
    CHECK(worst_rms < 3.0 * prior_sigma);
}

TEST_CASE("sample_unconditional is deterministic per seed") {
    const gdr::NoiseSchedule s = gdr::make_schedule(100);
    const gdr::GaussianAnalyticDenoiser den(ImageTensor(2, 2, 1, 0.5), 0.09, s);
    const ImageTensor a = gdr::sample_unconditional(den, s, 25, 2, 2, 1, 42);
    const ImageTensor b = gdr::sample_unconditional(den, s, 25, 2, 2, 1, 42);
    CHECK(std::memcmp(a.data().data(), b.data().data(),
                      a.size() * sizeof(double)) == 0);
    const ImageTensor c = gdr::sample_unconditional(den, s, 25, 2, 2, 1, 43);
    CHECK(gdr::l2_distance(a, c) > 0.0);
}

TEST_CASE("gmm denoiser: single component reduces to the gaussian denoiser") {
    const gdr::NoiseSchedule s = gdr::make_schedule(500);
    gdr::NormalSampler rng(35);
    const ImageTensor mu = oracle::random_image(rng, 3, 3, 1, 0.2, 0.5);
    const gdr::GaussianAnalyticDenoiser gauss(mu, 0.25, s);
    const gdr::GmmAnalyticDenoiser gmm({{2.0, mu, 0.25}}, s);  // weight normalized
    for (int t : {1, 100, 499}) {
        const ImageTensor xt = oracle::random_image(rng, 3, 3, 1);
        const ImageTensor a = gauss.predict_eps(xt, t);
        const ImageTensor b = gmm.predict_eps(xt, t);
        for (std::size_t i = 0; i < a.size(); ++i)
            CHECK(a.data()[i] == Catch::Approx(b.data()[i]).margin(1e-12));
    }
}

TEST_CASE("gmm prior with two distant modes reaches both") {
    const gdr::NoiseSchedule s = gdr::make_schedule(1000);
    const ImageTensor lo(2, 2, 1, 0.2);
    const ImageTensor hi(2, 2, 1, 0.8);
    const gdr::GmmAnalyticDenoiser den({{0.5, lo, 0.0025}, {0.5, hi, 0.0025}}, s);

    int low_count = 0, high_count = 0;
    for (std::uint64_t seed = 0; seed < 120; ++seed) {
        const ImageTensor out =
            gdr::sample_unconditional(den, s, 50, 2, 2, 1, seed);
        double mean = 0.0;
        for (double v : out.data()) mean += v;
        mean /= out.size();
        if (mean < 0.5)
            ++low_count;
        else
            ++high_count;
    }
    CHECK(low_count >= 20);
    CHECK(high_count >= 20);
}

TEST_CASE("gmm validation") {
    const gdr::NoiseSchedule s = gdr::make_schedule(10);
    const ImageTensor m(2, 2, 1, 0.5);
    CHECK_THROWS_AS(gdr::GmmAnalyticDenoiser({}, s), std::invalid_argument);
    CHECK_THROWS_AS(gdr::GmmAnalyticDenoiser({{0.0, m, 0.1}}, s),
                    std::invalid_argument);
    CHECK_THROWS_AS(gdr::GmmAnalyticDenoiser({{1.0, m, 0.0}}, s),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        gdr::GmmAnalyticDenoiser({{1.0, m, 0.1}, {1.0, ImageTensor(3, 3, 1), 0.1}},
                                 s),
        std::invalid_argument);
}
