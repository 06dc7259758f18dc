#include <catch2/catch_amalgamated.hpp>

#include "gdr/metrics.hpp"
#include "gdr/operators.hpp"
#include "oracles.hpp"

using gdr::ImageTensor;

TEST_CASE("mse basics and brute-force agreement") {
    const ImageTensor zeros(8, 8, 1, 0.0);
    const ImageTensor halves(8, 8, 1, 0.5);
    CHECK(gdr::mse(zeros, zeros) == 0.0);
    CHECK(gdr::mse(zeros, halves) == Catch::Approx(0.25).margin(1e-15));

    gdr::NormalSampler rng(61);
    const ImageTensor a = oracle::random_image(rng, 9, 7, 3, 0.3, 0.5);
    const ImageTensor b = oracle::random_image(rng, 9, 7, 3, 0.3, 0.5);
    double acc = 0.0;
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 7; ++x)
            for (int c = 0; c < 3; ++c)
                acc += (a(y, x, c) - b(y, x, c)) * (a(y, x, c) - b(y, x, c));
    CHECK(gdr::mse(a, b) == Catch::Approx(acc / a.size()).margin(1e-12));

    CHECK_THROWS_AS(gdr::mse(zeros, ImageTensor(4, 4, 1)),
                    std::invalid_argument);
}

TEST_CASE("psnr formula, infinity sentinel and doubling identity") {
    const ImageTensor zeros(16, 16, 1, 0.0);
    const ImageTensor tenth(16, 16, 1, 0.1);
    CHECK(gdr::psnr(zeros, tenth) == Catch::Approx(20.0).margin(1e-9));
    CHECK(std::isinf(gdr::psnr(zeros, zeros)));

    const ImageTensor fifth(16, 16, 1, 0.2);
    const double drop = gdr::psnr(zeros, tenth) - gdr::psnr(zeros, fifth);
    CHECK(drop == Catch::Approx(20.0 * std::log10(2.0)).margin(1e-9));
}

TEST_CASE("psnr and ssim are symmetric") {
    gdr::NormalSampler rng(62);
    const ImageTensor a = oracle::random_image(rng, 16, 16, 1, 0.2, 0.5);
    const ImageTensor b = oracle::random_image(rng, 16, 16, 1, 0.2, 0.5);
    CHECK(gdr::psnr(a, b) == gdr::psnr(b, a));
    CHECK(gdr::ssim(a, b) == gdr::ssim(b, a));
}

TEST_CASE("ssim of identical images is 1") {
    gdr::NormalSampler rng(63);
    const ImageTensor a = oracle::random_image(rng, 16, 16, 3, 0.2, 0.5);
    CHECK(gdr::ssim(a, a) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("ssim on constant images matches the closed form") {
    const double mu_a = 0.5, mu_b = 0.6, c1 = 1e-4;
    const ImageTensor a(16, 16, 1, mu_a);
    const ImageTensor b(16, 16, 1, mu_b);
    const double expect =
        (2 * mu_a * mu_b + c1) / (mu_a * mu_a + mu_b * mu_b + c1);
    CHECK(gdr::ssim(a, b) == Catch::Approx(expect).margin(1e-9));
}

TEST_CASE("ssim agrees with the brute-force sliding-window reference") {
    gdr::NormalSampler rng(64);
    for (int trial = 0; trial < 4; ++trial) {
        const int c = trial % 2 == 0 ? 1 : 3;
        const ImageTensor a = oracle::random_image(rng, 32, 32, c, 0.2, 0.5);
        const ImageTensor b = oracle::random_image(rng, 32, 32, c, 0.2, 0.5);
        CHECK(std::fabs(gdr::ssim(a, b) - oracle::ssim_reference(a, b)) < 1e-6);
    }
}

TEST_CASE("ssim is maximal at the identical pair") {
    gdr::NormalSampler rng(65);
    const ImageTensor a = oracle::random_image(rng, 16, 16, 1, 0.2, 0.5);
    for (double eps : {0.01, 0.05, 0.2}) {
        ImageTensor b = a;
        gdr::NormalSampler prng(66);
        for (double& v : b.data()) v += eps * prng.next();
        CHECK(gdr::ssim(a, b) < 1.0);
    }
}

TEST_CASE("ssim window preconditions") {
    const ImageTensor small(8, 8, 1, 0.5);
    CHECK_THROWS_AS(gdr::ssim(small, small), std::invalid_argument);
    const ImageTensor tall(11, 64, 1, 0.5);
    CHECK_NOTHROW(gdr::ssim(tall, tall));
}

TEST_CASE("psnr strictly decreases as noise grows") {
    const ImageTensor clean(64, 64, 1, 0.5);
    double prev = std::numeric_limits<double>::infinity();
    int k = 0;
    for (double sigma : {0.01, 0.02, 0.05, 0.1}) {
        const ImageTensor noisy =
            gdr::add_noise(clean, {sigma, 700 + static_cast<std::uint64_t>(k++)});
        const double p = gdr::psnr(clean, noisy);
        CHECK(p < prev);
        prev = p;
    }
}

TEST_CASE("compare fills all fields consistently") {
    gdr::NormalSampler rng(67);
    const ImageTensor a = oracle::random_image(rng, 16, 16, 1, 0.2, 0.5);
    const ImageTensor b = oracle::random_image(rng, 16, 16, 1, 0.2, 0.5);
    const gdr::MetricReport r = gdr::compare(a, b);
    CHECK(r.mse == gdr::mse(a, b));
    CHECK(r.psnr_db == Catch::Approx(10.0 * std::log10(1.0 / r.mse)).margin(1e-12));
    CHECK(r.ssim == gdr::ssim(a, b));
}
