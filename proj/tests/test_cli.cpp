#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gdr/guidance.hpp"
#include "gdr/harness.hpp"
#include "gdr/png_io.hpp"
#include "gdr/sampler.hpp"
#include "oracles.hpp"

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

CliResult run_cli(const std::string& args, const oracle::TempDir& tmp,
                  const std::string& tag) {
    const std::string out_file = tmp.str("cli_" + tag + ".out");
    const std::string err_file = tmp.str("cli_" + tag + ".err");
    const std::string cmd = std::string(GDR_CLI_PATH) + " " + args + " > " +
                            out_file + " 2> " + err_file;
    const int raw = std::system(cmd.c_str());
    CliResult res;
    res.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    res.out = slurp(out_file);
    res.err = slurp(err_file);
    return res;
}

void write_source_images(const std::string& dir, int count, int h, int w,
                         std::uint64_t seed) {
    std::filesystem::create_directories(dir);
    gdr::NormalSampler rng(seed);
    for (int i = 0; i < count; ++i) {
        gdr::ImageTensor img(h, w, 1);
        for (double& v : img.data()) v = 0.5 + 0.25 * rng.next();
        char name[32];
        std::snprintf(name, sizeof(name), "img_%02d.png", i);
        gdr::save_image(img, dir + "/" + name);
    }
}

}  // namespace

TEST_CASE("cli: help exits 0, usage errors exit 1") {
    oracle::TempDir tmp("cli_help");
    CHECK(run_cli("--help", tmp, "h").code == 0);
    CHECK(run_cli("degrade --help", tmp, "dh").code == 0);
    CHECK(run_cli("restore --help", tmp, "rh").code == 0);
    CHECK(run_cli("sweep --help", tmp, "sh").code == 0);

    const CliResult missing = run_cli("degrade --task sr4x --out /tmp/x", tmp, "m");
    CHECK(missing.code == 1);
    CHECK((missing.err.find("--input") != std::string::npos ||
           missing.out.find("--input") != std::string::npos));

    CHECK(run_cli("", tmp, "none").code == 1);
    CHECK(run_cli("frobnicate", tmp, "unknown").code == 1);
}

TEST_CASE("cli: degrade builds the pair layout; sigma 0 is exactly A(gt)") {
    oracle::TempDir tmp("cli_degrade");
    write_source_images(tmp.str("src"), 2, 24, 24, 81);

    const CliResult r = run_cli("degrade --input " + tmp.str("src") +
                                    " --task sr4x --side 16 --sigma 0 --seed 4"
                                    " --out " + tmp.str("pairs"),
                                tmp, "deg");
    REQUIRE(r.code == 0);
    CHECK(std::filesystem::exists(tmp.str("pairs/meta.json")));

    const gdr::ImageTensor gt =
        gdr::load_image(tmp.str("pairs/gt/img_00.png"));
    const gdr::ImageTensor deg =
        gdr::load_image(tmp.str("pairs/deg/img_00.png"));
    const gdr::LinearDegradation A = gdr::build_sr4x(16, 16, 1);
    const gdr::ImageTensor expect = A.apply(gt);
    REQUIRE(deg.size() == expect.size());
    for (std::size_t i = 0; i < deg.size(); ++i)
        CHECK(deg.data()[i] == gdr::quantize_byte(expect.data()[i]) / 255.0);
}

TEST_CASE("cli: restore with m=0 equals the unconditional sample") {
    oracle::TempDir tmp("cli_restore");
    write_source_images(tmp.str("src"), 1, 24, 24, 82);
    REQUIRE(run_cli("degrade --input " + tmp.str("src") +
                        " --task sr4x --side 16 --seed 1 --out " +
                        tmp.str("pairs"),
                    tmp, "deg")
                .code == 0);

    const CliResult r = run_cli(
        "restore --measurement " + tmp.str("pairs/deg/img_00.png") +
            " --task sr4x --m 0 --ddim-steps 20 --seed 11"
            " --prior-sigma 0.5 --prior-mean 0.5 --out " + tmp.str("rest.png"),
        tmp, "rest");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("residual") != std::string::npos);
    CHECK(r.out.find("elapsed ms") != std::string::npos);

    const gdr::NoiseSchedule s = gdr::make_schedule(1000);
    const gdr::GaussianAnalyticDenoiser den(gdr::ImageTensor(16, 16, 1, 0.5),
                                            0.25, s);
    const gdr::ImageTensor expect =
        gdr::sample_unconditional(den, s, 20, 16, 16, 1, 11);
    const gdr::ImageTensor got = gdr::load_image(tmp.str("rest.png"));
    REQUIRE(got.size() == expect.size());
    for (std::size_t i = 0; i < got.size(); ++i)
        CHECK(got.data()[i] == gdr::quantize_byte(expect.data()[i]) / 255.0);
}

TEST_CASE("cli: raw mode with a huge scale exits 2 naming the iteration") {
    oracle::TempDir tmp("cli_diverge");
    write_source_images(tmp.str("src"), 1, 24, 24, 83);
    REQUIRE(run_cli("degrade --input " + tmp.str("src") +
                        " --task deblur --side 16 --kernel-size 9 --seed 1 "
                        "--out " + tmp.str("pairs"),
                    tmp, "deg")
                .code == 0);
    const CliResult r = run_cli(
        "restore --measurement " + tmp.str("pairs/deg/img_00.png") +
            " --task deblur --kernel-size 9 --m 50 --scale 1e12 "
            "--step-mode raw --ddim-steps 5 --out " + tmp.str("x.png"),
        tmp, "div");
    CHECK(r.code == 2);
    CHECK(r.err.find("inner iteration") != std::string::npos);
}

TEST_CASE("cli: metrics prints inf for identical images") {
    oracle::TempDir tmp("cli_metrics");
    write_source_images(tmp.str("src"), 1, 16, 16, 84);
    const std::string img = tmp.str("src/img_00.png");
    const CliResult r = run_cli("metrics --ref " + img + " --test " + img, tmp,
                                "met");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("psnr = inf") != std::string::npos);
    CHECK(r.out.find("ssim = 1") != std::string::npos);
}

TEST_CASE("cli: adjoint-check passes at the documented tolerance") {
    oracle::TempDir tmp("cli_adj");
    const CliResult r =
        run_cli("adjoint-check --task both --side 16 --trials 50", tmp, "adj");
    CHECK(r.code == 0);
    CHECK(r.out.find("adjoint-check OK") != std::string::npos);
}

TEST_CASE("cli: selftest passes and fault injection trips the adjoint check") {
    oracle::TempDir tmp("cli_self");
    const CliResult ok = run_cli("selftest", tmp, "ok");
    REQUIRE(ok.code == 0);
    int pass_lines = 0;
    std::istringstream is(ok.out);
    std::string line;
    while (std::getline(is, line))
        if (line.rfind("[PASS]", 0) == 0) ++pass_lines;
    CHECK(pass_lines >= 5);
    CHECK(ok.out.find("adjoint") != std::string::npos);
    CHECK(ok.out.find("gradient") != std::string::npos);
    CHECK(ok.out.find("posterior-mean") != std::string::npos);
    CHECK(ok.out.find("ssim-reference") != std::string::npos);
    CHECK(ok.out.find("descent") != std::string::npos);

    const CliResult bad = run_cli("selftest --inject-fault adjoint", tmp, "bad");
    CHECK(bad.code == 2);
    CHECK(bad.out.find("[FAIL] adjoint") != std::string::npos);
}

TEST_CASE("cli: projector-train writes a loadable projector") {
    oracle::TempDir tmp("cli_proj");
    write_source_images(tmp.str("src"), 6, 20, 20, 85);
    const CliResult r = run_cli("projector-train --input " + tmp.str("src") +
                                    " --k 3 --side 16 --out " + tmp.str("p.bin"),
                                tmp, "pt");
    REQUIRE(r.code == 0);
    const gdr::PcaProjector proj = gdr::PcaProjector::load(tmp.str("p.bin"));
    CHECK(proj.dim() == 256);
    CHECK(proj.rank() == 3);

    // and restore accepts it
    REQUIRE(run_cli("degrade --input " + tmp.str("src") +
                        " --task sr4x --side 16 --seed 2 --out " +
                        tmp.str("pairs"),
                    tmp, "deg")
                .code == 0);
    const CliResult rr = run_cli(
        "restore --measurement " + tmp.str("pairs/deg/img_00.png") +
            " --task sr4x --m 3 --ddim-steps 10 --projector " +
            tmp.str("p.bin") + " --out " + tmp.str("r.png"),
        tmp, "pr");
    CHECK(rr.code == 0);
}

TEST_CASE("cli: sweep runs from config file with flag overrides") {
    oracle::TempDir tmp("cli_sweep");
    write_source_images(tmp.str("src"), 2, 20, 20, 86);

    nlohmann::json cfg = {{"task", "sr4x"},
                          {"inner_steps_list", {1}},
                          {"ddim_steps_list", {10}},
                          {"scales_list", {4.0}},
                          {"seed", 6},
                          {"dataset_dir", tmp.str("src")},
                          {"working_side", 16},
                          {"warmup_runs", 0},
                          {"out_dir", tmp.str("out")}};
    {
        std::ofstream os(tmp.str("cfg.json"));
        os << cfg.dump(2);
    }
    const CliResult r = run_cli(
        "sweep --config " + tmp.str("cfg.json") + " --scales 7.5", tmp, "sw");
    REQUIRE(r.code == 0);

    const nlohmann::json manifest =
        nlohmann::json::parse(slurp(tmp.str("out/manifest.json")));
    CHECK(manifest["config"]["scales_list"] == nlohmann::json::array({7.5}));
    CHECK(manifest["config"]["seed"] == 6);

    const std::string csv = slurp(tmp.str("out/results.csv"));
    int lines = 0;
    for (char c : csv) lines += c == '\n';
    CHECK(lines == 2);  // header + one row

    // replay straight from the manifest
    const CliResult replay = run_cli(
        "sweep --config " + tmp.str("out/manifest.json") + " --out " +
            tmp.str("out2"),
        tmp, "rp");
    REQUIRE(replay.code == 0);
    const std::string a = slurp(tmp.str("out/results.csv"));
    const std::string b = slurp(tmp.str("out2/results.csv"));
    const auto cut = [](const std::string& s) {
        std::istringstream is(s);
        std::ostringstream os;
        std::string line;
        while (std::getline(is, line)) os << line.substr(0, line.rfind(',')) << "\n";
        return os.str();
    };
    CHECK(cut(a) == cut(b));
}

TEST_CASE("cli: sweep without a dataset is a usage error") {
    oracle::TempDir tmp("cli_sweep_err");
    const CliResult r = run_cli("sweep --task sr4x", tmp, "e");
    CHECK(r.code == 1);
}
