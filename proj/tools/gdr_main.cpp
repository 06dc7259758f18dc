// gdr — guided diffusion restoration engine, command-line front end.
//
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <chrono>
#include <cstdint>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gdr/gdr.hpp"

namespace {

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    if (out.empty()) throw std::invalid_argument("empty list: '" + s + "'");
    return out;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    for (double v : parse_double_list(s)) out.push_back(static_cast<int>(v));
    return out;
}

std::vector<std::string> parse_string_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

struct DenoiserFlags {
    std::string kind = "gaussian";
    double prior_sigma = 0.5;
    double prior_mean = 0.5;
    std::string gmm_levels = "0.25,0.75";
    double gmm_sigma = 0.35;
};

void add_denoiser_flags(CLI::App* cmd, DenoiserFlags& f) {
    cmd->add_option("--denoiser", f.kind, "Analytic prior: gaussian or gmm")
        ->default_val(f.kind);
    cmd->add_option("--prior-sigma", f.prior_sigma,
                    "Prior standard deviation (gaussian)")
        ->default_val(f.prior_sigma);
    cmd->add_option("--prior-mean", f.prior_mean,
                    "Constant prior mean level (gaussian)")
        ->default_val(f.prior_mean);
    cmd->add_option("--gmm-levels", f.gmm_levels,
                    "Comma-separated constant mean levels (gmm)")
        ->default_val(f.gmm_levels);
    cmd->add_option("--gmm-sigma", f.gmm_sigma,
                    "Per-component standard deviation (gmm)")
        ->default_val(f.gmm_sigma);
}

std::shared_ptr<gdr::Denoiser> make_denoiser(const DenoiserFlags& f,
                                             const gdr::NoiseSchedule& schedule,
                                             int h, int w, int c) {
    if (f.kind == "gaussian")
        return std::make_shared<gdr::GaussianAnalyticDenoiser>(
            gdr::ImageTensor(h, w, c, f.prior_mean),
            f.prior_sigma * f.prior_sigma, schedule);
    if (f.kind == "gmm") {
        std::vector<gdr::GmmAnalyticDenoiser::Component> comps;
        for (double level : parse_double_list(f.gmm_levels))
            comps.push_back({1.0, gdr::ImageTensor(h, w, c, level),
                             f.gmm_sigma * f.gmm_sigma});
        return std::make_shared<gdr::GmmAnalyticDenoiser>(std::move(comps),
                                                          schedule);
    }
    throw std::invalid_argument("unknown denoiser '" + f.kind +
                                "' (expected gaussian or gmm)");
}

int cmd_degrade(const std::string& input, const std::string& task, double sigma,
                int side, std::uint64_t seed, int kernel_size,
                double kernel_sigma, int jobs, const std::string& out) {
    gdr::DegradeOptions opt;
    opt.task = task;
    opt.noise = gdr::NoiseSpec{sigma, seed};
    opt.working_side = side;
    opt.kernel_size = kernel_size;
    opt.kernel_sigma = kernel_sigma;
    const gdr::DegradeResult res = gdr::degrade_dataset(input, opt, out, jobs);
    for (const auto& f : res.files)
        std::cout << f.name << "  seed=" << f.seed << "\n";
    std::cout << res.files.size() << " pair(s) written to " << out;
    if (!res.skipped.empty())
        std::cout << ", " << res.skipped.size() << " file(s) skipped";
    std::cout << "\n";
    return 0;
}

int cmd_restore(const std::string& measurement, const std::string& task, int m,
                double scale, int ddim_steps, const std::string& step_mode,
                const std::string& projector_arg, const DenoiserFlags& dflags,
                int kernel_size, double kernel_sigma, std::uint64_t seed,
                const std::string& out) {
    const gdr::ImageTensor y = gdr::load_image(measurement);
    int in_h = y.height(), in_w = y.width();
    if (task == "sr4x") {
        in_h *= 4;
        in_w *= 4;
    }
    const gdr::LinearDegradation A =
        task == "sr4x"
            ? gdr::build_sr4x(in_h, in_w, y.channels())
            : gdr::build_gaussian_blur(in_h, in_w, y.channels(), kernel_size,
                                       kernel_sigma);

    const gdr::NoiseSchedule schedule = gdr::make_schedule(1000);
    const auto denoiser =
        make_denoiser(dflags, schedule, in_h, in_w, y.channels());

    std::optional<gdr::PcaProjector> pca;
    gdr::GuidanceConfig cfg;
    cfg.inner_steps = m;
    cfg.scale = scale;
    cfg.step_mode =
        step_mode == "raw" ? gdr::StepMode::Raw : gdr::StepMode::Budget;
    if (projector_arg != "identity") {
        pca = gdr::PcaProjector::load(projector_arg);
        cfg.projector = &*pca;
    }

    const auto t0 = std::chrono::steady_clock::now();
    const gdr::ImageTensor restored =
        gdr::restore(y, A, *denoiser, schedule, ddim_steps, cfg, seed);
    const auto t1 = std::chrono::steady_clock::now();
    const double ms =
        std::chrono::duration<double, std::milli>(t1 - t0).count();

    gdr::save_image(restored, out);
    std::cout << "restored " << measurement << " -> " << out << "\n";
    std::cout << "residual ||y - A(x)|| = "
              << gdr::l2_distance(A.apply(restored), y) << "\n";
    std::cout << "elapsed ms = " << ms << "\n";
    return 0;
}

int cmd_metrics(const std::string& ref_path, const std::string& test_path) {
    const gdr::ImageTensor ref = gdr::load_image(ref_path);
    const gdr::ImageTensor test = gdr::load_image(test_path);
    const gdr::MetricReport r = gdr::compare(ref, test);
    std::cout << "mse  = " << r.mse << "\n";
    if (std::isinf(r.psnr_db))
        std::cout << "psnr = inf\n";
    else
        std::cout << "psnr = " << r.psnr_db << " dB\n";
    std::cout << "ssim = " << r.ssim << "\n";
    return 0;
}

int cmd_projector_train(const std::string& input, int k, int side,
                        const std::string& out) {
    std::vector<gdr::ImageTensor> images;
    for (const auto& path : gdr::detail::list_pngs(input))
        images.push_back(
            gdr::center_crop_resize(gdr::load_image(path.string()), side));
    if (images.size() < 2)
        throw std::runtime_error("projector-train: need at least 2 PNGs in " +
                                 input);
    const gdr::PcaProjector proj = gdr::train_pca_projector(images, k);
    proj.save(out);
    std::cout << "trained PCA projector: d=" << proj.dim()
              << " rank=" << proj.rank() << " (requested k=" << k << ") -> "
              << out << "\n";
    return 0;
}

int cmd_adjoint_check(const std::string& task, int side, int trials,
                      std::uint64_t seed, double tol, int kernel_size,
                      double kernel_sigma) {
    std::vector<gdr::LinearDegradation> ops;
    if (task == "sr4x" || task == "both")
        ops.push_back(gdr::build_sr4x(side, side, 1));
    if (task == "deblur" || task == "both")
        ops.push_back(gdr::build_gaussian_blur(side, side, 1, kernel_size,
                                               kernel_sigma));
    if (ops.empty())
        throw std::invalid_argument("adjoint-check: unknown task '" + task +
                                    "'");
    gdr::NormalSampler rng(seed);
    double worst = 0.0;
    for (const auto& A : ops) {
        for (int i = 0; i < trials; ++i) {
            const gdr::ImageTensor x = rng.normal_image(side, side, 1);
            const gdr::ImageTensor y =
                rng.normal_image(A.output_height(), A.output_width(), 1);
            const gdr::ImageTensor ax = A.apply(x);
            const double err =
                std::fabs(gdr::dot(ax, y) - gdr::dot(x, A.adjoint(y))) /
                (gdr::l2_norm(ax) * gdr::l2_norm(y));
            worst = std::max(worst, err);
        }
    }
    std::cout << "max relative adjoint error over " << trials
              << " trials/operator: " << worst << " (tol " << tol << ")\n";
    if (worst >= tol) {
        std::cerr << "adjoint-check FAILED\n";
        return 2;
    }
    std::cout << "adjoint-check OK\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gdr — training-free guided diffusion restoration engine"};
    app.require_subcommand(1);

    // degrade
    auto* degrade = app.add_subcommand(
        "degrade", "Build a degraded-pair dataset (gt/, deg/, meta.json)");
    std::string deg_input, deg_task, deg_out;
    double deg_sigma = 0.05, deg_ksigma = 3.0;
    int deg_side = 64, deg_ksize = 61, deg_jobs = 1;
    std::uint64_t deg_seed = 0;
    degrade->add_option("--input", deg_input, "Directory of source PNGs")
        ->required();
    degrade->add_option("--task", deg_task, "sr4x or deblur")->required();
    degrade->add_option("--sigma", deg_sigma, "Measurement noise sigma")
        ->default_val(deg_sigma);
    degrade->add_option("--side", deg_side, "Working resolution")
        ->default_val(deg_side);
    degrade->add_option("--seed", deg_seed, "Master seed")->default_val(0);
    degrade->add_option("--kernel-size", deg_ksize, "Blur kernel size (deblur)")
        ->default_val(deg_ksize);
    degrade->add_option("--kernel-sigma", deg_ksigma,
                        "Blur kernel sigma (deblur)")
        ->default_val(deg_ksigma);
    degrade->add_option("--jobs", deg_jobs, "Parallel workers")->default_val(1);
    degrade->add_option("--out", deg_out, "Output pair directory")->required();

    // restore
    auto* rest = app.add_subcommand(
        "restore", "Restore one measurement PNG with guided sampling");
    std::string r_meas, r_task, r_mode = "budget", r_projector = "identity",
                r_out;
    int r_m = 1, r_steps = 20, r_ksize = 61;
    double r_scale = 7.5, r_ksigma = 3.0;
    std::uint64_t r_seed = 0;
    DenoiserFlags r_dflags;
    rest->add_option("--measurement", r_meas, "Degraded input PNG")->required();
    rest->add_option("--task", r_task, "sr4x or deblur")->required();
    rest->add_option("--m", r_m, "Guidance inner steps per timestep")
        ->default_val(r_m);
    rest->add_option("--scale", r_scale, "Guidance scale g")
        ->default_val(r_scale);
    rest->add_option("--ddim-steps", r_steps, "Retained DDIM timesteps")
        ->default_val(r_steps);
    rest->add_option("--step-mode", r_mode,
                     "budget (rho = g/(m*L)) or raw (rho = g)")
        ->default_val(r_mode);
    rest->add_option("--projector", r_projector,
                     "identity or path to a trained projector file")
        ->default_val(r_projector);
    add_denoiser_flags(rest, r_dflags);
    rest->add_option("--kernel-size", r_ksize, "Blur kernel size (deblur)")
        ->default_val(r_ksize);
    rest->add_option("--kernel-sigma", r_ksigma, "Blur kernel sigma (deblur)")
        ->default_val(r_ksigma);
    rest->add_option("--seed", r_seed, "Sampling seed")->default_val(0);
    rest->add_option("--out", r_out, "Restored PNG path")->required();

    // metrics
    auto* met = app.add_subcommand("metrics",
                                   "PSNR/SSIM/MSE between two PNG images");
    std::string m_ref, m_test;
    met->add_option("--ref", m_ref, "Reference PNG")->required();
    met->add_option("--test", m_test, "Candidate PNG")->required();

    // sweep
    auto* sweep = app.add_subcommand(
        "sweep", "Run the benchmark grid and emit results + manifest");
    std::string s_config, s_dataset, s_tasks, s_inner, s_ddim, s_scales,
        s_out, s_mode, s_denoiser, s_projector;
    int s_side = 0, s_warmup = -1, s_ksize = 0, s_jobs = 0;
    double s_sigma = -1.0, s_ksigma = -1.0, s_prior_sigma = -1.0,
           s_mean_level = -1.0;
    std::uint64_t s_seed = 0;
    auto* s_seed_opt =
        sweep->add_option("--seed", s_seed, "Master seed (default 0)");
    sweep->add_option("--config", s_config,
                      "JSON config (or a previous manifest.json); flags "
                      "override file values");
    sweep->add_option("--dataset", s_dataset,
                      "Source PNG directory or an existing pair directory");
    sweep->add_option("--task", s_tasks, "Comma list: sr4x,deblur");
    sweep->add_option("--inner-steps", s_inner,
                      "Comma list of m values (default 1,3,7,15,20)");
    sweep->add_option("--ddim-steps", s_ddim,
                      "Comma list of DDIM steps (default 20,50,100)");
    sweep->add_option("--scales", s_scales,
                      "Comma list of guidance scales (default 4,7.5,17.5)");
    sweep->add_option("--side", s_side, "Working resolution (default 64)");
    sweep->add_option("--warmup-runs", s_warmup,
                      "Untimed warmup restores per cell (default 2)");
    sweep->add_option("--denoiser", s_denoiser,
                      "gaussian, gmm or projector-augmented");
    sweep->add_option("--prior-sigma", s_prior_sigma,
                      "Prior standard deviation (default 0.5)");
    sweep->add_option("--mean-level", s_mean_level,
                      "Constant prior mean level (default 0.5)");
    sweep->add_option("--projector", s_projector,
                      "Projector file for projector-augmented runs");
    sweep->add_option("--step-mode", s_mode, "budget or raw (default budget)");
    sweep->add_option("--sigma", s_sigma,
                      "Degradation noise sigma (default 0.05)");
    sweep->add_option("--kernel-size", s_ksize,
                      "Blur kernel size (default 61)");
    sweep->add_option("--kernel-sigma", s_ksigma,
                      "Blur kernel sigma (default 3.0)");
    sweep->add_option("--jobs", s_jobs, "Parallel workers (default 1)");
    sweep->add_option("--out", s_out, "Artifact directory (default sweep_out)");

    // projector-train
    auto* ptrain = app.add_subcommand(
        "projector-train", "Fit a PCA manifold projector from PNGs");
    std::string p_input, p_out;
    int p_k = 0, p_side = 64;
    ptrain->add_option("--input", p_input, "Directory of training PNGs")
        ->required();
    ptrain->add_option("--k", p_k, "Number of principal components")
        ->required();
    ptrain->add_option("--side", p_side, "Working resolution")
        ->default_val(p_side);
    ptrain->add_option("--out", p_out, "Projector file path")->required();

    // adjoint-check
    auto* adj = app.add_subcommand("adjoint-check",
                                   "Verify <Ax,y> = <x,A'y> on random pairs");
    std::string a_task = "both";
    int a_side = 16, a_trials = 100, a_ksize = 15;
    double a_tol = 1e-10, a_ksigma = 3.0;
    std::uint64_t a_seed = 0;
    adj->add_option("--task", a_task, "sr4x, deblur or both")
        ->default_val(a_task);
    adj->add_option("--side", a_side, "Test image side")->default_val(a_side);
    adj->add_option("--trials", a_trials, "Random pairs per operator")
        ->default_val(a_trials);
    adj->add_option("--seed", a_seed, "Seed")->default_val(0);
    adj->add_option("--tol", a_tol, "Relative error tolerance")
        ->default_val(a_tol);
    adj->add_option("--kernel-size", a_ksize, "Blur kernel size")
        ->default_val(a_ksize);
    adj->add_option("--kernel-sigma", a_ksigma, "Blur kernel sigma")
        ->default_val(a_ksigma);

    // selftest
    auto* self = app.add_subcommand(
        "selftest", "Run the embedded verification suite");
    std::string fault;
    self->add_option("--inject-fault", fault,
                     "Corrupt a named component (adjoint) to exercise the "
                     "failure path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*degrade)
            return cmd_degrade(deg_input, deg_task, deg_sigma, deg_side,
                               deg_seed, deg_ksize, deg_ksigma, deg_jobs,
                               deg_out);
        if (*rest)
            return cmd_restore(r_meas, r_task, r_m, r_scale, r_steps, r_mode,
                               r_projector, r_dflags, r_ksize, r_ksigma, r_seed,
                               r_out);
        if (*met) return cmd_metrics(m_ref, m_test);
        if (*sweep) {
            gdr::SweepConfig cfg;
            if (!s_config.empty()) cfg = gdr::load_sweep_config(s_config);
            if (!s_dataset.empty()) cfg.dataset_dir = s_dataset;
            if (!s_tasks.empty()) cfg.task = parse_string_list(s_tasks);
            if (!s_inner.empty()) cfg.inner_steps_list = parse_int_list(s_inner);
            if (!s_ddim.empty()) cfg.ddim_steps_list = parse_int_list(s_ddim);
            if (!s_scales.empty()) cfg.scales_list = parse_double_list(s_scales);
            if (s_seed_opt->count() > 0) cfg.seed = s_seed;
            if (s_side > 0) cfg.working_side = s_side;
            if (s_warmup >= 0) cfg.warmup_runs = s_warmup;
            if (!s_denoiser.empty()) cfg.denoiser_spec.kind = s_denoiser;
            if (s_prior_sigma > 0) cfg.denoiser_spec.prior_sigma = s_prior_sigma;
            if (s_mean_level >= 0) cfg.denoiser_spec.mean_level = s_mean_level;
            if (!s_projector.empty())
                cfg.denoiser_spec.projector_path = s_projector;
            if (!s_mode.empty()) cfg.step_mode = s_mode;
            if (s_sigma >= 0) cfg.sigma = s_sigma;
            if (s_ksize > 0) cfg.kernel_size = s_ksize;
            if (s_ksigma > 0) cfg.kernel_sigma = s_ksigma;
            if (s_jobs > 0) cfg.jobs = s_jobs;
            if (!s_out.empty()) cfg.out_dir = s_out;
            if (cfg.dataset_dir.empty())
                throw std::invalid_argument(
                    "sweep: --dataset (or dataset_dir in --config) is required");
            const auto rows = gdr::run_sweep(cfg);
            std::cout << gdr::kResultCsvHeader << "\n";
            for (const auto& row : rows)
                std::cout << gdr::result_row_csv(row) << "\n";
            std::cout << rows.size() << " row(s) -> " << cfg.out_dir << "\n";
            return 0;
        }
        if (*ptrain) return cmd_projector_train(p_input, p_k, p_side, p_out);
        if (*adj)
            return cmd_adjoint_check(a_task, a_side, a_trials, a_seed, a_tol,
                                     a_ksize, a_ksigma);
        if (*self) {
            if (!fault.empty() && fault != "adjoint")
                throw std::invalid_argument("unknown fault '" + fault + "'");
            gdr::SelftestOptions opt;
            opt.corrupt_adjoint = fault == "adjoint";
            return gdr::run_selftest(std::cout, opt) == 0 ? 0 : 2;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
