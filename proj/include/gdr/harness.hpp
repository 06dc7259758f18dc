#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "gdr/denoise.hpp"
#include "gdr/guidance.hpp"
#include "gdr/image.hpp"
#include "gdr/metrics.hpp"
#include "gdr/operators.hpp"
#include "gdr/png_io.hpp"
#include "gdr/projector.hpp"
#include "gdr/resample.hpp"
#include "gdr/version.hpp"

namespace gdr {

/// Executes `warmup_runs` untimed calls, then times one call with a
/// monotonic clock. Returns fractional milliseconds.
template <typename F>
double time_restore(F&& fn, int warmup_runs) {
    if (warmup_runs < 0)
        throw std::invalid_argument("time_restore: warmup_runs must be >= 0");
    for (int i = 0; i < warmup_runs; ++i) fn();
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

struct DegradeOptions {
    std::string task = "sr4x";  // "sr4x" or "deblur"
    NoiseSpec noise;
    int working_side = 64;
    int kernel_size = 61;
    double kernel_sigma = 3.0;
};

struct DegradeEntry {
    std::string name;
    std::uint64_t seed = 0;
};

struct DegradeResult {
    std::filesystem::path out_dir;
    std::vector<DegradeEntry> files;
    std::vector<std::pair<std::string, std::string>> skipped;  // name, reason
};

namespace detail {

inline void check_task_name(const std::string& task) {
    if (task != "sr4x" && task != "deblur")
        throw std::invalid_argument("unknown task '" + task +
                                    "' (expected sr4x or deblur)");
}

inline LinearDegradation build_task_operator(const std::string& task, int side,
                                             int channels, int kernel_size,
                                             double kernel_sigma) {
    check_task_name(task);
    if (task == "sr4x") return build_sr4x(side, side, channels);
    return build_gaussian_blur(side, side, channels, kernel_size, kernel_sigma);
}

inline std::vector<std::filesystem::path> list_pngs(
    const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw std::runtime_error("not a directory: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char ch) { return std::tolower(ch); });
        if (ext == ".png") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

// Shortest-round-trip-ish deterministic formatting for CSV cells.
inline std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace detail

/// Normalizes every readable PNG in `dataset_dir` to working_side,
/// degrades it with the task operator plus seeded noise (per-file seed =
/// noise.seed + position in the sorted file list), and writes the pair
/// layout <out>/gt/<name>.png, <out>/deg/<name>.png, <out>/meta.json.
/// Unreadable files are skipped with a warning and recorded in meta.json.
inline DegradeResult degrade_dataset(const std::string& dataset_dir,
                                     const DegradeOptions& opt,
                                     const std::string& out_dir, int jobs = 1) {
    detail::check_task_name(opt.task);
    if (jobs < 1) throw std::invalid_argument("degrade: jobs must be >= 1");
    const auto files = detail::list_pngs(dataset_dir);
    if (files.empty())
        throw std::runtime_error("degrade: no PNG files in " + dataset_dir);

    DegradeResult result;
    result.out_dir = out_dir;
    std::filesystem::create_directories(result.out_dir / "gt");
    std::filesystem::create_directories(result.out_dir / "deg");

    struct Slot {
        bool ok = false;
        std::string name;
        std::uint64_t seed = 0;
        std::string reason;
    };
    std::vector<Slot> slots(files.size());

    auto process = [&](std::size_t i) {
        Slot& slot = slots[i];
        slot.name = files[i].filename().string();
        slot.seed = opt.noise.seed + i;
        ImageTensor img;
        try {
            img = load_image(files[i].string());
        } catch (const std::exception& e) {
            slot.reason = e.what();
            return;
        }
        ImageTensor gt = center_crop_resize(img, opt.working_side);
        // store-then-degrade: quantize first so the saved pair satisfies
        // y = A(gt as stored) + n
        for (double& v : gt.data()) v = quantize_byte(v) / 255.0;

        const LinearDegradation op = detail::build_task_operator(
            opt.task, opt.working_side, gt.channels(), opt.kernel_size,
            opt.kernel_sigma);
        const ImageTensor deg =
            add_noise(op.apply(gt), NoiseSpec{opt.noise.sigma, slot.seed});

        save_image(gt, (result.out_dir / "gt" / slot.name).string());
        save_image(deg, (result.out_dir / "deg" / slot.name).string());
        slot.ok = true;
    };

    if (jobs > 1) {
        std::atomic<std::size_t> next{0};
        std::vector<std::future<void>> workers;
        for (int w = 0; w < jobs; ++w)
            workers.push_back(std::async(std::launch::async, [&] {
                for (std::size_t i = next++; i < files.size(); i = next++)
                    process(i);
            }));
        for (auto& f : workers) f.get();
    } else {
        for (std::size_t i = 0; i < files.size(); ++i) process(i);
    }

    for (const auto& slot : slots) {
        if (slot.ok) {
            result.files.push_back({slot.name, slot.seed});
        } else {
            std::cerr << "warning: skipping " << slot.name << ": "
                      << slot.reason << "\n";
            result.skipped.emplace_back(slot.name, slot.reason);
        }
    }
    if (result.files.empty())
        throw std::runtime_error("degrade: no readable PNG files in " +
                                 dataset_dir);

    nlohmann::json meta;
    meta["task"] = opt.task;
    meta["working_side"] = opt.working_side;
    meta["sigma"] = opt.noise.sigma;
    meta["seed"] = opt.noise.seed;
    if (opt.task == "sr4x") {
        meta["sr_factor"] = 4;
    } else {
        meta["kernel_size"] = opt.kernel_size;
        meta["kernel_sigma"] = opt.kernel_sigma;
    }
    meta["files"] = nlohmann::json::array();
    for (const auto& f : result.files)
        meta["files"].push_back({{"name", f.name}, {"seed", f.seed}});
    meta["skipped"] = nlohmann::json::array();
    for (const auto& [name, reason] : result.skipped)
        meta["skipped"].push_back({{"name", name}, {"reason", reason}});

    std::ofstream os(result.out_dir / "meta.json");
    os << meta.dump(2) << "\n";
    if (!os)
        throw std::runtime_error("degrade: cannot write meta.json in " +
                                 result.out_dir.string());
    return result;
}

struct DenoiserSpec {
    std::string kind = "gaussian";  // gaussian | gmm | projector-augmented
    double prior_sigma = 0.5;
    double mean_level = 0.5;
    std::vector<double> gmm_levels = {0.25, 0.75};
    double gmm_sigma = 0.35;
    std::string projector_path;  // used by projector-augmented
};

struct SweepConfig {
    std::vector<std::string> task = {"sr4x"};
    std::vector<int> inner_steps_list = {1, 3, 7, 15, 20};
    std::vector<int> ddim_steps_list = {20, 50, 100};
    std::vector<double> scales_list = {4.0, 7.5, 17.5};
    std::uint64_t seed = 0;
    std::string dataset_dir;
    int working_side = 64;
    DenoiserSpec denoiser_spec;
    int warmup_runs = 2;

    std::string out_dir = "sweep_out";
    std::string step_mode = "budget";
    double sigma = 0.05;
    int kernel_size = 61;
    double kernel_sigma = 3.0;
    int jobs = 1;

    void validate() const {
        if (task.empty() || inner_steps_list.empty() ||
            ddim_steps_list.empty() || scales_list.empty())
            throw std::invalid_argument("sweep: all grid lists must be non-empty");
        for (const auto& t : task) detail::check_task_name(t);
        if (warmup_runs < 0)
            throw std::invalid_argument("sweep: warmup_runs must be >= 0");
        if (step_mode != "budget" && step_mode != "raw")
            throw std::invalid_argument("sweep: step_mode must be budget or raw");
        if (jobs < 1) throw std::invalid_argument("sweep: jobs must be >= 1");
    }
};

/// One measured table row; lpips stays an empty placeholder column.
struct ResultRow {
    std::string task;
    int m = 0;
    int ddim_steps = 0;
    double scale = 0.0;
    int n_images = 0;
    int n_failures = 0;
    double ssim_mean = 0.0;
    double ssim_std = 0.0;
    double psnr_mean = 0.0;  // over finite values only
    double psnr_std = 0.0;
    int n_inf = 0;
    double time_ms = 0.0;
};

inline const char* kResultCsvHeader =
    "task,m,ddim_steps,scale,n_images,n_failures,ssim_mean,ssim_std,"
    "psnr_mean,psnr_std,n_inf,lpips,time_ms";

inline void to_json(nlohmann::json& j, const DenoiserSpec& s) {
    j = {{"kind", s.kind},
         {"prior_sigma", s.prior_sigma},
         {"mean_level", s.mean_level},
         {"gmm_levels", s.gmm_levels},
         {"gmm_sigma", s.gmm_sigma},
         {"projector_path", s.projector_path}};
}

inline void from_json(const nlohmann::json& j, DenoiserSpec& s) {
    if (j.is_string()) {  // shorthand: "gaussian"
        s.kind = j.get<std::string>();
        return;
    }
    s.kind = j.value("kind", s.kind);
    s.prior_sigma = j.value("prior_sigma", s.prior_sigma);
    s.mean_level = j.value("mean_level", s.mean_level);
    s.gmm_levels = j.value("gmm_levels", s.gmm_levels);
    s.gmm_sigma = j.value("gmm_sigma", s.gmm_sigma);
    s.projector_path = j.value("projector_path", s.projector_path);
}

inline void to_json(nlohmann::json& j, const SweepConfig& c) {
    j = {{"task", c.task},
         {"inner_steps_list", c.inner_steps_list},
         {"ddim_steps_list", c.ddim_steps_list},
         {"scales_list", c.scales_list},
         {"seed", c.seed},
         {"dataset_dir", c.dataset_dir},
         {"working_side", c.working_side},
         {"denoiser_spec", c.denoiser_spec},
         {"warmup_runs", c.warmup_runs},
         {"out_dir", c.out_dir},
         {"step_mode", c.step_mode},
         {"sigma", c.sigma},
         {"kernel_size", c.kernel_size},
         {"kernel_sigma", c.kernel_sigma},
         {"jobs", c.jobs}};
}

inline void from_json(const nlohmann::json& j, SweepConfig& c) {
    if (j.contains("task")) {
        if (j["task"].is_string())
            c.task = {j["task"].get<std::string>()};
        else
            c.task = j["task"].get<std::vector<std::string>>();
    }
    c.inner_steps_list = j.value("inner_steps_list", c.inner_steps_list);
    c.ddim_steps_list = j.value("ddim_steps_list", c.ddim_steps_list);
    c.scales_list = j.value("scales_list", c.scales_list);
    c.seed = j.value("seed", c.seed);
    c.dataset_dir = j.value("dataset_dir", c.dataset_dir);
    c.working_side = j.value("working_side", c.working_side);
    if (j.contains("denoiser_spec"))
        c.denoiser_spec = j["denoiser_spec"].get<DenoiserSpec>();
    c.warmup_runs = j.value("warmup_runs", c.warmup_runs);
    c.out_dir = j.value("out_dir", c.out_dir);
    c.step_mode = j.value("step_mode", c.step_mode);
    c.sigma = j.value("sigma", c.sigma);
    c.kernel_size = j.value("kernel_size", c.kernel_size);
    c.kernel_sigma = j.value("kernel_sigma", c.kernel_sigma);
    c.jobs = j.value("jobs", c.jobs);
}

/// Loads a config file, accepting either a bare SweepConfig object or a
/// manifest.json (whose "config" member is used), so past runs replay.
inline SweepConfig load_sweep_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config " + path);
    nlohmann::json j = nlohmann::json::parse(is);
    if (j.contains("config") && j["config"].is_object()) j = j["config"];
    SweepConfig cfg;
    from_json(j, cfg);
    return cfg;
}

namespace detail {

struct LoadedPair {
    std::string name;
    ImageTensor gt;
    ImageTensor deg;
};

struct TaskData {
    std::string task;
    std::filesystem::path pairs_dir;
    std::vector<LoadedPair> pairs;
};

inline bool is_pairs_dir(const std::filesystem::path& dir) {
    return std::filesystem::is_regular_file(dir / "meta.json") &&
           std::filesystem::is_directory(dir / "gt") &&
           std::filesystem::is_directory(dir / "deg");
}

inline TaskData load_task_data(const SweepConfig& cfg, const std::string& task) {
    TaskData data;
    data.task = task;
    const std::filesystem::path ds(cfg.dataset_dir);
    if (is_pairs_dir(ds)) {
        std::ifstream is(ds / "meta.json");
        nlohmann::json meta = nlohmann::json::parse(is);
        const std::string meta_task = meta.at("task").get<std::string>();
        if (meta_task != task)
            throw std::runtime_error("pairs dir " + ds.string() + " holds task '" +
                                     meta_task + "', sweep asked for '" + task +
                                     "'");
        data.pairs_dir = ds;
        for (const auto& f : meta.at("files")) {
            const std::string name = f.at("name").get<std::string>();
            data.pairs.push_back(
                {name, load_image((ds / "gt" / name).string()),
                 load_image((ds / "deg" / name).string())});
        }
    } else {
        DegradeOptions opt;
        opt.task = task;
        opt.noise = NoiseSpec{cfg.sigma, cfg.seed};
        opt.working_side = cfg.working_side;
        opt.kernel_size = cfg.kernel_size;
        opt.kernel_sigma = cfg.kernel_sigma;
        const auto out =
            (std::filesystem::path(cfg.out_dir) / ("pairs_" + task)).string();
        const DegradeResult deg =
            degrade_dataset(cfg.dataset_dir, opt, out, cfg.jobs);
        data.pairs_dir = deg.out_dir;
        for (const auto& f : deg.files)
            data.pairs.push_back(
                {f.name, load_image((deg.out_dir / "gt" / f.name).string()),
                 load_image((deg.out_dir / "deg" / f.name).string())});
    }
    if (data.pairs.empty())
        throw std::runtime_error("sweep: no image pairs for task " + task);
    return data;
}

inline std::shared_ptr<Denoiser> make_denoiser(const DenoiserSpec& spec,
                                               const NoiseSchedule& schedule,
                                               int h, int w, int c) {
    if (spec.kind == "gaussian" || spec.kind == "projector-augmented") {
        return std::make_shared<GaussianAnalyticDenoiser>(
            ImageTensor(h, w, c, spec.mean_level),
            spec.prior_sigma * spec.prior_sigma, schedule);
    }
    if (spec.kind == "gmm") {
        std::vector<GmmAnalyticDenoiser::Component> comps;
        for (double level : spec.gmm_levels)
            comps.push_back({1.0, ImageTensor(h, w, c, level),
                             spec.gmm_sigma * spec.gmm_sigma});
        return std::make_shared<GmmAnalyticDenoiser>(std::move(comps), schedule);
    }
    throw std::invalid_argument("unknown denoiser kind '" + spec.kind + "'");
}

struct ImageOutcome {
    bool ok = false;
    double ssim = 0.0;
    double psnr = 0.0;
    double ms = 0.0;
};

// mean/std over already-filtered values; population std (divide by n)
inline std::pair<double, double> mean_std(const std::vector<double>& v) {
    if (v.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    return {mean, std::sqrt(var)};
}

}  // namespace detail

inline void write_results_csv(const std::vector<ResultRow>& rows,
                              const std::string& path);
inline void write_results_md(const std::vector<ResultRow>& rows,
                             const std::string& path);

/// Runs the full parameter grid for every selected task. Artifacts go to
/// cfg.out_dir: results.csv (stable machine schema), results.md (readable
/// table), manifest.json (replay record). Cells reuse one per-image seed
/// stream (seed + image index), so rows are seed-paired across the grid.
inline std::vector<ResultRow> run_sweep(const SweepConfig& cfg) {
    cfg.validate();
    std::filesystem::create_directories(cfg.out_dir);

    const NoiseSchedule schedule = make_schedule(1000);
    std::optional<PcaProjector> projector;
    if (cfg.denoiser_spec.kind == "projector-augmented") {
        if (cfg.denoiser_spec.projector_path.empty())
            throw std::invalid_argument(
                "projector-augmented denoiser needs projector_path");
        projector = PcaProjector::load(cfg.denoiser_spec.projector_path);
    }

    std::vector<ResultRow> rows;
    nlohmann::json manifest_cells = nlohmann::json::array();

    for (const auto& task : cfg.task) {
        const detail::TaskData data = detail::load_task_data(cfg, task);

        // operators and denoisers per channel count (images may mix 1 and 3)
        std::map<int, LinearDegradation> ops;
        std::map<int, std::shared_ptr<Denoiser>> denoisers;
        for (const auto& p : data.pairs) {
            const int c = p.gt.channels();
            if (!ops.count(c)) {
                ops.emplace(c, detail::build_task_operator(
                                   task, cfg.working_side, c, cfg.kernel_size,
                                   cfg.kernel_sigma));
                denoisers.emplace(
                    c, detail::make_denoiser(cfg.denoiser_spec, schedule,
                                             cfg.working_side, cfg.working_side,
                                             c));
            }
        }
        for (auto& [c, op] : ops) op.lipschitz();  // warm the cache up front

        for (int m : cfg.inner_steps_list) {
            for (int steps : cfg.ddim_steps_list) {
                for (double scale : cfg.scales_list) {
                    GuidanceConfig gcfg;
                    gcfg.inner_steps = m;
                    gcfg.scale = scale;
                    gcfg.step_mode = cfg.step_mode == "raw" ? StepMode::Raw
                                                            : StepMode::Budget;
                    gcfg.projector = projector ? &*projector : nullptr;

                    const std::uint64_t cell_seed = cfg.seed;
                    auto run_image =
                        [&](const detail::LoadedPair& p,
                            std::uint64_t img_seed) -> detail::ImageOutcome {
                        const auto& op = ops.at(p.gt.channels());
                        const auto& den = *denoisers.at(p.gt.channels());
                        detail::ImageOutcome out;
                        try {
                            const auto t0 = std::chrono::steady_clock::now();
                            const ImageTensor restored =
                                restore(p.deg, op, den, schedule, steps, gcfg,
                                        img_seed);
                            const auto t1 = std::chrono::steady_clock::now();
                            out.ms = std::chrono::duration<double, std::milli>(
                                         t1 - t0)
                                         .count();
                            out.ssim = ssim(p.gt, restored);
                            out.psnr = psnr(p.gt, restored);
                            out.ok = true;
                        } catch (const DivergenceError&) {
                            out.ok = false;
                        }
                        return out;
                    };

                    // warmups are untimed and discarded
                    for (int wu = 0; wu < cfg.warmup_runs; ++wu)
                        run_image(data.pairs.front(), cell_seed);

                    std::vector<detail::ImageOutcome> outcomes(data.pairs.size());
                    if (cfg.jobs > 1) {
                        // parallel outputs; timing comes from one serial run
                        std::vector<std::future<detail::ImageOutcome>> futs;
                        for (std::size_t i = 0; i < data.pairs.size(); ++i)
                            futs.push_back(std::async(
                                std::launch::async,
                                [&, i] { return run_image(data.pairs[i],
                                                          cell_seed + i); }));
                        for (std::size_t i = 0; i < futs.size(); ++i)
                            outcomes[i] = futs[i].get();
                        const auto serial =
                            run_image(data.pairs.front(), cell_seed);
                        for (auto& o : outcomes) o.ms = serial.ms;
                    } else {
                        for (std::size_t i = 0; i < data.pairs.size(); ++i)
                            outcomes[i] = run_image(data.pairs[i], cell_seed + i);
                    }

                    ResultRow row;
                    row.task = task;
                    row.m = m;
                    row.ddim_steps = steps;
                    row.scale = scale;
                    row.n_images = static_cast<int>(data.pairs.size());

                    std::vector<double> ssims, psnrs, times;
                    nlohmann::json image_seeds = nlohmann::json::array();
                    for (std::size_t i = 0; i < outcomes.size(); ++i) {
                        image_seeds.push_back(cell_seed + i);
                        const auto& o = outcomes[i];
                        if (!o.ok) {
                            ++row.n_failures;
                            continue;
                        }
                        ssims.push_back(o.ssim);
                        if (std::isinf(o.psnr))
                            ++row.n_inf;
                        else
                            psnrs.push_back(o.psnr);
                        times.push_back(o.ms);
                    }
                    if (row.n_failures == row.n_images)
                        throw std::runtime_error(
                            "sweep cell failed entirely: task=" + task +
                            " m=" + std::to_string(m) +
                            " ddim_steps=" + std::to_string(steps) +
                            " scale=" + detail::format_double(scale));

                    std::tie(row.ssim_mean, row.ssim_std) =
                        detail::mean_std(ssims);
                    if (psnrs.empty() && row.n_inf > 0) {
                        row.psnr_mean = std::numeric_limits<double>::infinity();
                        row.psnr_std = 0.0;
                    } else {
                        std::tie(row.psnr_mean, row.psnr_std) =
                            detail::mean_std(psnrs);
                    }
                    auto [tmean, tstd] = detail::mean_std(times);
                    (void)tstd;
                    row.time_ms = tmean;
                    rows.push_back(row);

                    manifest_cells.push_back({{"task", task},
                                              {"m", m},
                                              {"ddim_steps", steps},
                                              {"scale", scale},
                                              {"seed", cell_seed},
                                              {"image_seeds", image_seeds}});
                }
            }
        }
    }

    write_results_csv(rows, (std::filesystem::path(cfg.out_dir) / "results.csv")
                                .string());
    write_results_md(rows, (std::filesystem::path(cfg.out_dir) / "results.md")
                               .string());

    nlohmann::json manifest;
    manifest["engine_version"] = kEngineVersion;
    manifest["created_utc"] = detail::utc_timestamp();
    manifest["config"] = cfg;
    manifest["cells"] = std::move(manifest_cells);
    std::ofstream os(std::filesystem::path(cfg.out_dir) / "manifest.json");
    os << manifest.dump(2) << "\n";
    if (!os)
        throw std::runtime_error("sweep: cannot write manifest.json in " +
                                 cfg.out_dir);
    return rows;
}

inline std::string result_row_csv(const ResultRow& r) {
    std::ostringstream os;
    os << r.task << ',' << r.m << ',' << r.ddim_steps << ','
       << detail::format_double(r.scale) << ',' << r.n_images << ','
       << r.n_failures << ',' << detail::format_double(r.ssim_mean) << ','
       << detail::format_double(r.ssim_std) << ','
       << detail::format_double(r.psnr_mean) << ','
       << detail::format_double(r.psnr_std) << ',' << r.n_inf << ','
       << /* lpips: out of scope */ ',' << detail::format_double(r.time_ms);
    return os.str();
}

inline void write_results_csv(const std::vector<ResultRow>& rows,
                              const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << kResultCsvHeader << "\n";
    for (const auto& r : rows) os << result_row_csv(r) << "\n";
}

inline void write_results_md(const std::vector<ResultRow>& rows,
                             const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "| Task | m | DDIM steps | Scale | LPIPS ↓ | SSIM ↑ | PSNR ↑ | "
          "Time (ms) ↓ |\n";
    os << "|---|---|---|---|---|---|---|---|\n";
    char buf[64];
    for (const auto& r : rows) {
        os << "| " << r.task << " | " << r.m << " | " << r.ddim_steps << " | ";
        std::snprintf(buf, sizeof(buf), "%g", r.scale);
        os << buf << " | — | ";
        std::snprintf(buf, sizeof(buf), "%.4f", r.ssim_mean);
        os << buf << " | ";
        if (std::isinf(r.psnr_mean))
            os << "inf";
        else {
            std::snprintf(buf, sizeof(buf), "%.2f", r.psnr_mean);
            os << buf;
        }
        os << " | ";
        std::snprintf(buf, sizeof(buf), "%.2f", r.time_ms);
        os << buf << " |\n";
    }
}

}  // namespace gdr
