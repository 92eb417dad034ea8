// entrobench: run single thresholding / registration / clustering cells, a
// configured benchmark matrix, or synthesize test scenes.

#include "entrobench/error.hpp"
#include "entrobench/harness.hpp"
#include "entrobench/raster.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace entrobench;

namespace {

struct DatasetOptions {
    std::vector<std::string> inputs;
    std::string truth;
    std::string spec;
    std::uint64_t scene_seed = 0;
    std::size_t width = 256;
    std::size_t height = 256;
    double noise = -1.0;
    double salt_pepper = 0.0;
    std::string transform;
    std::string id;
};

struct CellOptions {
    std::string entropy = "shannon";
    std::optional<double> alpha;
    std::optional<double> q;
    std::uint64_t seed = 0;
    std::optional<std::size_t> budget;
    std::string preprocess = "median3";
    std::string metrics;
    std::string out;
};

void add_dataset_options(CLI::App* cmd, DatasetOptions& d, bool with_truth) {
    cmd->add_option("inputs", d.inputs, "Input PGM file(s)");
    if (with_truth) cmd->add_option("--truth", d.truth, "Ground-truth label PGM");
    cmd->add_option("--spec", d.spec, "Synthetic scene instead of files (two-region|five-region)");
    cmd->add_option("--scene-seed", d.scene_seed, "Seed of the synthetic scene");
    cmd->add_option("--width", d.width, "Synthetic scene width");
    cmd->add_option("--height", d.height, "Synthetic scene height");
    cmd->add_option("--noise", d.noise, "Synthetic scene noise std-dev (default: preset)");
    cmd->add_option("--salt-pepper", d.salt_pepper, "Salt-and-pepper density applied to the scene");
    cmd->add_option("--dataset-id", d.id, "Dataset id printed in the report");
}

void add_cell_options(CLI::App* cmd, CellOptions& c) {
    cmd->add_option("--entropy", c.entropy, "shannon | renyi | tsallis (threshold also: cross)");
    cmd->add_option("--alpha", c.alpha, "Renyi order");
    cmd->add_option("--q", c.q, "Tsallis index");
    cmd->add_option("--seed", c.seed, "Algorithm seed");
    cmd->add_option("--budget", c.budget, "Evaluation budget");
    cmd->add_option("--preprocess", c.preprocess, "median3 | none")->check(CLI::IsMember({"median3", "none"}));
    cmd->add_option("--metrics", c.metrics, "Comma-separated metrics to print (default: all)");
    cmd->add_option("--out", c.out, "Also write the rows to <dir>/<task>.csv");
}

DatasetSpec to_dataset(const DatasetOptions& o, bool pair) {
    DatasetSpec d;
    if (!o.spec.empty()) {
        if (!o.inputs.empty()) throw InvalidArgument("give either input files or --spec, not both");
        d.preset = o.spec;
        d.width = o.width;
        d.height = o.height;
        d.noise = o.noise;
        d.scene_seed = o.scene_seed;
        d.salt_pepper = o.salt_pepper;
        d.id = o.id.empty() ? o.spec + "-" + std::to_string(o.scene_seed) : o.id;
    } else {
        const std::size_t want = pair ? 2 : 1;
        if (o.inputs.size() != want)
            throw InvalidArgument("expected " + std::to_string(want) + " input file(s) or --spec");
        d.image_path = o.inputs[0];
        if (pair) d.moving_path = o.inputs[1];
        d.truth_path = o.truth;
        d.id = o.id.empty() ? fs::path(o.inputs[0]).stem().string() : o.id;
    }
    if (!o.transform.empty()) d.transform = parse_transform(o.transform);
    return d;
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto end = s.find(',', start);
        auto item = s.substr(start, end == std::string::npos ? std::string::npos : end - start);
        if (!item.empty()) out.push_back(item);
        if (end == std::string::npos) break;
        start = end + 1;
    }
    return out;
}

// "3" or "2,3" or "2-5"
std::vector<std::size_t> parse_levels(const std::string& s) {
    std::vector<std::size_t> out;
    for (const auto& item : split_commas(s)) {
        const auto dash = item.find('-');
        if (dash != std::string::npos && dash > 0) {
            const auto lo = std::stoul(item.substr(0, dash));
            const auto hi = std::stoul(item.substr(dash + 1));
            for (auto v = lo; v <= hi; ++v) out.push_back(v);
        } else {
            out.push_back(std::stoul(item));
        }
    }
    if (out.empty()) throw InvalidArgument("no levels given");
    return out;
}

int run_task(Task task, const DatasetOptions& dopt, const CellOptions& copt, TaskSettings settings,
             const std::vector<std::size_t>& levels) {
    const auto entropy = EntropyChoice::parse(copt.entropy, copt.alpha, copt.q);
    if (entropy.is_cross() && task != Task::Threshold)
        throw InvalidArgument("cross-entropy is only available for threshold");
    settings.preprocess = copt.preprocess == "none" ? Preprocess::None : Preprocess::Median3;
    settings.metrics = split_commas(copt.metrics);
    const auto data = prepare_dataset(to_dataset(dopt, task == Task::Register), settings.preprocess);

    std::vector<ReportRow> rows;
    for (auto level : levels) {
        auto cell_rows = run_cell({task, entropy, level, copt.seed}, data, settings);
        rows.insert(rows.end(), cell_rows.begin(), cell_rows.end());
    }
    write_csv(rows, std::cout);
    if (!copt.out.empty()) {
        fs::create_directories(copt.out);
        emit_csv(rows, (fs::path(copt.out) / (task_name(task) + ".csv")).string());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Entropy benchmark for thresholding, registration and clustering"};
    app.set_version_flag("--version", std::string("entrobench schema ") + kSchemaVersion);
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "Write a synthetic scene and its truth labels");
    std::string synth_spec = "five-region", synth_out = ".", synth_transform;
    std::uint64_t synth_seed = 0;
    std::size_t synth_w = 256, synth_h = 256;
    double synth_noise = -1.0, synth_sp = 0.0;
    synth->add_option("--spec", synth_spec, "two-region | five-region");
    synth->add_option("--seed", synth_seed, "Scene seed");
    synth->add_option("--out", synth_out, "Output directory");
    synth->add_option("--width", synth_w, "Width");
    synth->add_option("--height", synth_h, "Height");
    synth->add_option("--noise", synth_noise, "Noise std-dev (default: preset)");
    synth->add_option("--salt-pepper", synth_sp, "Salt-and-pepper density");
    synth->add_option("--transform", synth_transform,
                      "Also write moving.pgm, re-aligned by this dx,dy,theta,scale");

    // threshold
    auto* threshold = app.add_subcommand("threshold", "Multilevel maximum-entropy thresholding");
    DatasetOptions th_data;
    CellOptions th_cell;
    TaskSettings th_settings;
    std::string th_levels = "2";
    std::string th_search = "auto";
    add_dataset_options(threshold, th_data, true);
    add_cell_options(threshold, th_cell);
    threshold->add_option("--levels", th_levels, "Threshold count(s), e.g. 3 or 2-5");
    threshold->add_option("--search", th_search, "auto | exhaustive | heuristic")
        ->check(CLI::IsMember({"auto", "exhaustive", "heuristic"}));
    threshold->add_option("--truth-points", th_settings.truth_points,
                          "Evaluate on n seeded points per class instead of every pixel");

    // register
    auto* reg = app.add_subcommand("register", "Mutual-information registration of ref and moving");
    DatasetOptions rg_data;
    CellOptions rg_cell;
    TaskSettings rg_settings;
    add_dataset_options(reg, rg_data, false);
    add_cell_options(reg, rg_cell);
    reg->add_option("--bins", rg_settings.mi_bins, "Joint histogram bins per axis");
    reg->add_option("--restarts", rg_settings.register_restarts, "Optimizer restarts");
    reg->add_option("--transform", rg_data.transform,
                    "Ground-truth dx,dy,theta,scale (reports rmse; with --spec also renders moving)");

    // cluster
    auto* clu = app.add_subcommand("cluster", "Entropy (CEF) clustering of pixel intensities");
    DatasetOptions cl_data;
    CellOptions cl_cell;
    TaskSettings cl_settings;
    std::string cl_k = "5";
    add_dataset_options(clu, cl_data, true);
    add_cell_options(clu, cl_cell);
    clu->add_option("--k,--levels", cl_k, "Cluster count(s)");
    clu->add_option("--stride", cl_settings.stride, "Pixel subsampling stride");
    clu->add_option("--sigma", cl_settings.sigma, "Kernel width (default: Silverman)");
    clu->add_option("--restarts", cl_settings.cluster_restarts, "Seeded restarts");
    clu->add_option("--truth-points", cl_settings.truth_points,
                    "Evaluate on n seeded points per class instead of every pixel");

    // bench
    auto* bench = app.add_subcommand("bench", "Run the experiment matrix from a config file");
    std::string bench_config, bench_out = ".";
    bench->add_option("--config", bench_config, "Config file")->required();
    bench->add_option("--out", bench_out, "Output directory for report.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*synth) {
            const auto spec = scene_preset(synth_spec, synth_w, synth_h, synth_noise);
            DatasetSpec d;
            d.preset = synth_spec;
            d.width = synth_w;
            d.height = synth_h;
            d.noise = synth_noise;
            d.scene_seed = synth_seed;
            d.salt_pepper = synth_sp;
            if (!synth_transform.empty()) d.transform = parse_transform(synth_transform);
            auto [ref, moving] = registration_pair(d);
            fs::create_directories(synth_out);
            const fs::path out(synth_out);
            write_pgm(ref, (out / "scene.pgm").string());
            write_pgm(to_image(generate_scene(spec, synth_seed).truth), (out / "truth.pgm").string());
            if (d.transform) {
                write_pgm(moving, (out / "moving.pgm").string());
                std::ofstream(out / "transform.txt") << format_transform(*d.transform) << '\n';
            }
            std::cout << "wrote " << (out / "scene.pgm").string() << '\n';
            return 0;
        }
        if (*threshold) {
            th_settings.search = th_search == "exhaustive"  ? SearchMode::Exhaustive
                                 : th_search == "heuristic" ? SearchMode::Heuristic
                                                            : SearchMode::Auto;
            if (th_cell.budget) th_settings.threshold_budget = *th_cell.budget;
            return run_task(Task::Threshold, th_data, th_cell, th_settings, parse_levels(th_levels));
        }
        if (*reg) {
            if (rg_cell.budget) rg_settings.register_budget = *rg_cell.budget;
            return run_task(Task::Register, rg_data, rg_cell, rg_settings, {0});
        }
        if (*clu) {
            return run_task(Task::Cluster, cl_data, cl_cell, cl_settings, parse_levels(cl_k));
        }
        if (*bench) {
            const auto cfg = load_config(bench_config);
            const auto rows = run_matrix(cfg);
            fs::create_directories(bench_out);
            const auto path = (fs::path(bench_out) / "report.csv").string();
            emit_csv(rows, path);
            // one table per task next to the combined report
            for (const Task task : cfg.tasks) {
                std::vector<ReportRow> part;
                for (const auto& r : rows)
                    if (r.task == task_name(task)) part.push_back(r);
                if (!part.empty()) emit_csv(part, (fs::path(bench_out) / (task_name(task) + ".csv")).string());
            }
            write_csv(rows, std::cout);
            std::cerr << "wrote " << rows.size() << " rows to " << path << '\n';
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
