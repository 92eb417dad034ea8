#include "entrobench/error.hpp"
#include "entrobench/harness.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace entrobench;

namespace {

RunConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

const char* kSmallConfig = R"(
# three kinds on a small scene
[run]
tasks = threshold, cluster
entropies = shannon, renyi, tsallis, cross
alpha = 3
levels = 1-2
k = 2
seeds = 4
stride = 4
register_budget = 300

[dataset tiny]
spec = two-region
width = 48
height = 32
noise = 4
scene_seed = 9
)";

double metric(const std::vector<ReportRow>& rows, const std::string& name) {
    for (const auto& r : rows)
        if (r.metric == name) return r.value;
    ADD_FAILURE() << "missing metric " << name;
    return std::nan("");
}

}  // namespace

TEST(Config, ParsesSectionsListsAndRanges) {
    const auto cfg = parse(kSmallConfig);
    ASSERT_EQ(cfg.tasks.size(), 2u);
    EXPECT_EQ(cfg.tasks[1], Task::Cluster);
    ASSERT_EQ(cfg.entropies.size(), 4u);
    EXPECT_EQ(cfg.entropies[1].parameter, 3.0);
    EXPECT_EQ(cfg.entropies[2].parameter, 2.0);
    EXPECT_EQ(cfg.levels, (std::vector<std::size_t>{1, 2}));
    EXPECT_EQ(cfg.settings.register_budget, 300u);
    ASSERT_EQ(cfg.datasets.size(), 1u);
    EXPECT_EQ(cfg.datasets[0].id, "tiny");
    EXPECT_EQ(cfg.datasets[0].width, 48u);
    EXPECT_TRUE(cfg.datasets[0].synthetic());
}

TEST(Config, RejectsInvalidInput) {
    EXPECT_THROW(parse("[run]\ntasks = threshold\nentropies = shannon\nlevels = 1\nseeds = 1\n"),
                 InvalidArgument);
    EXPECT_THROW(parse("[run]\ntasks = threshold\nentropies = shannon\nlevels = 1\n"
                       "[dataset a]\nspec = two-region\n"),
                 InvalidArgument);
    EXPECT_THROW(parse("[run]\nbogus = 1\n"), InvalidArgument);
    EXPECT_THROW(parse("[weird]\n"), InvalidArgument);
    EXPECT_THROW(parse("tasks = threshold\n"), InvalidArgument);
    EXPECT_THROW(parse("[run]\nlevels = 5-2\n"), InvalidArgument);
    EXPECT_THROW(parse("[run]\nseeds = -1\n"), InvalidArgument);
}

TEST(EntropyChoice, ParameterRules) {
    EXPECT_THROW(EntropyChoice::parse("shannon", 2.0, std::nullopt), InvalidArgument);
    EXPECT_THROW(EntropyChoice::parse("renyi", std::nullopt, 2.0), InvalidArgument);
    EXPECT_THROW(EntropyChoice::parse("renyi", 1.0, std::nullopt), InvalidArgument);
    EXPECT_EQ(EntropyChoice::parse("tsallis", std::nullopt, 2.0).param_text(), "2.0");
    EXPECT_EQ(EntropyChoice::parse("renyi", 0.5, std::nullopt).param_text(), "0.5");
    EXPECT_EQ(EntropyChoice::parse("cross", std::nullopt, std::nullopt).param_text(), "-");
    EXPECT_THROW(EntropyChoice::parse("cross", std::nullopt, std::nullopt).kind(), InvalidArgument);
}

TEST(Runtime, Categories) {
    EXPECT_EQ(runtime_category(0.0), "low");
    EXPECT_EQ(runtime_category(29.999), "low");
    EXPECT_EQ(runtime_category(30.0), "medium");
    EXPECT_EQ(runtime_category(60.0), "medium");
    EXPECT_EQ(runtime_category(60.001), "high");
}

TEST(Csv, FormatAndHeader) {
    EXPECT_EQ(format_value(0.81), "0.810000");
    EXPECT_EQ(format_value(3.81), "3.81000");
    EXPECT_EQ(format_value(-0.0), "0.00000");
    EXPECT_EQ(format_value(std::nan("")), "nan");
    const ReportRow row{"register", "renyi", "2.0", "scene5", "-", "nccc", 0.81, 1.5, "low", 7};
    EXPECT_EQ(format_row(row), "register,renyi,2.0,scene5,-,nccc,0.810000,1.50000,low,7");
    std::ostringstream out;
    write_csv({row}, out);
    EXPECT_EQ(out.str().substr(0, out.str().find('\n')), kCsvHeader);
    EXPECT_THROW(emit_csv({}, std::string(TEST_WORK_DIR) + "_empty.csv"), InvalidArgument);
}

TEST(Transform, TextRoundTrip) {
    const SimilarityTransform t{3.0, -2.0, 0.0625, 1.04};
    const auto back = parse_transform(format_transform(t));
    EXPECT_EQ(back.dx, t.dx);
    EXPECT_EQ(back.theta, t.theta);
    EXPECT_EQ(back.scale, t.scale);
    EXPECT_THROW(parse_transform("1,2,3"), InvalidArgument);
    EXPECT_THROW(parse_transform("0,0,0,3"), InvalidArgument);
}

TEST(Matrix, ShapeOrderingAndDeterminism) {
    const auto cfg = parse(kSmallConfig);
    const auto a = run_matrix(cfg);
    const auto b = run_matrix(cfg);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].metric, b[i].metric);
        EXPECT_EQ(format_value(a[i].value), format_value(b[i].value));
        EXPECT_EQ(a[i].runtime_cat, runtime_category(a[i].runtime_s));
    }
    // threshold: 4 criteria x 2 levels, cluster: 3 kinds (cross skipped) x 1 k
    std::set<std::tuple<std::string, std::string, std::string>> cells;
    for (const auto& r : a) cells.insert({r.task, r.entropy, r.level});
    EXPECT_EQ(cells.size(), 8u + 3u);
    for (std::size_t i = 1; i < a.size(); ++i) EXPECT_LE(a[i - 1].task, a[i].task);
    for (const auto& r : a) EXPECT_EQ(r.metric.rfind("error:", 0), std::string::npos) << r.metric;
}

TEST(Matrix, FailingCellIsIsolated) {
    auto cfg = parse(kSmallConfig);
    cfg.tasks = {Task::Cluster};
    cfg.cluster_k = {2, 9};
    const auto rows = run_matrix(cfg);
    std::size_t errors = 0, good = 0;
    for (const auto& r : rows) {
        if (r.metric.rfind("error:", 0) == 0) {
            ++errors;
            EXPECT_EQ(r.level, "9");
            EXPECT_TRUE(std::isnan(r.value));
            EXPECT_EQ(r.metric.find(','), std::string::npos);
        } else {
            ++good;
        }
    }
    EXPECT_EQ(errors, 3u);
    EXPECT_GT(good, 0u);
}

TEST(Matrix, UnreadableDatasetBecomesErrorRow) {
    auto cfg = parse(kSmallConfig);
    DatasetSpec missing;
    missing.id = "missing";
    missing.image_path = std::string(TEST_WORK_DIR) + "_does_not_exist.pgm";
    cfg.datasets.push_back(missing);
    const auto rows = run_matrix(cfg);
    bool saw_error = false, saw_tiny = false;
    for (const auto& r : rows) {
        if (r.dataset == "missing") saw_error = r.metric.rfind("error:", 0) == 0;
        if (r.dataset == "tiny") saw_tiny = true;
    }
    EXPECT_TRUE(saw_error);
    EXPECT_TRUE(saw_tiny);
}

TEST(Cell, SelfRegistration) {
    DatasetSpec spec;
    spec.id = "self";
    spec.preset = "five-region";
    spec.width = spec.height = 96;
    spec.scene_seed = 3;
    const auto data = prepare_dataset(spec, Preprocess::Median3);
    ASSERT_TRUE(data.transform.has_value());
    TaskSettings settings;
    settings.register_budget = 400;
    settings.register_restarts = 2;
    const auto rows = run_cell({Task::Register, EntropyChoice::parse("shannon", {}, {}), 0, 1}, data, settings);
    EXPECT_GE(metric(rows, "nccc"), 0.99);
    EXPECT_LE(metric(rows, "rmse"), 0.1);
    for (const auto& r : rows) EXPECT_EQ(r.level, "-");
}

TEST(Cell, MetricFilter) {
    const auto cfg = parse(kSmallConfig);
    const auto data = prepare_dataset(cfg.datasets[0], Preprocess::Median3);
    TaskSettings settings;
    settings.metrics = {"kappa"};
    const auto rows = run_cell({Task::Threshold, EntropyChoice::parse("shannon", {}, {}), 1, 0}, data, settings);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].metric, "kappa");
    EXPECT_GT(rows[0].value, 0.99);
}

TEST(Dataset, TruthPointsSubsample) {
    const auto cfg = parse(kSmallConfig);
    const auto data = prepare_dataset(cfg.datasets[0], Preprocess::None);
    TaskSettings dense, sparse;
    sparse.truth_points = 30;
    const Cell cell{Task::Threshold, EntropyChoice::parse("renyi", 2.0, {}), 1, 2};
    EXPECT_NEAR(metric(run_cell(cell, data, dense), "overall_accuracy"),
                metric(run_cell(cell, data, sparse), "overall_accuracy"), 0.05);
}

TEST(Dataset, FileBackedMatchesSynthetic) {
    const auto cfg = parse(kSmallConfig);
    const auto& synthetic = cfg.datasets[0];
    const auto scene = prepare_dataset(synthetic, Preprocess::None);
    const std::string img = std::string(TEST_WORK_DIR) + "_tiny.pgm";
    const std::string truth = std::string(TEST_WORK_DIR) + "_tiny_truth.pgm";
    write_pgm(scene.image, img);
    write_pgm(to_image(*scene.truth), truth);
    DatasetSpec files;
    files.id = "files";
    files.image_path = img;
    files.truth_path = truth;
    const auto loaded = prepare_dataset(files, Preprocess::None);
    EXPECT_EQ(loaded.image, scene.image);
    EXPECT_EQ(*loaded.truth, *scene.truth);
}
