#pragma once

#include "entrobench/entropy.hpp"
#include "entrobench/raster.hpp"
#include "entrobench/registration.hpp"
#include "entrobench/threshold.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace entrobench {

/// Version of the CSV, config and CLI contract.
inline constexpr const char* kSchemaVersion = "1";

inline constexpr const char* kCsvHeader =
    "task,entropy,param,dataset,level,metric,value,runtime_s,runtime_cat,seed";

enum class Task { Threshold, Register, Cluster };

std::string task_name(Task t);
Task parse_task(const std::string& name);

/// An entropy column of the experiment: shannon, renyi(alpha), tsallis(q), or
/// the cross-entropy thresholding criterion.
struct EntropyChoice {
    std::string name;      // shannon | renyi | tsallis | cross
    double parameter = 1;  // alpha or q; unused for shannon and cross

    static EntropyChoice parse(const std::string& name, std::optional<double> alpha,
                               std::optional<double> q);
    bool is_cross() const { return name == "cross"; }
    EntropyKind kind() const;  // throws for cross
    Criterion criterion() const;
    std::string param_text() const;
};

/// Either a synthetic scene (preset + seed) or PGM files on disk.
struct DatasetSpec {
    std::string id;

    std::string preset;  // two-region | five-region; empty for file datasets
    std::size_t width = 256;
    std::size_t height = 256;
    double noise = -1.0;  // negative: preset default
    std::uint64_t scene_seed = 0;
    double salt_pepper = 0.0;

    std::string image_path;
    std::string truth_path;
    std::string moving_path;

    /// Ground-truth registration transform. For scenes the moving image is
    /// rendered so that this transform re-aligns it with the reference.
    std::optional<SimilarityTransform> transform;

    bool synthetic() const { return !preset.empty(); }
};

enum class Preprocess { None, Median3 };
enum class SearchMode { Auto, Exhaustive, Heuristic };

/// Per-task settings shared by the matrix runner and the single-cell CLI verbs.
struct TaskSettings {
    std::size_t mi_bins = kDefaultMiBins;
    std::size_t threshold_budget = 5000;
    SearchMode search = SearchMode::Auto;
    std::size_t register_budget = 2000;
    std::size_t register_restarts = 8;
    std::size_t stride = 4;
    double sigma = 0.0;  // 0: Silverman default
    std::size_t cluster_restarts = 4;
    std::size_t truth_points = 0;  // 0: dense ground truth
    Preprocess preprocess = Preprocess::Median3;
    std::vector<std::string> metrics;  // empty: emit every metric
};

struct RunConfig {
    std::vector<Task> tasks;
    std::vector<EntropyChoice> entropies;
    std::vector<DatasetSpec> datasets;
    std::vector<std::size_t> levels;     // threshold counts
    std::vector<std::size_t> cluster_k;  // cluster counts
    std::vector<std::uint64_t> seeds;
    TaskSettings settings;

    void validate() const;
};

/// Sectioned `key = value` text: one [run] section and one [dataset <id>]
/// section per dataset. '#' and ';' start comments.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

struct ReportRow {
    std::string task;
    std::string entropy;
    std::string param;
    std::string dataset;
    std::string level;  // "-" when not applicable
    std::string metric;
    double value = 0.0;
    double runtime_s = 0.0;
    std::string runtime_cat;
    std::uint64_t seed = 0;
};

/// low below 30 s, medium from 30 s to 60 s, high above 60 s.
std::string runtime_category(double seconds);

/// Inputs of one dataset after corruption and pre-processing.
struct PreparedDataset {
    std::string id;
    GrayImage image;
    std::optional<LabelMap> truth;
    GrayImage moving;
    std::optional<SimilarityTransform> transform;
};

PreparedDataset prepare_dataset(const DatasetSpec& spec, Preprocess preprocess);

/// Raw (un-preprocessed) registration pair for a dataset: reference and moving.
std::pair<GrayImage, GrayImage> registration_pair(const DatasetSpec& spec);

struct Cell {
    Task task;
    EntropyChoice entropy;
    std::size_t level = 0;  // threshold count or cluster count; ignored for register
    std::uint64_t seed = 0;
};

/// Runs one cell. Errors propagate as exceptions.
std::vector<ReportRow> run_cell(const Cell& cell, const PreparedDataset& data,
                                const TaskSettings& settings);

/// Same as run_cell, but a failure becomes a single "error:<message>" row.
std::vector<ReportRow> run_cell_isolated(const Cell& cell, const PreparedDataset& data,
                                         const TaskSettings& settings);

/// Cartesian product task x entropy x dataset x level x seed; rows sorted by
/// task, entropy, dataset, level, seed.
std::vector<ReportRow> run_matrix(const RunConfig& cfg);

std::string format_value(double v);
std::string format_row(const ReportRow& row);
void write_csv(const std::vector<ReportRow>& rows, std::ostream& out);
void emit_csv(const std::vector<ReportRow>& rows, const std::string& path);

/// "dx,dy,theta,scale".
SimilarityTransform parse_transform(const std::string& text);
std::string format_transform(const SimilarityTransform& t);

}  // namespace entrobench
