#include "entrobench/harness.hpp"

#include "entrobench/clustering.hpp"
#include "entrobench/error.hpp"
#include "entrobench/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

namespace entrobench {

std::string task_name(Task t) {
    switch (t) {
        case Task::Threshold: return "threshold";
        case Task::Register: return "register";
        case Task::Cluster: return "cluster";
    }
    return "?";
}

Task parse_task(const std::string& name) {
    if (name == "threshold") return Task::Threshold;
    if (name == "register") return Task::Register;
    if (name == "cluster") return Task::Cluster;
    throw InvalidArgument("unknown task '" + name + "'");
}

EntropyChoice EntropyChoice::parse(const std::string& name, std::optional<double> alpha,
                                   std::optional<double> q) {
    if (alpha && name != "renyi") throw InvalidArgument("--alpha only applies to renyi entropy");
    if (q && name != "tsallis") throw InvalidArgument("--q only applies to tsallis entropy");
    EntropyChoice c{name, 1.0};
    if (name == "renyi") c.parameter = alpha.value_or(kDefaultRenyiAlpha);
    else if (name == "tsallis") c.parameter = q.value_or(kDefaultTsallisQ);
    else if (name != "shannon" && name != "cross")
        throw InvalidArgument("unknown entropy '" + name + "' (shannon, renyi, tsallis or cross)");
    if (!c.is_cross()) (void)c.kind();  // validates the parameter
    return c;
}

EntropyKind EntropyChoice::kind() const {
    if (is_cross()) throw InvalidArgument("cross-entropy is a thresholding criterion only");
    return EntropyKind::from_name(name, parameter);
}

Criterion EntropyChoice::criterion() const {
    if (is_cross()) return CrossEntropy{};
    return MaxEntropy{kind()};
}

std::string EntropyChoice::param_text() const {
    if (name == "shannon" || is_cross()) return "-";
    char buf[32];
    if (parameter == std::floor(parameter) && std::abs(parameter) < 1e15)
        std::snprintf(buf, sizeof buf, "%.1f", parameter);
    else
        std::snprintf(buf, sizeof buf, "%g", parameter);
    return buf;
}

void RunConfig::validate() const {
    if (tasks.empty()) throw InvalidArgument("config: no tasks");
    if (entropies.empty()) throw InvalidArgument("config: no entropy kinds");
    if (datasets.empty()) throw InvalidArgument("config: no datasets");
    if (seeds.empty()) throw InvalidArgument("config: seeds must be given explicitly");
    const auto has = [&](Task t) { return std::find(tasks.begin(), tasks.end(), t) != tasks.end(); };
    if (has(Task::Threshold) && levels.empty()) throw InvalidArgument("config: threshold needs levels");
    if (has(Task::Cluster) && cluster_k.empty()) throw InvalidArgument("config: cluster needs k");
    std::map<std::string, int> ids;
    for (const auto& d : datasets) {
        if (d.id.empty()) throw InvalidArgument("config: dataset without id");
        if (++ids[d.id] > 1) throw InvalidArgument("config: duplicate dataset '" + d.id + "'");
        if (!d.synthetic() && d.image_path.empty())
            throw InvalidArgument("config: dataset '" + d.id + "' needs spec or image");
    }
}

// --- config parsing ----------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_double(const std::string& s, const std::string& key) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw InvalidArgument("config: '" + key + "' expects a number, got '" + s + "'");
    }
}

std::uint64_t to_unsigned(const std::string& s, const std::string& key) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
        throw InvalidArgument("config: '" + key + "' expects a non-negative integer, got '" + s + "'");
    return std::stoull(s);
}

// "2,3,4" or "2-5"
std::vector<std::size_t> to_levels(const std::string& s, const std::string& key) {
    std::vector<std::size_t> out;
    for (const auto& item : split_list(s)) {
        const auto dash = item.find('-');
        if (dash != std::string::npos && dash > 0) {
            const auto lo = to_unsigned(trim(item.substr(0, dash)), key);
            const auto hi = to_unsigned(trim(item.substr(dash + 1)), key);
            if (hi < lo) throw InvalidArgument("config: empty range in '" + key + "'");
            for (auto v = lo; v <= hi; ++v) out.push_back(v);
        } else {
            out.push_back(to_unsigned(item, key));
        }
    }
    return out;
}

}  // namespace

SimilarityTransform parse_transform(const std::string& text) {
    const auto parts = split_list(text);
    if (parts.size() != 4) throw InvalidArgument("transform expects dx,dy,theta,scale");
    SimilarityTransform t{to_double(parts[0], "transform"), to_double(parts[1], "transform"),
                          to_double(parts[2], "transform"), to_double(parts[3], "transform")};
    if (!t.in_search_box()) throw InvalidArgument("transform scale outside [0.5, 2]");
    return t;
}

std::string format_transform(const SimilarityTransform& t) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g", t.dx, t.dy, t.theta, t.scale);
    return buf;
}

RunConfig parse_config(std::istream& in) {
    RunConfig cfg;
    std::optional<double> alpha, q;
    std::vector<std::string> entropy_names;
    enum class Section { None, Run, Dataset } section = Section::None;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line.erase(comment);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = "config line " + std::to_string(line_no) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') throw InvalidArgument(where + "unterminated section header");
            const auto name = trim(line.substr(1, line.size() - 2));
            if (name == "run") {
                section = Section::Run;
            } else if (name.rfind("dataset", 0) == 0) {
                const auto id = trim(name.substr(7));
                if (id.empty() || id.find(',') != std::string::npos)
                    throw InvalidArgument(where + "dataset sections need an id without commas");
                section = Section::Dataset;
                cfg.datasets.push_back({});
                cfg.datasets.back().id = id;
            } else {
                throw InvalidArgument(where + "unknown section [" + name + "]");
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw InvalidArgument(where + "expected key = value");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        auto& s = cfg.settings;
        if (section == Section::Run) {
            if (key == "tasks") {
                for (const auto& t : split_list(value)) cfg.tasks.push_back(parse_task(t));
            } else if (key == "entropies") {
                entropy_names = split_list(value);
            } else if (key == "alpha") {
                alpha = to_double(value, key);
            } else if (key == "q") {
                q = to_double(value, key);
            } else if (key == "levels") {
                cfg.levels = to_levels(value, key);
            } else if (key == "k") {
                cfg.cluster_k = to_levels(value, key);
            } else if (key == "seeds") {
                for (const auto& v : split_list(value)) cfg.seeds.push_back(to_unsigned(v, key));
            } else if (key == "bins") {
                s.mi_bins = to_unsigned(value, key);
            } else if (key == "threshold_budget") {
                s.threshold_budget = to_unsigned(value, key);
            } else if (key == "search") {
                if (value == "auto") s.search = SearchMode::Auto;
                else if (value == "exhaustive") s.search = SearchMode::Exhaustive;
                else if (value == "heuristic") s.search = SearchMode::Heuristic;
                else throw InvalidArgument(where + "search must be auto, exhaustive or heuristic");
            } else if (key == "register_budget") {
                s.register_budget = to_unsigned(value, key);
            } else if (key == "restarts") {
                s.register_restarts = to_unsigned(value, key);
            } else if (key == "cluster_restarts") {
                s.cluster_restarts = to_unsigned(value, key);
            } else if (key == "stride") {
                s.stride = to_unsigned(value, key);
            } else if (key == "sigma") {
                s.sigma = to_double(value, key);
            } else if (key == "truth_points") {
                s.truth_points = to_unsigned(value, key);
            } else if (key == "preprocess") {
                if (value == "median3") s.preprocess = Preprocess::Median3;
                else if (value == "none") s.preprocess = Preprocess::None;
                else throw InvalidArgument(where + "preprocess must be median3 or none");
            } else if (key == "metrics") {
                s.metrics = split_list(value);
            } else {
                throw InvalidArgument(where + "unknown run key '" + key + "'");
            }
        } else if (section == Section::Dataset) {
            auto& d = cfg.datasets.back();
            if (key == "spec") d.preset = value;
            else if (key == "width") d.width = to_unsigned(value, key);
            else if (key == "height") d.height = to_unsigned(value, key);
            else if (key == "noise") d.noise = to_double(value, key);
            else if (key == "scene_seed") d.scene_seed = to_unsigned(value, key);
            else if (key == "salt_pepper") d.salt_pepper = to_double(value, key);
            else if (key == "image") d.image_path = value;
            else if (key == "truth") d.truth_path = value;
            else if (key == "moving") d.moving_path = value;
            else if (key == "transform") d.transform = parse_transform(value);
            else throw InvalidArgument(where + "unknown dataset key '" + key + "'");
        } else {
            throw InvalidArgument(where + "key outside of a section");
        }
    }
    for (const auto& name : entropy_names) {
        cfg.entropies.push_back(EntropyChoice::parse(
            name, name == "renyi" ? alpha : std::nullopt, name == "tsallis" ? q : std::nullopt));
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InvalidArgument("cannot open config " + path);
    return parse_config(f);
}

// --- datasets ----------------------------------------------------------------

std::string runtime_category(double seconds) {
    if (seconds < 30.0) return "low";
    if (seconds <= 60.0) return "medium";
    return "high";
}

namespace {

// Noise for the second acquisition of a scene pair is drawn from a distinct stream.
constexpr std::uint64_t kMovingSeedOffset = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kSaltPepperSeedOffset = 0x632be59bd9b4e019ULL;

GrayImage preprocess(const GrayImage& img, Preprocess p) {
    return p == Preprocess::Median3 ? median_filter_3x3(img) : img;
}

}  // namespace

std::pair<GrayImage, GrayImage> registration_pair(const DatasetSpec& spec) {
    if (spec.synthetic()) {
        const auto scene = scene_preset(spec.preset, spec.width, spec.height, spec.noise);
        GrayImage ref = generate_scene(scene, spec.scene_seed).image;
        GrayImage moving = ref;
        if (spec.transform) {
            // moving(q) = scene(T(q)), so warping moving by T restores the reference frame
            const auto t = *spec.transform;
            const Point c = raster_center(spec.width, spec.height);
            moving = generate_scene(scene, spec.scene_seed + kMovingSeedOffset,
                                    [t, c](double x, double y) { return t.map({x, y}, c); })
                         .image;
        }
        if (spec.salt_pepper > 0.0) {
            ref = add_salt_pepper(ref, spec.salt_pepper, spec.scene_seed + kSaltPepperSeedOffset);
            moving = add_salt_pepper(moving, spec.salt_pepper,
                                     spec.scene_seed + 2 * kSaltPepperSeedOffset);
        }
        return {std::move(ref), std::move(moving)};
    }
    GrayImage ref = read_pgm(spec.image_path);
    GrayImage moving = spec.moving_path.empty() ? ref : read_pgm(spec.moving_path);
    return {std::move(ref), std::move(moving)};
}

PreparedDataset prepare_dataset(const DatasetSpec& spec, Preprocess p) {
    PreparedDataset out;
    out.id = spec.id;
    auto [ref, moving] = registration_pair(spec);
    if (spec.synthetic()) {
        const auto scene = scene_preset(spec.preset, spec.width, spec.height, spec.noise);
        out.truth = generate_scene(scene, spec.scene_seed).truth;
    } else if (!spec.truth_path.empty()) {
        out.truth = to_labels(read_pgm(spec.truth_path));
        if (!out.truth->same_shape(ref))
            throw InvalidArgument("dataset '" + spec.id + "': truth and image differ in size");
    }
    out.image = preprocess(ref, p);
    out.moving = preprocess(moving, p);
    if (spec.transform) out.transform = spec.transform;
    else if (spec.moving_path.empty()) out.transform = SimilarityTransform{};
    return out;
}

// --- cells -------------------------------------------------------------------

namespace {

struct RowSink {
    const Cell& cell;
    const PreparedDataset& data;
    const TaskSettings& settings;
    std::vector<ReportRow> rows;

    void add(const std::string& metric, double value) {
        if (!settings.metrics.empty() &&
            std::find(settings.metrics.begin(), settings.metrics.end(), metric) == settings.metrics.end())
            return;
        ReportRow r;
        r.task = task_name(cell.task);
        r.entropy = cell.entropy.name;
        r.param = cell.entropy.param_text();
        r.dataset = data.id;
        r.level = cell.task == Task::Register ? "-" : std::to_string(cell.level);
        r.metric = metric;
        r.value = value;
        r.seed = cell.seed;
        rows.push_back(std::move(r));
    }
};

void add_accuracy(RowSink& sink, const LabelMap& pred, const PreparedDataset& data,
                  const TaskSettings& settings, std::uint64_t seed) {
    if (!data.truth) return;
    const LabelMap aligned = align_labels(pred, *data.truth);
    std::vector<std::size_t> points;
    if (settings.truth_points > 0) points = sample_truth_points(*data.truth, settings.truth_points, seed);
    const auto cm = confusion(aligned, *data.truth, points);
    sink.add("kappa", kappa(cm));
    sink.add("overall_accuracy", overall_accuracy(cm));
}

}  // namespace

std::vector<ReportRow> run_cell(const Cell& cell, const PreparedDataset& data,
                                const TaskSettings& settings) {
    RowSink sink{cell, data, settings, {}};
    const auto started = std::chrono::steady_clock::now();
    switch (cell.task) {
        case Task::Threshold: {
            const auto criterion = cell.entropy.criterion();
            const auto h = histogram(data.image, 256);
            const bool exhaustive =
                settings.search == SearchMode::Exhaustive ||
                (settings.search == SearchMode::Auto && cell.level <= kMaxExhaustiveLevel);
            const auto found = exhaustive
                                   ? exhaustive_search(h, cell.level, criterion)
                                   : heuristic_search(h, cell.level, criterion, cell.seed,
                                                      settings.threshold_budget);
            const auto labels = apply_thresholds(data.image, found.thresholds);
            add_accuracy(sink, labels, data, settings, cell.seed);
            sink.add("criterion", found.value);
            break;
        }
        case Task::Register: {
            RegistrationConfig rc;
            rc.bins = settings.mi_bins;
            rc.budget = settings.register_budget;
            rc.restarts = settings.register_restarts;
            rc.seed = cell.seed;
            rc.truth = data.transform;
            const auto res = register_images(data.image, data.moving, cell.entropy.kind(), rc);
            sink.add("nccc", std::max(0.0, res.nccc));
            sink.add("nccc_raw", res.nccc);
            if (res.rmse) sink.add("rmse", *res.rmse);
            sink.add("mi", res.mi_final);
            sink.add("evaluations", static_cast<double>(res.evaluations));
            break;
        }
        case Task::Cluster: {
            const auto kind = cell.entropy.kind();
            const GrayImage bands[] = {data.image};
            const auto features = extract_features(bands, settings.stride);
            const double sigma = settings.sigma > 0.0 ? settings.sigma : silverman_sigma(features);
            const auto res = cluster(features, cell.level, sigma, cell.seed, settings.cluster_restarts);
            const auto labels = assignment_to_labelmap(res.assignment, features);
            add_accuracy(sink, labels, data, settings, cell.seed);
            sink.add("cef", res.cef);
            sink.add("score", within_class_entropy(data.image, labels, kind));
            break;
        }
    }
    const double runtime =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    for (auto& r : sink.rows) {
        r.runtime_s = runtime;
        r.runtime_cat = runtime_category(runtime);
    }
    return std::move(sink.rows);
}

std::vector<ReportRow> run_cell_isolated(const Cell& cell, const PreparedDataset& data,
                                         const TaskSettings& settings) {
    try {
        return run_cell(cell, data, settings);
    } catch (const std::exception& e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), ',', ';');
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        ReportRow r;
        r.task = task_name(cell.task);
        r.entropy = cell.entropy.name;
        r.param = cell.entropy.param_text();
        r.dataset = data.id;
        r.level = cell.task == Task::Register ? "-" : std::to_string(cell.level);
        r.metric = "error:" + msg;
        r.value = std::nan("");
        r.runtime_cat = runtime_category(0.0);
        r.seed = cell.seed;
        return {r};
    }
}

std::vector<ReportRow> run_matrix(const RunConfig& cfg) {
    cfg.validate();
    std::vector<ReportRow> rows;
    for (const auto& spec : cfg.datasets) {
        PreparedDataset data;
        try {
            data = prepare_dataset(spec, cfg.settings.preprocess);
        } catch (const std::exception& e) {
            std::string msg = e.what();
            std::replace(msg.begin(), msg.end(), ',', ';');
            ReportRow r{"-", "-", "-", spec.id, "-", "error:" + msg, std::nan(""), 0.0, "low", 0};
            rows.push_back(r);
            continue;
        }
        for (const auto task : cfg.tasks) {
            std::vector<std::size_t> levels{0};
            if (task == Task::Threshold) levels = cfg.levels;
            if (task == Task::Cluster) levels = cfg.cluster_k;
            for (const auto& entropy : cfg.entropies) {
                // cross-entropy is a thresholding criterion; other tasks have no such column
                if (entropy.is_cross() && task != Task::Threshold) continue;
                for (const auto level : levels)
                    for (const auto seed : cfg.seeds) {
                        auto cell_rows =
                            run_cell_isolated({task, entropy, level, seed}, data, cfg.settings);
                        rows.insert(rows.end(), cell_rows.begin(), cell_rows.end());
                    }
            }
        }
    }
    auto level_key = [](const std::string& l) { return l == "-" ? -1L : std::stol(l); };
    std::stable_sort(rows.begin(), rows.end(), [&](const ReportRow& a, const ReportRow& b) {
        return std::make_tuple(a.task, a.entropy, a.param, a.dataset, level_key(a.level), a.seed) <
               std::make_tuple(b.task, b.entropy, b.param, b.dataset, level_key(b.level), b.seed);
    });
    return rows;
}

// --- CSV -----------------------------------------------------------------------

std::string format_value(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%#.6g", v == 0.0 ? 0.0 : v);  // no "-0"
    return buf;
}

std::string format_row(const ReportRow& r) {
    std::string out;
    out += r.task + ',' + r.entropy + ',' + r.param + ',' + r.dataset + ',' + r.level + ',' + r.metric +
           ',' + format_value(r.value) + ',' + format_value(r.runtime_s) + ',' + r.runtime_cat + ',' +
           std::to_string(r.seed);
    return out;
}

void write_csv(const std::vector<ReportRow>& rows, std::ostream& out) {
    out << kCsvHeader << '\n';
    for (const auto& r : rows) out << format_row(r) << '\n';
}

void emit_csv(const std::vector<ReportRow>& rows, const std::string& path) {
    if (rows.empty()) throw InvalidArgument("no rows to write");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InvalidArgument("cannot write " + path);
    write_csv(rows, f);
    if (!f) throw InvalidArgument("write failed for " + path);
}

}  // namespace entrobench
