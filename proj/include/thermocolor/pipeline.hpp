#pragma once

// Batch commands behind the command-line tool: dataset preparation,
// training, colorization, fusion, evaluation and registration benchmarks.

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "thermocolor/colorizer.hpp"
#include "thermocolor/errors.hpp"
#include "thermocolor/fileio.hpp"
#include "thermocolor/fusion.hpp"
#include "thermocolor/homography.hpp"
#include "thermocolor/image.hpp"
#include "thermocolor/metrics.hpp"
#include "thermocolor/registration.hpp"
#include "thermocolor/synthetic.hpp"

namespace thermocolor::pipeline {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration

struct RegistrationSettings {
    Algorithm algorithm = Algorithm::Trimmed;
    std::size_t trim = 30;
    std::optional<double> min_mi;  // nats; pairs scoring below are rejected
};

struct Paths {
    fs::path raw = "raw";
    fs::path prepared = "prepared";
    fs::path checkpoint = "checkpoints/model.ckpt";
    fs::path reports = "reports";
};

struct PipelineConfig {
    std::map<std::string, ImagerProfile> imagers{{"sonel", imagers::sonel()}, {"flir", imagers::flir()}};
    RegistrationSettings registration;
    ModelSpec model;
    TrainingConfig training;
    Paths paths;
    std::uint64_t seed = 0;
    unsigned threads = 0;  // 0: all hardware threads

    const ImagerProfile& imager(const std::string& name) const {
        const auto it = imagers.find(name);
        if (it == imagers.end()) throw Error("unknown imager profile '" + name + "'");
        return it->second;
    }
};

namespace detail {

inline std::string_view trim_ws(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
    T out{};
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end)
        throw UsageError("invalid value '" + std::string(value) + "' for '" + std::string(key) + "'");
    return out;
}

inline std::size_t parse_count(std::string_view key, std::string_view value, std::size_t min = 0) {
    const auto v = parse_number<std::size_t>(key, value);
    if (v < min) throw UsageError("'" + std::string(key) + "' must be >= " + std::to_string(min));
    return v;
}

inline double parse_positive(std::string_view key, std::string_view value) {
    const auto v = parse_number<double>(key, value);
    if (!(v > 0.0)) throw UsageError("'" + std::string(key) + "' must be positive");
    return v;
}

inline std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

} // namespace detail

/// Sets one dotted configuration key. Unknown keys are usage errors.
inline void set_option(PipelineConfig& cfg, std::string_view key, std::string_view value) {
    using namespace detail;
    if (key.starts_with("imager.")) {
        const auto rest = key.substr(7);
        const auto dot = rest.rfind('.');
        if (dot == std::string_view::npos || dot == 0) throw UsageError("malformed imager key '" + std::string(key) + "'");
        const std::string name(rest.substr(0, dot));
        const auto field = rest.substr(dot + 1);
        auto& p = cfg.imagers[name];
        p.name = name;
        if (field == "scale") p.scale_x = p.scale_y = parse_positive(key, value);
        else if (field == "scale_x") p.scale_x = parse_positive(key, value);
        else if (field == "scale_y") p.scale_y = parse_positive(key, value);
        else if (field == "thermal_width") p.thermal_width = parse_count(key, value);
        else if (field == "thermal_height") p.thermal_height = parse_count(key, value);
        else throw UsageError("unknown imager field '" + std::string(field) + "'");
        return;
    }
    if (key == "registration.algorithm") {
        try {
            cfg.registration.algorithm = parse_algorithm(value);
        } catch (const Error& e) {
            throw UsageError(e.what());
        }
    } else if (key == "registration.trim") cfg.registration.trim = parse_count(key, value);
    else if (key == "registration.min_mi") {
        if (value.empty() || value == "none") cfg.registration.min_mi.reset();
        else cfg.registration.min_mi = parse_number<double>(key, value);
    } else if (key == "model.variant") {
        try {
            cfg.model.variant = parse_variant(value);
        } catch (const Error& e) {
            throw UsageError(e.what());
        }
    } else if (key == "model.input_size") cfg.model.input_size = parse_count(key, value, 2);
    else if (key == "model.width_divisor") cfg.model.width_divisor = parse_count(key, value, 1);
    else if (key == "training.epochs") cfg.training.epochs = parse_count(key, value, 1);
    else if (key == "training.batch_size") cfg.training.batch_size = parse_count(key, value, 1);
    else if (key == "training.learning_rate") cfg.training.optimizer.lr = parse_number<double>(key, value);
    else if (key == "training.beta1") cfg.training.optimizer.beta1 = parse_number<double>(key, value);
    else if (key == "training.beta2") cfg.training.optimizer.beta2 = parse_number<double>(key, value);
    else if (key == "training.dropout_rate") cfg.training.dropout_rate = parse_number<double>(key, value);
    else if (key == "paths.raw") cfg.paths.raw = std::string(value);
    else if (key == "paths.prepared") cfg.paths.prepared = std::string(value);
    else if (key == "paths.checkpoint") cfg.paths.checkpoint = std::string(value);
    else if (key == "paths.reports") cfg.paths.reports = std::string(value);
    else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "threads") cfg.threads = parse_number<unsigned>(key, value);
    else throw UsageError("unknown configuration key '" + std::string(key) + "'");
}

/// `key = value` lines; `#` starts a comment line.
inline void apply_config_text(PipelineConfig& cfg, std::string_view text, const std::string& origin = "config") {
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const auto line = detail::trim_ws(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw UsageError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
        try {
            set_option(cfg, detail::trim_ws(line.substr(0, eq)), detail::trim_ws(line.substr(eq + 1)));
        } catch (const UsageError& e) {
            throw UsageError(origin + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

inline void apply_config_file(PipelineConfig& cfg, const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    apply_config_text(cfg, ss.str(), path.string());
}

// ---------------------------------------------------------------------------
// Dataset layout

inline constexpr std::string_view thermal_suffix = "_thermal.pgm";
inline constexpr std::string_view optical_suffix = "_optical.ppm";
inline constexpr std::string_view manifest_name = "manifest.csv";
inline constexpr std::string_view rejects_name = "rejects.csv";

struct RawPair {
    std::string pair_id;
    std::string imager;
    fs::path thermal;  // relative to the raw root
    fs::path optical;
};

struct Reject {
    std::string pair_id;
    std::string imager;
    std::string reason;
};

/// One prepared pair as listed in the manifest.
struct PairRecord {
    std::string pair_id;
    std::string imager;
    std::string thermal_path;  // relative to the raw root
    std::string optical_path;
    std::string prepared_thermal;  // relative to the prepared directory
    std::string prepared_optical;
    Algorithm algorithm = Algorithm::Trimmed;
    std::ptrdiff_t offset_row = 0;  // full thermal frame inside the rescaled optical image
    std::ptrdiff_t offset_col = 0;
    double mi_nats = 0.0;
    std::size_t candidates = 0;
};

inline constexpr std::string_view manifest_header =
    "pair_id,imager,thermal,optical,prepared_thermal,prepared_optical,algorithm,offset_row,offset_col,mi_nats,"
    "candidates";

inline std::string manifest_csv(const std::vector<PairRecord>& rows) {
    std::ostringstream o;
    o << manifest_header << '\n';
    for (const auto& r : rows)
        o << r.pair_id << ',' << r.imager << ',' << r.thermal_path << ',' << r.optical_path << ','
          << r.prepared_thermal << ',' << r.prepared_optical << ',' << to_string(r.algorithm) << ',' << r.offset_row
          << ',' << r.offset_col << ',' << detail::format_double(r.mi_nats) << ',' << r.candidates << '\n';
    return o.str();
}

inline std::string rejects_csv(const std::vector<Reject>& rows) {
    std::ostringstream o;
    o << "pair_id,imager,reason\n";
    for (const auto& r : rows) {
        std::string reason = r.reason;
        std::replace(reason.begin(), reason.end(), ',', ';');
        std::replace(reason.begin(), reason.end(), '\n', ' ');
        o << r.pair_id << ',' << r.imager << ',' << reason << '\n';
    }
    return o.str();
}

inline std::vector<PairRecord> parse_manifest(const fs::path& path) {
    const auto bytes = fileio::read_bytes(path);
    std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    std::vector<PairRecord> rows;
    bool header = true;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const auto line = detail::trim_ws(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.empty()) continue;
        if (header) {
            if (line != manifest_header) throw FormatError(path.string() + ": unexpected manifest header");
            header = false;
            continue;
        }
        std::vector<std::string_view> f;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i)
            if (i == line.size() || line[i] == ',') {
                f.push_back(line.substr(start, i - start));
                start = i + 1;
            }
        if (f.size() != 11) throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected 11 fields");
        try {
            PairRecord r;
            r.pair_id = f[0];
            r.imager = f[1];
            r.thermal_path = f[2];
            r.optical_path = f[3];
            r.prepared_thermal = f[4];
            r.prepared_optical = f[5];
            r.algorithm = parse_algorithm(f[6]);
            r.offset_row = detail::parse_number<std::ptrdiff_t>("offset_row", f[7]);
            r.offset_col = detail::parse_number<std::ptrdiff_t>("offset_col", f[8]);
            r.mi_nats = detail::parse_number<double>("mi_nats", f[9]);
            r.candidates = detail::parse_number<std::size_t>("candidates", f[10]);
            rows.push_back(std::move(r));
        } catch (const Error& e) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (header) throw FormatError(path.string() + ": empty manifest");
    return rows;
}

namespace detail {

inline bool ends_with(const std::string& s, std::string_view suffix) {
    return s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

/// Pair ids found in one directory: (id -> has thermal, has optical).
inline std::map<std::string, std::pair<bool, bool>> scan_pairs(const fs::path& dir) {
    std::map<std::string, std::pair<bool, bool>> ids;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (ends_with(name, thermal_suffix)) ids[name.substr(0, name.size() - thermal_suffix.size())].first = true;
        else if (ends_with(name, optical_suffix))
            ids[name.substr(0, name.size() - optical_suffix.size())].second = true;
    }
    return ids;
}

} // namespace detail

/// Every `<imager>/<id>_thermal.pgm` + `<id>_optical.ppm` under `root`, in
/// (imager, id) order. Half-present pairs are reported as rejects.
inline std::vector<RawPair> discover_raw_pairs(const fs::path& root, const PipelineConfig& cfg,
                                               std::vector<Reject>& rejects) {
    if (!fs::is_directory(root)) throw IoError("raw directory " + root.string() + " does not exist");
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory()) dirs.push_back(entry.path());
    std::sort(dirs.begin(), dirs.end());
    std::vector<RawPair> pairs;
    for (const auto& dir : dirs) {
        const std::string imager = dir.filename().string();
        const auto ids = detail::scan_pairs(dir);
        if (ids.empty()) continue;
        cfg.imager(imager);
        for (const auto& [id, has] : ids) {
            if (!has.first) rejects.push_back({id, imager, "missing thermal image"});
            else if (!has.second) rejects.push_back({id, imager, "missing optical image"});
            else
                pairs.push_back({id, imager, fs::path(imager) / (id + std::string(thermal_suffix)),
                                 fs::path(imager) / (id + std::string(optical_suffix))});
        }
    }
    return pairs;
}

// ---------------------------------------------------------------------------
// prepare

struct PreparedPair {
    PairRecord record;
    GrayImage thermal;
    RgbImage optical;
};

/// Rescale, grayscale, register, crop and resize one raw pair.
inline PreparedPair prepare_pair(const PipelineConfig& cfg, const RawPair& raw) {
    const auto& profile = cfg.imager(raw.imager);
    const GrayImage thermal = load_pgm(cfg.paths.raw / raw.thermal);
    const RgbImage optical_raw = load_ppm(cfg.paths.raw / raw.optical);
    if ((profile.thermal_width && thermal.width() != profile.thermal_width) ||
        (profile.thermal_height && thermal.height() != profile.thermal_height))
        throw RegistrationError("thermal image is " + std::to_string(thermal.width()) + "x" +
                                std::to_string(thermal.height()) + ", imager '" + profile.name + "' expects " +
                                std::to_string(profile.thermal_width) + "x" + std::to_string(profile.thermal_height));
    const RgbImage optical = rescale_optical(optical_raw, profile.scale_x, profile.scale_y);
    const GrayImage optical_gray = rgb_to_gray(optical);
    const auto result = register_pair(cfg.registration.algorithm, thermal, optical_gray, cfg.registration.trim);
    if (cfg.registration.min_mi && result.mi_score < *cfg.registration.min_mi)
        throw RegistrationError("mutual information " + detail::format_double(result.mi_score) +
                                " below threshold " + detail::format_double(*cfg.registration.min_mi));
    const RgbImage aligned = crop_registered(optical, result, thermal.height(), thermal.width(), result.trim);

    const std::size_t n = cfg.model.input_size;
    PreparedPair p;
    p.thermal = resize_bilinear(thermal, n, n);
    p.optical = resize_bilinear(aligned, n, n);
    auto& r = p.record;
    r.pair_id = raw.pair_id;
    r.imager = raw.imager;
    r.thermal_path = raw.thermal.generic_string();
    r.optical_path = raw.optical.generic_string();
    r.prepared_thermal = raw.pair_id + std::string(thermal_suffix);
    r.prepared_optical = raw.pair_id + std::string(optical_suffix);
    r.algorithm = result.algorithm;
    r.offset_row = result.frame_x();
    r.offset_col = result.frame_y();
    r.mi_nats = result.mi_score;
    r.candidates = result.candidates_evaluated;
    return p;
}

struct PrepareSummary {
    std::vector<PairRecord> records;
    std::vector<Reject> rejects;
};

/// Prepares every raw pair, writing the prepared images, `manifest.csv`
/// and `rejects.csv`. Per-pair failures become rejects.
inline PrepareSummary cmd_prepare(const PipelineConfig& cfg, std::ostream* log = nullptr) {
    PrepareSummary s;
    const auto pairs = discover_raw_pairs(cfg.paths.raw, cfg, s.rejects);
    if (pairs.empty() && s.rejects.empty()) throw IoError("no raw pairs under " + cfg.paths.raw.string());
    fs::create_directories(cfg.paths.prepared);
    std::set<std::string> seen;
    for (const auto& raw : pairs) {
        if (!seen.insert(raw.pair_id).second) {
            s.rejects.push_back({raw.pair_id, raw.imager, "duplicate pair id"});
            continue;
        }
        try {
            auto p = prepare_pair(cfg, raw);
            save_pgm(p.thermal, cfg.paths.prepared / p.record.prepared_thermal);
            save_ppm(p.optical, cfg.paths.prepared / p.record.prepared_optical);
            if (log)
                *log << raw.imager << '/' << raw.pair_id << ": offset (" << p.record.offset_row << ", "
                     << p.record.offset_col << "), MI " << p.record.mi_nats << " nats\n";
            s.records.push_back(std::move(p.record));
        } catch (const IoError&) {
            throw;
        } catch (const Error& e) {
            if (log) *log << raw.imager << '/' << raw.pair_id << ": rejected: " << e.what() << '\n';
            s.rejects.push_back({raw.pair_id, raw.imager, e.what()});
        }
    }
    fileio::write_atomic(cfg.paths.prepared / rejects_name, rejects_csv(s.rejects));
    fileio::write_atomic(cfg.paths.prepared / manifest_name, manifest_csv(s.records));
    return s;
}

// ---------------------------------------------------------------------------
// train

inline std::string loss_trace_csv(const std::vector<EpochStats>& trace) {
    std::ostringstream o;
    o << "epoch,mean_loss,wall_seconds\n";
    for (const auto& e : trace)
        o << e.epoch << ',' << detail::format_double(e.mean_loss) << ',' << detail::format_double(e.wall_seconds)
          << '\n';
    return o.str();
}

inline std::vector<TrainingPair> load_prepared(const PipelineConfig& cfg) {
    const auto records = parse_manifest(cfg.paths.prepared / manifest_name);
    if (records.empty()) throw Error("manifest lists no prepared pairs");
    std::vector<TrainingPair> data;
    for (const auto& r : records)
        data.push_back({load_pgm(cfg.paths.prepared / r.prepared_thermal),
                        load_ppm(cfg.paths.prepared / r.prepared_optical)});
    return data;
}

struct TrainSummary {
    TrainResult result;
    fs::path checkpoint;
    fs::path loss_trace;
};

/// Trains the configured variant on the prepared manifest; writes the
/// checkpoint and `<reports>/loss.csv`.
inline TrainSummary cmd_train(const PipelineConfig& cfg, std::ostream* log = nullptr) {
    const auto data = load_prepared(cfg);
    TrainingConfig tc = cfg.training;
    tc.seed = cfg.seed;
    Model model(cfg.model, cfg.seed);
    if (log)
        *log << "training " << to_string(cfg.model.variant) << " at " << cfg.model.input_size << "px on "
             << data.size() << " pairs, " << model.state_value_count() << " values\n";
    TrainSummary s;
    s.result = train(model, tc, data, [&](const EpochStats& e) {
        if (log) *log << "epoch " << e.epoch << " loss " << e.mean_loss << " (" << e.wall_seconds << " s)\n";
    });
    s.checkpoint = cfg.paths.checkpoint;
    s.loss_trace = cfg.paths.reports / "loss.csv";
    if (s.checkpoint.has_parent_path()) fs::create_directories(s.checkpoint.parent_path());
    fs::create_directories(cfg.paths.reports);
    save_checkpoint(make_checkpoint(model), s.checkpoint);
    fileio::write_atomic(s.loss_trace, loss_trace_csv(s.result.trace));
    return s;
}

// ---------------------------------------------------------------------------
// colorize / fuse

struct ColorizeOutputs {
    fs::path mask;
    fs::path fused;
};

/// Predicts the mask for one thermal image and fuses it; writes
/// `<stem>_mask.ppm` and `<stem>_fused.ppm` into `out_dir`.
inline ColorizeOutputs cmd_colorize(const PipelineConfig& cfg, const fs::path& thermal_path,
                                    const fs::path& checkpoint_path, const fs::path& out_dir) {
    const auto ckpt = load_checkpoint(checkpoint_path);
    Model model(cfg.model, 0);
    restore_checkpoint(model, ckpt);
    const GrayImage thermal = load_pgm(thermal_path);
    const RgbImage mask = predict_mask(model, thermal);
    const RgbImage fused = fuse(mask, thermal);
    fs::create_directories(out_dir);
    const std::string stem = thermal_path.stem().string();
    ColorizeOutputs out{out_dir / (stem + "_mask.ppm"), out_dir / (stem + "_fused.ppm")};
    save_ppm(mask, out.mask);
    save_ppm(fused, out.fused);
    return out;
}

inline void cmd_fuse(const fs::path& mask_path, const fs::path& thermal_path, const fs::path& out_path) {
    const RgbImage mask = load_ppm(mask_path);
    const GrayImage thermal = load_pgm(thermal_path);
    save_ppm(fuse(mask, thermal), out_path);
}

// ---------------------------------------------------------------------------
// evaluate

/// Scores every `<name>.ppm` of `predictions` against the same name in
/// `references`; writes the CSV report to `out_csv`.
inline ScoreReport cmd_evaluate(const fs::path& predictions, const fs::path& references, const fs::path& out_csv,
                                const SsimOptions& opt = {}) {
    const auto list = [](const fs::path& dir) {
        if (!fs::is_directory(dir)) throw IoError("directory " + dir.string() + " does not exist");
        std::set<std::string> names;
        for (const auto& e : fs::directory_iterator(dir))
            if (e.is_regular_file() && e.path().extension() == ".ppm") names.insert(e.path().filename().string());
        return names;
    };
    const auto pred = list(predictions), ref = list(references);
    std::vector<std::string> unmatched;
    for (const auto& n : pred)
        if (!ref.count(n)) unmatched.push_back(n);
    for (const auto& n : ref)
        if (!pred.count(n)) unmatched.push_back(n);
    if (!unmatched.empty()) {
        std::string msg = "unmatched files:";
        for (const auto& n : unmatched) msg += " " + n;
        throw Error(msg);
    }
    if (pred.empty()) throw Error("no .ppm files to evaluate");
    std::vector<ImageScores> rows;
    for (const auto& n : pred)
        rows.push_back(
            score_pair(fs::path(n).stem().string(), load_ppm(predictions / n), load_ppm(references / n), opt));
    auto report = evaluate_scores(std::move(rows));
    if (out_csv.has_parent_path()) fs::create_directories(out_csv.parent_path());
    fileio::write_atomic(out_csv, report.to_csv());
    return report;
}

// ---------------------------------------------------------------------------
// bench

/// Runs the three searches on every `<id>_thermal.pgm` / `<id>_optical.ppm`
/// in `dir`. When `imager` is given, optical images are rescaled by its
/// profile first.
inline BenchReport cmd_bench(const PipelineConfig& cfg, const fs::path& dir, const std::optional<std::string>& imager,
                             const fs::path& out_csv) {
    if (!fs::is_directory(dir)) throw IoError("directory " + dir.string() + " does not exist");
    const ImagerProfile* profile = imager ? &cfg.imager(*imager) : nullptr;
    std::vector<BenchPair> pairs;
    for (const auto& [id, has] : detail::scan_pairs(dir)) {
        if (!has.first || !has.second) continue;
        RgbImage optical = load_ppm(dir / (id + std::string(optical_suffix)));
        if (profile) optical = rescale_optical(optical, profile->scale_x, profile->scale_y);
        pairs.push_back({id, load_pgm(dir / (id + std::string(thermal_suffix))), rgb_to_gray(optical)});
    }
    if (pairs.empty()) throw Error("no complete pairs in " + dir.string());
    auto report = bench_registration(pairs, cfg.registration.trim);
    if (out_csv.has_parent_path()) fs::create_directories(out_csv.parent_path());
    fileio::write_atomic(out_csv, report.to_csv());
    return report;
}

// ---------------------------------------------------------------------------
// synth

struct SyntheticRawPair {
    GrayImage thermal;
    RgbImage optical;  // raw resolution
    std::size_t row = 0, col = 0;  // thermal frame in the rescaled optical image
};

/// Raw optical scene at camera resolution and a thermal view cut from its
/// rescaled version at a random offset inside the central search window.
/// The thermal view is the inverted luma, so intensities differ while
/// structure is shared.
inline SyntheticRawPair make_raw_pair(const ImagerProfile& profile, std::uint64_t seed, std::size_t raw_width = 0,
                                      std::size_t raw_height = 0) {
    const std::size_t tw = profile.thermal_width, th = profile.thermal_height;
    if (tw == 0 || th == 0) throw UsageError("imager '" + profile.name + "' has no thermal frame size");
    if (raw_width == 0) raw_width = round_half_up(1.25 * static_cast<double>(tw) / profile.scale_x);
    if (raw_height == 0) raw_height = round_half_up(1.25 * static_cast<double>(th) / profile.scale_y);
    const double stretch = 1.0 / std::min(profile.scale_x, profile.scale_y);
    const GrayImage scene = synthetic::smooth_field(raw_width, raw_height, seed, 256, 8, 80.0 * stretch,
                                                    400.0 * stretch);
    SyntheticRawPair p;
    p.optical = synthetic::colorize(scene);
    const RgbImage rescaled = rescale_optical(p.optical, profile.scale_x, profile.scale_y);
    if (rescaled.width() < tw || rescaled.height() < th)
        throw UsageError("raw optical size too small for imager '" + profile.name + "'");
    std::mt19937_64 rng(seed ^ 0xD1B54A32D192ED03ULL);
    const auto pick = [&](std::size_t d) {
        const auto [lo, hi] = thermocolor::detail::central_window(d);
        return std::uniform_int_distribution<std::size_t>(lo, hi - 1)(rng);
    };
    p.row = pick(rescaled.height() - th);
    p.col = pick(rescaled.width() - tw);
    p.thermal = rgb_to_gray(crop(rescaled, p.row, p.col, th, tw));
    for (auto& v : p.thermal.data()) v = static_cast<std::uint8_t>(255 - v);
    return p;
}

/// Writes `count` synthetic raw pairs under `<root>/<imager>/`; returns the
/// planted offsets in id order.
inline std::vector<std::pair<std::size_t, std::size_t>> cmd_synth(const PipelineConfig& cfg, const std::string& imager,
                                                                  std::size_t count, const fs::path& root) {
    const auto& profile = cfg.imager(imager);
    const fs::path dir = root / imager;
    fs::create_directories(dir);
    std::vector<std::pair<std::size_t, std::size_t>> offsets;
    for (std::size_t i = 0; i < count; ++i) {
        const auto p = make_raw_pair(profile, cfg.seed * 1000003ULL + i);
        char id[32];
        std::snprintf(id, sizeof id, "%04zu", i + 1);
        save_pgm(p.thermal, dir / (std::string(id) + std::string(thermal_suffix)));
        save_ppm(p.optical, dir / (std::string(id) + std::string(optical_suffix)));
        offsets.emplace_back(p.row, p.col);
    }
    return offsets;
}

} // namespace thermocolor::pipeline
