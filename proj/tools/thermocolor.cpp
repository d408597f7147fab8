// Command-line front end: prepare, train, colorize, fuse, evaluate, bench, synth.

#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "thermocolor/parallel.hpp"
#include "thermocolor/pipeline.hpp"

namespace {

namespace tc = thermocolor;
namespace pl = thermocolor::pipeline;
namespace fs = std::filesystem;

enum ExitCode { ok = 0, usage = 1, data = 2, numerical = 3 };

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::vector<std::string> overrides;  // key=value
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config, "key=value configuration file");
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_option("--threads", o.threads, "worker threads (1 = deterministic single-threaded mode)");
    cmd->add_option("--set", o.overrides, "override a configuration key (key=value)");
}

/// Defaults, then the config file, then --set, then dedicated flags.
pl::PipelineConfig resolve(const CommonOptions& o, const std::vector<std::pair<std::string, std::string>>& flags) {
    pl::PipelineConfig cfg;
    if (!o.config.empty()) pl::apply_config_file(cfg, o.config);
    for (const auto& kv : o.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw tc::UsageError("--set expects key=value, got '" + kv + "'");
        pl::set_option(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    for (const auto& [k, v] : flags)
        if (!v.empty()) pl::set_option(cfg, k, v);
    if (o.seed) cfg.seed = *o.seed;
    if (o.threads) cfg.threads = *o.threads;
    tc::parallel::set_thread_count(cfg.threads);
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Thermal image colorization pipeline"};
    app.require_subcommand(1);

    CommonOptions common;
    std::string raw, prepared, algorithm, trim, variant, epochs, batch, input_size, divisor, checkpoint, reports;
    std::string thermal_path, mask_path, out_path, out_dir, pred_dir, ref_dir, pairs_dir, imager;
    std::size_t count = 10;

    auto* prepare = app.add_subcommand("prepare", "rescale, register, crop and resize raw pairs");
    add_common(prepare, common);
    prepare->add_option("--raw", raw, "raw dataset root (<imager>/<id>_thermal.pgm, <id>_optical.ppm)");
    prepare->add_option("--prepared", prepared, "output directory");
    prepare->add_option("--algorithm", algorithm, "exhaustive | reduced | trimmed");
    prepare->add_option("--trim", trim, "border trimmed before the trimmed search");
    prepare->add_option("--input-size", input_size, "prepared image size");

    auto* train = app.add_subcommand("train", "train a colorizer on the prepared manifest");
    add_common(train, common);
    train->add_option("--prepared", prepared, "prepared dataset directory");
    train->add_option("--variant", variant, "proposed | two-intermediate | skip | two-intermediate-skip | down-to-1x1");
    train->add_option("--epochs", epochs, "number of epochs");
    train->add_option("--batch-size", batch, "minibatch size");
    train->add_option("--input-size", input_size, "network input size");
    train->add_option("--width-divisor", divisor, "divide block depths for a reduced clone");
    train->add_option("--checkpoint", checkpoint, "checkpoint output path");
    train->add_option("--reports", reports, "directory for loss.csv");

    auto* colorize = app.add_subcommand("colorize", "predict a color mask and fuse it with the thermal image");
    add_common(colorize, common);
    colorize->add_option("--thermal", thermal_path, "thermal PGM")->required();
    colorize->add_option("--checkpoint", checkpoint, "trained checkpoint");
    colorize->add_option("--variant", variant, "variant the checkpoint was trained as");
    colorize->add_option("--input-size", input_size, "network input size");
    colorize->add_option("--width-divisor", divisor, "width divisor of the checkpoint");
    colorize->add_option("--out-dir", out_dir, "directory for <stem>_mask.ppm and <stem>_fused.ppm")->required();

    auto* fuse = app.add_subcommand("fuse", "fuse an existing mask with a thermal image");
    add_common(fuse, common);
    fuse->add_option("--mask", mask_path, "mask PPM")->required();
    fuse->add_option("--thermal", thermal_path, "thermal PGM")->required();
    fuse->add_option("--out", out_path, "fused PPM")->required();

    auto* evaluate = app.add_subcommand("evaluate", "score predictions against references");
    add_common(evaluate, common);
    evaluate->add_option("--predictions", pred_dir, "directory of predicted PPMs")->required();
    evaluate->add_option("--references", ref_dir, "directory of reference PPMs")->required();
    evaluate->add_option("--out", out_path, "CSV report path");

    auto* bench = app.add_subcommand("bench", "time the three registration searches");
    add_common(bench, common);
    bench->add_option("--pairs", pairs_dir, "directory of <id>_thermal.pgm / <id>_optical.ppm")->required();
    bench->add_option("--imager", imager, "rescale optical images by this profile first");
    bench->add_option("--trim", trim, "border trimmed before the trimmed search");
    bench->add_option("--out", out_path, "CSV report path");

    auto* synth = app.add_subcommand("synth", "write synthetic raw pairs with planted offsets");
    add_common(synth, common);
    synth->add_option("--imager", imager, "imager profile")->required();
    synth->add_option("--count", count, "number of pairs");
    synth->add_option("--raw", raw, "raw dataset root");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : usage;
    }

    try {
        const auto cfg = resolve(common, {{"paths.raw", raw},
                                          {"paths.prepared", prepared},
                                          {"registration.algorithm", algorithm},
                                          {"registration.trim", trim},
                                          {"model.variant", variant},
                                          {"model.input_size", input_size},
                                          {"model.width_divisor", divisor},
                                          {"training.epochs", epochs},
                                          {"training.batch_size", batch},
                                          {"paths.checkpoint", checkpoint},
                                          {"paths.reports", reports}});

        if (*prepare) {
            const auto s = pl::cmd_prepare(cfg, &std::cout);
            std::cout << s.records.size() << " prepared, " << s.rejects.size() << " rejected\n";
        } else if (*train) {
            const auto s = pl::cmd_train(cfg, &std::cout);
            std::cout << "checkpoint: " << s.checkpoint.string() << "\nloss trace: " << s.loss_trace.string() << '\n';
        } else if (*colorize) {
            const auto out = pl::cmd_colorize(cfg, thermal_path, cfg.paths.checkpoint, out_dir);
            std::cout << "mask: " << out.mask.string() << "\nfused: " << out.fused.string() << '\n';
        } else if (*fuse) {
            pl::cmd_fuse(mask_path, thermal_path, out_path);
        } else if (*evaluate) {
            const auto report =
                pl::cmd_evaluate(pred_dir, ref_dir, out_path.empty() ? cfg.paths.reports / "scores.csv" : fs::path(out_path));
            std::cout << report.to_table();
        } else if (*bench) {
            const auto report =
                pl::cmd_bench(cfg, pairs_dir, imager.empty() ? std::nullopt : std::optional<std::string>(imager),
                              out_path.empty() ? cfg.paths.reports / "bench.csv" : fs::path(out_path));
            std::cout << "pairs: " << report.rows.size() / 3 << '\n'
                      << "mean t_reduced/t_exhaustive: " << report.reduced_over_exhaustive << '\n'
                      << "mean t_trimmed/t_reduced: " << report.trimmed_over_reduced << '\n';
        } else if (*synth) {
            const auto offsets = pl::cmd_synth(cfg, imager, count, cfg.paths.raw);
            for (std::size_t i = 0; i < offsets.size(); ++i)
                std::cout << "pair " << i + 1 << ": planted at (" << offsets[i].first << ", " << offsets[i].second
                          << ")\n";
        }
    } catch (const tc::UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return usage;
    } catch (const tc::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return data;
    }
    return ok;
}
