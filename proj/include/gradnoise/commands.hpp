#pragma once

#include "config.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "harness.hpp"
#include "noise_matrix.hpp"
#include "projection.hpp"
#include "report.hpp"
#include "tail_index.hpp"
#include "univariate_tests.hpp"

#include <nlohmann/json.hpp>

#include <cerrno>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace gradnoise::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_io = 1,
    exit_config = 2,
    exit_data = 3,
    exit_degenerate = 4,
};

inline int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::parameter:
        case ErrorKind::config: return exit_config;
        case ErrorKind::size:
        case ErrorKind::shape:
        case ErrorKind::format: return exit_data;
        case ErrorKind::degenerate:
        case ErrorKind::empty_battery: return exit_degenerate;
        case ErrorKind::io: return exit_io;
    }
    return exit_io;
}

inline const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names{"sanity-sas", "train-probe", "estimate-alpha", "test-1d"};
    return names;
}

inline std::vector<KeySpec> schema(const std::string& command) {
    const KeySpec threads{"threads", "1", "worker threads (results do not depend on it)"};
    const KeySpec level{"level", "0.05", "significance level: 0.15, 0.10, 0.05, 0.025 or 0.01"};
    const KeySpec out_dir{"out_dir", ".", "directory for output files"};
    if (command == "sanity-sas") {
        return {{"alphas", "0.2,0.4,0.6,0.8,1.0,1.2,1.4,1.6,1.8,2.0", "comma-separated stability parameters"},
                {"rows", "1000", "noise vectors per matrix (M)"},
                {"dim", "100", "dimension of each vector (p)"},
                {"directions", "1000", "random projection directions (k)"},
                level,
                {"seed", "42", "master seed"},
                threads,
                out_dir};
    }
    if (command == "train-probe") {
        return {{"dataset", "synthetic", "synthetic or idx"},
                {"images", "", "IDX images file (dataset = idx)"},
                {"labels", "", "IDX labels file (dataset = idx)"},
                {"test_images", "", "optional IDX test images"},
                {"test_labels", "", "optional IDX test labels"},
                {"subset", "0", "use only the first N training examples (0 = all)"},
                {"synth_n", "4096", "synthetic examples"},
                {"synth_d", "32", "synthetic feature dimension"},
                {"synth_classes", "10", "synthetic classes"},
                {"synth_spread", "2.0", "synthetic within-class standard deviation"},
                {"synth_seed", "7", "synthetic dataset seed"},
                {"hidden", "128,128", "hidden layer widths"},
                {"activation", "relu", "relu or tanh"},
                {"batch_size", "256", "training and probe minibatch size (b)"},
                {"learning_rate", "0.1", "constant SGD learning rate"},
                {"iterations", "500", "SGD iterations (T)"},
                {"checkpoint_every", "100", "probe at multiples of this iteration"},
                {"sgn_minibatches", "1000", "noise vectors per checkpoint (M)"},
                {"directions", "1000", "random projection directions (k)"},
                level,
                {"seed", "42", "master seed"},
                threads,
                {"save_noise", "false", "write sgn_iter{t}.bin for every checkpoint"},
                {"full_batch_probe", "false", "probe with the full dataset (all noise is zero; diagnostic)"},
                out_dir};
    }
    if (command == "estimate-alpha") {
        return {{"input", "", "noise matrix (.bin) or newline-delimited numbers"},
                {"format", "auto", "auto, matrix or text"},
                {"block_length", "0", "block length k1 (0 = divisor of n nearest sqrt(n))"},
                {"out", "-", "output JSON path, - for stdout"}};
    }
    if (command == "test-1d") {
        return {{"input", "", "newline-delimited numbers"}, level};
    }
    fail(ErrorKind::config, "unknown subcommand '" + command + "'");
}

/// Newline-delimited numbers; blank lines and '#' comments are skipped.
inline std::vector<double> read_numbers(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::io, "cannot open " + path.string());
    std::vector<double> values;
    std::string line;
    for (int number = 1; std::getline(in, line); ++number) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        const std::string token = line.substr(b, e - b + 1);
        errno = 0;
        char* end = nullptr;
        const double v = std::strtod(token.c_str(), &end);
        require(end == token.c_str() + token.size() && errno == 0 && std::isfinite(v), ErrorKind::format,
                path.string() + ":" + std::to_string(number) + ": not a finite number: '" + token + "'");
        values.push_back(v);
    }
    return values;
}

namespace detail {

inline std::filesystem::path prepare_out_dir(const ResolvedConfig& cfg) {
    const std::filesystem::path dir = cfg.str("out_dir");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    require(!ec && std::filesystem::is_directory(dir), ErrorKind::io, "cannot create output directory " + dir.string());
    return dir;
}

inline unsigned threads(const ResolvedConfig& cfg) {
    const auto t = cfg.size("threads");
    require(t >= 1 && t <= 1024, ErrorKind::config, "threads must lie in [1, 1024]");
    return static_cast<unsigned>(t);
}

inline nlohmann::json config_json(const ResolvedConfig& cfg) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : cfg.values()) j[k] = v;
    return j;
}

}  // namespace detail

/// SaS sanity sweep: sanity_sas.csv, sanity_sas.json, sanity_sas.svg.
inline void cmd_sanity_sas(const ResolvedConfig& cfg, std::ostream& log) {
    SweepConfig sweep;
    sweep.rows = cfg.size("rows");
    sweep.dim = cfg.size("dim");
    sweep.directions = cfg.size("directions");
    sweep.level = cfg.real("level");
    sweep.seed = cfg.u64("seed");
    sweep.threads = detail::threads(cfg);
    const auto alphas = cfg.reals("alphas");
    for (double a : alphas) StableParams{a}.validate();
    (void)anderson_darling_critical_value(sweep.level);
    const auto dir = detail::prepare_out_dir(cfg);

    const auto points = sas_sanity_sweep(alphas, sweep);
    write_text(dir / "sanity_sas.csv", sweep_csv(points));

    nlohmann::json manifest;
    manifest["command"] = "sanity-sas";
    manifest["config"] = detail::config_json(cfg);
    manifest["points"] = nlohmann::json::array();
    std::vector<double> xs;
    std::vector<ProjectionReport> reports;
    for (const auto& pt : points) {
        manifest["points"].push_back({{"alpha", pt.alpha}, {"report", pt.report}});
        xs.push_back(pt.alpha);
        reports.push_back(pt.report);
    }
    manifest["files"] = {"sanity_sas.csv", "sanity_sas.svg"};
    write_text(dir / "sanity_sas.json", manifest.dump(2) + "\n");
    if (!points.empty())
        write_text(dir / "sanity_sas.svg",
                   render_svg(aggregates_figure("Gaussianity tests on SaS variables", "alpha", xs, reports)));
    for (const auto& pt : points)
        log << "alpha " << format_number(pt.alpha) << ": sw_mean_p " << format_number(pt.report.sw_mean_p)
            << ", ad_accept_frac " << format_number(pt.report.ad_accept_frac) << "\n";
}

inline Dataset load_training_data(const ResolvedConfig& cfg) {
    Dataset data;
    const auto& kind = cfg.str("dataset");
    if (kind == "synthetic") {
        data = synth_blobs(cfg.size("synth_n"), cfg.size("synth_d"), cfg.size("synth_classes"), cfg.real("synth_spread"),
                           cfg.u64("synth_seed"));
    } else if (kind == "idx") {
        require(!cfg.str("images").empty() && !cfg.str("labels").empty(), ErrorKind::config,
                "dataset = idx needs images and labels");
        data = load_idx(cfg.str("images"), cfg.str("labels"));
    } else {
        fail(ErrorKind::config, "dataset must be synthetic or idx, got '" + kind + "'");
    }
    const auto subset = cfg.size("subset");
    if (subset != 0) data = head(data, subset);
    return data;
}

/// Train, probe at checkpoints and write manifest.json, reports.csv,
/// gaussianity.svg, loss_accuracy.svg and optionally sgn_iter{t}.bin.
inline void cmd_train_probe(const ResolvedConfig& cfg, std::ostream& log) {
    TrainConfig train;
    train.hidden = cfg.sizes("hidden");
    train.activation = parse_activation(cfg.str("activation"));
    train.batch_size = cfg.size("batch_size");
    train.learning_rate = cfg.real("learning_rate");
    train.iterations = cfg.size("iterations");
    train.checkpoint_every = cfg.size("checkpoint_every");
    train.sgn_minibatches = cfg.size("sgn_minibatches");
    train.seed = cfg.u64("seed");
    train.full_batch_probe = cfg.flag("full_batch_probe");
    ProbeConfig probe;
    probe.directions = cfg.size("directions");
    probe.level = cfg.real("level");
    probe.threads = detail::threads(cfg);
    (void)anderson_darling_critical_value(probe.level);
    require(probe.directions >= 1, ErrorKind::config, "directions must be >= 1");
    const bool save_noise = cfg.flag("save_noise");

    const Dataset data = load_training_data(cfg);
    std::optional<Dataset> test_data;
    if (!cfg.str("test_images").empty() || !cfg.str("test_labels").empty())
        test_data = load_idx(cfg.str("test_images"), cfg.str("test_labels"));
    const auto dir = detail::prepare_out_dir(cfg);

    std::vector<std::string> files;
    CheckpointHook hook = [&](Checkpoint& cp, const NoiseMatrix& noise) {
        log << "iteration " << cp.iteration << ": loss " << format_number(cp.loss) << ", accuracy "
            << format_number(cp.accuracy) << "\n";
        if (!save_noise) return;
        const std::string name = "sgn_iter" + std::to_string(cp.iteration) + ".bin";
        write_noise_matrix(dir / name, noise);
        cp.noise_path = name;
        files.push_back(name);
    };
    const auto results = train_and_probe(train, data, probe, test_data ? &*test_data : nullptr, hook);

    std::vector<ProjectionReport> reports;
    std::vector<double> iterations, losses, accuracies;
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& r : results) {
        reports.push_back(r.report);
        iterations.push_back(static_cast<double>(r.checkpoint.iteration));
        losses.push_back(r.checkpoint.loss);
        accuracies.push_back(r.checkpoint.accuracy);
        nlohmann::json row{{"iteration", r.checkpoint.iteration},
                           {"loss", r.checkpoint.loss},
                           {"accuracy", r.checkpoint.accuracy},
                           {"report", r.report}};
        if (r.checkpoint.test_loss) {
            row["test_loss"] = *r.checkpoint.test_loss;
            row["test_accuracy"] = *r.checkpoint.test_accuracy;
        }
        if (!r.checkpoint.noise_path.empty()) row["noise_file"] = r.checkpoint.noise_path;
        trace.push_back(row);
    }
    write_text(dir / "reports.csv", reports_csv(reports));
    files.insert(files.begin(), {"reports.csv", "gaussianity.svg", "loss_accuracy.svg"});

    nlohmann::json manifest;
    manifest["command"] = "train-probe";
    manifest["config"] = detail::config_json(cfg);
    manifest["seeds"] = {{"seed", train.seed},
                         {"directions", derive_seed(train.seed, streams::directions)},
                         {"baseline", derive_seed(train.seed, streams::baseline)},
                         {"synth_seed", cfg.u64("synth_seed")}};
    manifest["dataset"] = {{"n", data.n}, {"d", data.d}, {"classes", data.classes}};
    manifest["parameters"] = results.empty() ? 0 : results.front().checkpoint.model.parameter_count();
    manifest["trace"] = trace;
    manifest["files"] = files;
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");

    write_text(dir / "gaussianity.svg",
               render_svg(aggregates_figure("Gaussianity tests on projections", "iteration", iterations, reports)));
    FigureSpec curves;
    curves.title = "Loss and accuracy";
    curves.x_label = "iteration";
    curves.y_label = "full-batch loss / training accuracy";
    curves.x = iterations;
    curves.series = {{"loss", losses}, {"accuracy", accuracies}};
    write_text(dir / "loss_accuracy.svg", render_svg(curves));
}

inline nlohmann::json estimate_json(const TailIndexEstimate& est) {
    return {{"alpha_hat", est.alpha_hat}, {"raw_alpha", est.raw_alpha},
            {"inverse_alpha", est.inverse_alpha}, {"out_of_range", est.out_of_range},
            {"constant_input", est.constant_input}, {"k1", est.k1},
            {"k2", est.k2}, {"n", est.n}};
}

inline void cmd_estimate_alpha(const ResolvedConfig& cfg, std::ostream& out) {
    const std::filesystem::path input = cfg.str("input");
    require(!input.empty(), ErrorKind::config, "estimate-alpha needs input");
    const auto& format = cfg.str("format");
    require(format == "auto" || format == "matrix" || format == "text", ErrorKind::config,
            "format must be auto, matrix or text");
    const auto k1 = cfg.size("block_length");

    std::vector<double> values;
    bool matrix = format == "matrix";
    if (format == "auto") {
        std::ifstream probe(input, std::ios::binary);
        require(static_cast<bool>(probe), ErrorKind::io, "cannot open " + input.string());
        char magic[8] = {};
        probe.read(magic, 8);
        matrix = probe.gcount() == 8 && has_noise_magic({reinterpret_cast<unsigned char*>(magic), 8});
    }
    if (matrix) {
        const auto noise = read_noise_matrix(input);
        values.assign(noise.data().begin(), noise.data().end());
    } else {
        values = read_numbers(input);
    }
    const auto est = k1 == 0 ? estimate_alpha(values) : estimate_alpha(values, k1);
    auto j = estimate_json(est);
    j["input"] = input.string();
    j["format"] = matrix ? "matrix" : "text";
    const std::string text = j.dump(2) + "\n";
    if (cfg.str("out") == "-")
        out << text;
    else
        write_text(cfg.str("out"), text);
}

inline void cmd_test_1d(const ResolvedConfig& cfg, std::ostream& out) {
    const std::filesystem::path input = cfg.str("input");
    require(!input.empty(), ErrorKind::config, "test-1d needs input");
    const double level = cfg.real("level");
    (void)anderson_darling_critical_value(level);
    const auto values = read_numbers(input);
    const auto sw = shapiro_wilk(values, level);
    const auto ad = anderson_darling(values, level);
    nlohmann::json j{{"n", values.size()},
                     {"level", level},
                     {"shapiro_wilk", {{"W", sw.statistic}, {"p_value", *sw.p_value}, {"accepted", sw.accepted}}},
                     {"anderson_darling",
                      {{"A2", ad.statistic},
                       {"adjusted_A2", *ad.adjusted_statistic},
                       {"critical_value", *ad.critical_value},
                       {"accepted", ad.accepted}}},
                     {"accepted", sw.accepted && ad.accepted}};
    out << j.dump(2) << "\n";
}

/// Resolve the configuration and run one subcommand, mapping failures to
/// exit codes: 0 ok, 1 I/O, 2 config, 3 data format, 4 degenerate statistics.
inline int run(const std::string& command, const Config& config, std::ostream& out, std::ostream& err) {
    try {
        const ResolvedConfig cfg(config, schema(command));
        if (command == "sanity-sas")
            cmd_sanity_sas(cfg, err);
        else if (command == "train-probe")
            cmd_train_probe(cfg, err);
        else if (command == "estimate-alpha")
            cmd_estimate_alpha(cfg, out);
        else
            cmd_test_1d(cfg, out);
        return exit_ok;
    } catch (const Error& e) {
        err << "gradnoise " << command << ": " << to_string(e.kind()) << " error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        err << "gradnoise " << command << ": error: " << e.what() << "\n";
        return exit_io;
    }
}

}  // namespace gradnoise::cli
