#include "gradnoise/commands.hpp"

#include "reference/reference_values.hpp"
#include "support/oracle_samples.hpp"

#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace gradnoise;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("gradnoise_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

std::vector<std::string> fields(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    for (std::string f; std::getline(in, f, ',');) out.push_back(f);
    return out;
}

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(const std::string& command, const std::vector<std::string>& overrides) {
    Config cfg;
    for (const auto& o : overrides) cfg.apply_override(o);
    std::ostringstream out, err;
    const int code = cli::run(command, cfg, out, err);
    return {code, out.str(), err.str()};
}

void write_numbers(const fs::path& path, const std::vector<double>& values) {
    std::ofstream out(path);
    out.precision(17);
    for (double v : values) out << v << "\n";
}

// Small train-probe settings so the CLI tests stay fast.
std::vector<std::string> small_train(const fs::path& dir) {
    return {"out_dir=" + dir.string(), "synth_n=1024", "synth_d=8", "synth_classes=4", "hidden=16,16",
            "sgn_minibatches=50", "directions=20", "batch_size=256"};
}

}  // namespace

TEST_CASE("sanity-sas default grid", "[cli]") {
    const auto dir = fresh_dir("sanity");
    const auto r = run("sanity-sas", {"out_dir=" + dir.string()});
    REQUIRE(r.code == 0);
    const auto csv = slurp(dir / "sanity_sas.csv");
    const auto rows = lines(csv);
    REQUIRE(rows.size() == 11);
    CHECK(rows[0] == sweep_csv_header);
    bool saw_cauchy = false;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto f = fields(rows[i]);
        REQUIRE(f.size() == 6);
        if (f[0] == "1") {
            saw_cauchy = true;
            CHECK(std::stod(f[2]) < 0.05);
        }
    }
    CHECK(saw_cauchy);
    CHECK(fs::exists(dir / "sanity_sas.svg"));
    CHECK(fs::exists(dir / "sanity_sas.json"));

    const auto again = fresh_dir("sanity_again");
    REQUIRE(run("sanity-sas", {"out_dir=" + again.string()}).code == 0);
    CHECK(slurp(again / "sanity_sas.csv") == csv);
    const auto threaded = fresh_dir("sanity_threads");
    REQUIRE(run("sanity-sas", {"out_dir=" + threaded.string(), "threads=3"}).code == 0);
    CHECK(slurp(threaded / "sanity_sas.csv") == csv);
}

TEST_CASE("sanity-sas errors", "[cli]") {
    const auto dir = fresh_dir("sanity_errors");
    {
        std::ofstream blocker(dir / "file");
        blocker << "x";
    }
    const auto unwritable = run("sanity-sas", {"out_dir=" + (dir / "file" / "sub").string(), "rows=50", "dim=5",
                                               "directions=5"});
    CHECK(unwritable.code != 0);
    CHECK(unwritable.code == cli::exit_io);
    CHECK_THAT(unwritable.err, ContainsSubstring("io error"));

    CHECK(run("sanity-sas", {"out_dir=" + dir.string(), "bogus=1"}).code == cli::exit_config);
    CHECK(run("sanity-sas", {"out_dir=" + dir.string(), "alphas=0.5,2.5"}).code == cli::exit_config);
    CHECK(run("sanity-sas", {"out_dir=" + dir.string(), "level=0.07"}).code == cli::exit_config);
    CHECK(run("sanity-sas", {"out_dir=" + dir.string(), "rows=abc"}).code == cli::exit_config);
    CHECK(run("sanity-sas", {"out_dir=" + dir.string(), "threads=0"}).code == cli::exit_config);
    CHECK(run("sanity-sas", {"out_dir=" + dir.string(), "rows=6000"}).code == cli::exit_data);
    CHECK(run("no-such-command", {}).code == cli::exit_config);
}

TEST_CASE("train-probe with T = 0", "[cli]") {
    const auto dir = fresh_dir("train_t0");
    auto args = small_train(dir);
    args.push_back("iterations=0");
    const auto r = run("train-probe", args);
    REQUIRE(r.code == 0);
    const auto rows = lines(slurp(dir / "reports.csv"));
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == report_csv_header);
    CHECK(fields(rows[1])[0] == "0");
    for (const char* name : {"manifest.json", "gaussianity.svg", "loss_accuracy.svg"}) CHECK(fs::exists(dir / name));
    CHECK_FALSE(fs::exists(dir / "sgn_iter0.bin"));
}

TEST_CASE("train-probe with full-batch probing fails cleanly", "[cli]") {
    const auto dir = fresh_dir("train_full");
    auto args = small_train(dir);
    args.insert(args.end(), {"iterations=0", "batch_size=1024", "full_batch_probe=true"});
    const auto r = run("train-probe", args);
    CHECK(r.code == cli::exit_degenerate);
    CHECK_THAT(r.err, ContainsSubstring("empty-battery error"));
    CHECK_FALSE(fs::exists(dir / "reports.csv"));
}

TEST_CASE("train-probe checkpoints every 100 iterations", "[cli]") {
    const auto dir = fresh_dir("train_500");
    auto args = small_train(dir);
    args.insert(args.end(), {"iterations=500", "save_noise=true"});
    REQUIRE(run("train-probe", args).code == 0);
    const auto csv = slurp(dir / "reports.csv");
    const auto rows = lines(csv);
    REQUIRE(rows.size() == 7);
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(fields(rows[i])[0] == std::to_string(100 * (i - 1)));

    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest.at("trace").size() == 6);
    CHECK(manifest.at("dataset").at("n") == 1024);
    CHECK(manifest.at("parameters") == 8 * 16 + 16 + 16 * 16 + 16 + 16 * 4 + 4);
    CHECK(manifest.at("trace").back().at("noise_file") == "sgn_iter500.bin");
    const auto noise = read_noise_matrix(dir / "sgn_iter500.bin");
    CHECK(noise.rows() == 50);
    CHECK(noise.meta().iteration == 500);
    CHECK(noise.meta().batch_size == 256);

    // Re-running from the manifest reproduces the CSV byte for byte.
    const auto rerun = fresh_dir("train_500_rerun");
    auto cfg = Config::load(dir / "manifest.json");
    cfg.set("out_dir", rerun.string());
    std::ostringstream out, err;
    REQUIRE(cli::run("train-probe", cfg, out, err) == 0);
    CHECK(slurp(rerun / "reports.csv") == csv);
    CHECK(slurp(rerun / "sgn_iter300.bin") == slurp(dir / "sgn_iter300.bin"));

    const auto threaded = fresh_dir("train_500_threads");
    auto targs = small_train(threaded);
    targs.insert(targs.end(), {"iterations=500", "threads=2"});
    REQUIRE(run("train-probe", targs).code == 0);
    CHECK(slurp(threaded / "reports.csv") == csv);
}

TEST_CASE("train-probe dataset errors", "[cli]") {
    const auto dir = fresh_dir("train_errors");
    auto args = small_train(dir);
    args.insert(args.end(), {"dataset=idx", "images=" + (dir / "missing").string(),
                             "labels=" + (dir / "missing").string()});
    CHECK(run("train-probe", args).code == cli::exit_io);
    {
        std::ofstream bad(dir / "bad.idx", std::ios::binary);
        bad << "garbage!";
    }
    args = small_train(dir);
    args.insert(args.end(), {"dataset=idx", "images=" + (dir / "bad.idx").string(),
                             "labels=" + (dir / "bad.idx").string()});
    CHECK(run("train-probe", args).code == cli::exit_data);
    args = small_train(dir);
    args.push_back("dataset=cifar");
    CHECK(run("train-probe", args).code == cli::exit_config);
    args = small_train(dir);
    args.push_back("activation=gelu");
    CHECK(run("train-probe", args).code == cli::exit_config);
}

TEST_CASE("estimate-alpha on a stable noise file", "[cli]") {
    const auto dir = fresh_dir("estimate");
    write_noise_matrix(dir / "noise.bin", sas_matrix(1.5, 1000, 1000, 77));
    const auto r = run("estimate-alpha", {"input=" + (dir / "noise.bin").string(), "block_length=1000"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK_THAT(j.at("alpha_hat").get<double>(), WithinAbs(1.5, 0.05));
    CHECK(j.at("format") == "matrix");
    CHECK(j.at("k1") == 1000);
    CHECK(j.at("n") == 1'000'000);

    // Default block length and the text format.
    write_numbers(dir / "values.txt", sample_sas(StableParams{1.0}, 10'000, 3));
    const auto t = run("estimate-alpha", {"input=" + (dir / "values.txt").string(),
                                          "out=" + (dir / "alpha.json").string()});
    REQUIRE(t.code == 0);
    const auto jt = nlohmann::json::parse(slurp(dir / "alpha.json"));
    CHECK(jt.at("format") == "text");
    CHECK(jt.at("k1") == 100);

    CHECK(run("estimate-alpha", {"input=" + (dir / "values.txt").string(), "block_length=3"}).code ==
          cli::exit_config);
    CHECK(run("estimate-alpha", {"input=" + (dir / "values.txt").string(), "format=matrix"}).code ==
          cli::exit_data);
    CHECK(run("estimate-alpha", {}).code == cli::exit_config);
    CHECK(run("estimate-alpha", {"input=" + (dir / "nope").string()}).code == cli::exit_io);
}

TEST_CASE("test-1d", "[cli]") {
    const auto dir = fresh_dir("test1d");
    write_numbers(dir / "normal.txt", oracle::sample(oracle::Kind::normal, 1000, 303));
    const auto r = run("test-1d", {"input=" + (dir / "normal.txt").string()});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j.at("accepted") == true);
    CHECK(j.at("n") == 1000);
    CHECK_THAT(j.at("anderson_darling").at("A2").get<double>(), WithinAbs(reference::ad_normal1000_a2, 1e-3));
    CHECK_THAT(j.at("shapiro_wilk").at("p_value").get<double>(), WithinAbs(reference::sw_normal1000_p, 2e-3));

    write_numbers(dir / "constant.txt", std::vector<double>(100, 4.0));
    const auto c = run("test-1d", {"input=" + (dir / "constant.txt").string()});
    CHECK(c.code == cli::exit_degenerate);
    CHECK_THAT(c.err, ContainsSubstring("degenerate error"));

    {
        std::ofstream bad(dir / "bad.txt");
        bad << "1.0\n2.0\nthree\n";
    }
    const auto b = run("test-1d", {"input=" + (dir / "bad.txt").string()});
    CHECK(b.code == cli::exit_data);
    CHECK_THAT(b.err, ContainsSubstring("bad.txt:3"));
    write_numbers(dir / "short.txt", {1.0, 2.0});
    CHECK(run("test-1d", {"input=" + (dir / "short.txt").string()}).code == cli::exit_data);
}

TEST_CASE("config files", "[config]") {
    const auto cfg = Config::parse("# comment\n  rows = 10  \n\ndim=3 # trailing\nrows = 20\n");
    CHECK(cfg.entries().at("rows") == "20");
    CHECK(cfg.entries().at("dim") == "3");
    CHECK_THROWS_AS(Config::parse("rows 10\n"), Error);
    CHECK_THROWS_AS(Config::parse("bad key = 1\n"), Error);

    Config c;
    c.apply_override("alphas = 1.0, 2.0");
    CHECK_THROWS_AS(c.apply_override("novalue"), Error);
    const ResolvedConfig resolved(c, cli::schema("sanity-sas"));
    CHECK(resolved.reals("alphas") == std::vector<double>{1.0, 2.0});
    CHECK(resolved.size("rows") == 1000);

    Config unknown;
    unknown.set("rowz", "5");
    try {
        ResolvedConfig bad(unknown, cli::schema("sanity-sas"));
        FAIL("unknown key accepted");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::config);
        CHECK_THAT(std::string(e.what()), ContainsSubstring("rowz"));
    }

    const auto dir = fresh_dir("config");
    {
        std::ofstream f(dir / "run.cfg");
        f << "rows = 64\nseed = 9\n";
    }
    CHECK(Config::load(dir / "run.cfg").entries().at("seed") == "9");
    {
        std::ofstream f(dir / "manifest.json");
        f << R"({"command": "sanity-sas", "config": {"rows": "64"}})";
    }
    CHECK(Config::load(dir / "manifest.json").entries().at("rows") == "64");
    {
        std::ofstream f(dir / "broken.json");
        f << R"({"config": {"rows": 64}})";
    }
    CHECK_THROWS_AS(Config::load(dir / "broken.json"), Error);
    CHECK_THROWS_AS(Config::load(dir / "absent.cfg"), Error);
}

TEST_CASE("figures", "[report]") {
    FigureSpec fig;
    fig.title = "a < b & c";
    fig.x_label = "x";
    fig.y_label = "y";
    fig.x = {0, 1, 2};
    fig.series = {{"one", {0.1, 0.5, 0.9}}, {"two", {1.0, 0.0, 0.5}}};
    fig.y_range = {{0.0, 1.0}};
    const auto svg = render_svg(fig);
    CHECK_THAT(svg, ContainsSubstring("<svg"));
    CHECK_THAT(svg, ContainsSubstring("a &lt; b &amp; c"));
    CHECK_THAT(svg, ContainsSubstring("</svg>"));

    auto mismatched = fig;
    mismatched.series[0].y.pop_back();
    CHECK_THROWS_AS(render_svg(mismatched), Error);
    auto outside = fig;
    outside.series[1].y[0] = 1.5;
    CHECK_THROWS_AS(render_svg(outside), Error);
    auto empty = fig;
    empty.x.clear();
    for (auto& s : empty.series) s.y.clear();
    CHECK_THROWS_AS(render_svg(empty), Error);
}

TEST_CASE("CSV formatting", "[report]") {
    ProjectionReport r;
    r.iteration = 100;
    r.sw_mean_p = 0.5;
    r.ad_accept_frac = 0.95;
    r.baseline_sw_mean_p = 0.25;
    r.baseline_ad_accept_frac = 1.0;
    r.n_degenerate = 2;
    CHECK(reports_csv({r}) == std::string(report_csv_header) + "\n100,0.5,0.95,0.25,1,2\n");
    nlohmann::json j = r;
    CHECK(j.get<ProjectionReport>() == r);
    CHECK(format_number(1.0 / 3.0) == "0.333333333333");
}
