// gradnoise: Gaussianity diagnostics for stochastic gradient noise.
//
//   gradnoise sanity-sas|train-probe|estimate-alpha|test-1d [--config PATH] [--set key=value]...

#include "gradnoise/commands.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
    using namespace gradnoise;

    CLI::App app{"Gaussianity diagnostics for stochastic gradient noise"};
    app.require_subcommand(1);

    struct Options {
        std::string config_path;
        std::vector<std::string> overrides;
        bool list_keys = false;
    };
    std::vector<Options> options(cli::subcommands().size());
    std::vector<CLI::App*> subs;
    const std::vector<std::string> descriptions{
        "Gaussianity battery on i.i.d. symmetric alpha-stable matrices over a grid of alpha",
        "train an MLP with minibatch SGD and test its gradient noise at checkpoints",
        "block-sum tail-index estimate of alpha for a noise matrix or a list of numbers",
        "Shapiro-Wilk and Anderson-Darling tests on a list of numbers"};
    for (std::size_t i = 0; i < cli::subcommands().size(); ++i) {
        auto* sub = app.add_subcommand(cli::subcommands()[i], descriptions[i]);
        sub->add_option("--config", options[i].config_path, "flat key = value file, or a run manifest (.json)");
        sub->add_option("--set", options[i].overrides, "override one key: key=value (repeatable)");
        sub->add_flag("--list-keys", options[i].list_keys, "print accepted keys with defaults and exit");
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::exit_config;
    }

    for (std::size_t i = 0; i < subs.size(); ++i) {
        if (!subs[i]->parsed()) continue;
        const auto& name = cli::subcommands()[i];
        const auto& opt = options[i];
        if (opt.list_keys) {
            for (const auto& key : cli::schema(name))
                std::cout << key.name << " = " << key.default_value << "    # " << key.help << "\n";
            return cli::exit_ok;
        }
        Config config;
        try {
            if (!opt.config_path.empty()) config = Config::load(opt.config_path);
            for (const auto& o : opt.overrides) config.apply_override(o);
        } catch (const Error& e) {
            std::cerr << "gradnoise " << name << ": " << e.what() << "\n";
            return cli::exit_code(e.kind());
        }
        return cli::run(name, config, std::cout, std::cerr);
    }
    return cli::exit_config;
}
