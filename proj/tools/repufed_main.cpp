// Experiment runner for the reputation-driven asynchronous FL simulator.
//
//   repufed run    --config cfg.ini [--seed N] [--out DIR]
//   repufed ablate --config cfg.ini --variants base,no-drl,... [--seed N] [--out DIR]
//   repufed sweep  --config cfg.ini --param dp.epsilon --values 0.1,0.2 [--repeats R]
//   repufed drl    --config cfg.ini --algo ppo|dqn [--seed N] [--out DIR]

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "repufed/experiment.hpp"

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"reputation-driven asynchronous FL trajectory simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    long seed_override = -1;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "scenario config file")
            ->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed_override, "override run.seed");
    };

    auto* run = app.add_subcommand("run", "execute federation slots");
    add_common(run);

    auto* ablate = app.add_subcommand("ablate", "compare scheme variants");
    add_common(ablate);
    std::string variants_arg = "base,no-drl,no-dp,no-afl,low-r";
    ablate->add_option("--variants", variants_arg,
                       "comma list from base,no-drl,no-dp,no-afl,low-r");

    auto* sweep = app.add_subcommand("sweep", "sweep one parameter");
    add_common(sweep);
    std::string param, values_arg;
    int repeats = 1;
    sweep->add_option("--param", param, "dotted path, e.g. dp.epsilon")
        ->required();
    sweep->add_option("--values", values_arg, "comma list of values")
        ->required();
    sweep->add_option("--repeats", repeats, "repeats per value");

    auto* drl = app.add_subcommand("drl", "train the vehicle selector");
    add_common(drl);
    std::string algo = "ppo";
    drl->add_option("--algo", algo, "ppo or dqn");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    if (const char* log = std::getenv("REPUFED_LOG"); log && std::string(log) == "debug")
        std::cerr << "config=" << config_path << " out=" << out_dir << "\n";

    if (run->parsed()) return repufed::cmd_run(config_path, out_dir, seed_override);
    if (ablate->parsed())
        return repufed::cmd_ablate(config_path, split_list(variants_arg),
                                   out_dir, seed_override);
    if (sweep->parsed()) {
        repufed::SweepSpec spec;
        spec.param = param;
        spec.repeats = repeats;
        for (const auto& v : split_list(values_arg)) {
            try {
                spec.values.push_back(std::stod(v));
            } catch (const std::exception&) {
                std::cerr << "config error: bad sweep value " << v << "\n";
                return 2;
            }
        }
        return repufed::cmd_sweep(config_path, spec, out_dir, seed_override);
    }
    if (drl->parsed())
        return repufed::cmd_drl(config_path, algo, out_dir, seed_override);
    return 2;
}
