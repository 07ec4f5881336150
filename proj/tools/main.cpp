#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "runner.hpp"

using namespace wfrho::cli;

int main(int argc, char** argv) {
    CLI::App app{"Maxwell-Lorentz dynamics of rigid charges: Synge histories and Wheeler-Feynman fixed points"};
    app.require_subcommand(1, 1);

    std::string scenario_path, out_dir = ".";
    int threads = 0;
    std::vector<std::string> overrides;
    for (const std::string& mode : kModes) {
        CLI::App* sub = app.add_subcommand(mode, "run in " + mode + " mode");
        auto* opt = sub->add_option("--scenario", scenario_path, "scenario file (JSON)");
        if (mode != "verify") opt->required();
        sub->add_option("--out", out_dir, "output directory")->capture_default_str();
        sub->add_option("--threads", threads, "worker threads (0 keeps the default)")->check(CLI::NonNegativeNumber);
        sub->add_option("--override", overrides, "key=value applied to the scenario before validation");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_invalid_scenario;
    }
    const std::string mode = app.get_subcommands().front()->get_name();

    Scenario s;
    try {
        nlohmann::json doc;
        if (scenario_path.empty()) {
            doc = emit_scenario(default_scenario());
        } else {
            std::ifstream in(scenario_path);
            if (!in) throw wfrho::InvalidInput("cannot open scenario file '" + scenario_path + "'");
            doc = nlohmann::json::parse(in, nullptr, true, true);
        }
        for (const auto& o : overrides) apply_override(doc, o);
        doc["run"]["mode"] = mode;
        s = parse_scenario(doc);
    } catch (const nlohmann::json::exception& e) {
        return report_error(out_dir, exit_invalid_scenario, "invalid_scenario", std::string("malformed JSON: ") + e.what(),
                            std::cerr);
    } catch (const wfrho::InvalidInput& e) {
        return report_error(out_dir, exit_invalid_scenario, "invalid_scenario", e.what(), std::cerr);
    }
    return run(s, RunOptions{out_dir, threads}, std::cerr);
}
