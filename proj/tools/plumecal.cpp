#include <functional>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "plumecal/errors.hpp"
#include "plumecal/pipeline.hpp"

namespace {

using Command = std::function<nlohmann::json(const plumecal::pipeline::PipelineConfig&)>;

int fail(const char* kind, int code, const std::string& message)
{
    std::cerr << nlohmann::json{{"error", kind}, {"exit_code", code}, {"message", message}}.dump() << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv)
{
    namespace pp = plumecal::pipeline;
    CLI::App app{"Emission-rate inversion with emulated dispersion maps"};
    app.require_subcommand(1);

    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::size_t jobs = 1;

    const std::map<std::string, std::pair<Command, std::string>> commands{
        {"design", {pp::cmd_design, "maximin design over the parameter box"}},
        {"snapshot", {pp::cmd_snapshot, "forward-model source-receptor matrix at every design point"}},
        {"train", {pp::cmd_train, "fit one GP emulator per matrix entry"}},
        {"validate", {pp::cmd_validate, "leave-one-out cross validation of the emulators"}},
        {"sensitivity", {pp::cmd_sensitivity, "Sobol total-index screening of the model parameters"}},
        {"synthesize", {pp::cmd_synthesize, "synthetic measurements from the full solver"}},
        {"calibrate-noise", {pp::cmd_calibrate_noise, "choose the noise variance by minimizing J"}},
        {"invert", {pp::cmd_invert, "adaptive MCMC over parameters and emission rates"}},
        {"study-prior", {pp::cmd_study_prior, "posterior spread against the prior width tau"}},
        {"study-emulator", {pp::cmd_study_emulator, "posterior marginals across design sizes"}},
        {"report", {pp::cmd_report, "markdown digest of the output directory"}},
    };
    for (const auto& [name, entry] : commands) {
        auto* sub = app.add_subcommand(name, entry.second);
        sub->add_option("--config", config, "pipeline TOML file")->required();
        sub->add_option("--seed", seed, "master seed (overrides the config)");
        sub->add_option("--out", out, "output directory (overrides the config)");
        sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("config", 2, e.what());
    }

    try {
        auto cfg = pp::load_config(config);
        if (seed) cfg.seed = *seed;
        if (!out.empty()) cfg.output_dir = std::filesystem::absolute(out);
        cfg.jobs = jobs;
        cfg.validate();
        for (const auto* sub : app.get_subcommands()) {
            const auto result = commands.at(sub->get_name()).first(cfg);
            std::cout << result.dump(2) << "\n";
        }
        return 0;
    } catch (const plumecal::Error& e) {
        return fail(e.kind(), e.exit_code(), e.what());
    } catch (const std::exception& e) {
        return fail("numerical", 3, e.what());
    }
}
