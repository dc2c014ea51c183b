#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "anderson/errors.hpp"
#include "anderson/experiment.hpp"

namespace fs = std::filesystem;
using namespace anderson;

namespace {

struct Common {
    std::string config;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    int workers = 1;
    std::string out;
};

void add_common(CLI::App* cmd, Common& opts)
{
    cmd->add_option("--config", opts.config, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", opts.seed, "master seed (overrides the config)");
    cmd->add_option("--workers", opts.workers, "worker threads")->check(CLI::Range(1, 1024));
    cmd->add_option("--out", opts.out, "output directory");
    cmd->add_option("--override", opts.overrides, "set a config leaf, key.path=value")->take_all();
}

ExperimentConfig resolve(const Common& opts)
{
    std::vector<std::string> overrides = opts.overrides;
    if (opts.seed)
        overrides.push_back("master_seed=" + std::to_string(*opts.seed));
    return load_config(opts.config, overrides);
}

RunOptions run_options(const Common& opts, const ExperimentConfig& c)
{
    return RunOptions{opts.workers, opts.out.empty() ? fs::path(c.output_dir) : fs::path(opts.out)};
}

int run_verify(const Common& opts, const std::vector<int>& only)
{
    const ExperimentConfig c = resolve(opts);
    const auto results = verify_suite(c, opts.workers, only);
    bool all = true;
    nlohmann::json report = nlohmann::json::array();
    for (const auto& r : results) {
        std::cout << format_criterion(r) << std::endl;
        all = all && r.pass;
        report.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"detail", r.detail},
                          {"seconds", r.seconds}, {"data", r.data}});
    }
    if (!opts.out.empty()) {
        fs::create_directories(opts.out);
        std::ofstream(fs::path(opts.out) / "verify.json") << report.dump(2) << "\n";
    }
    return all ? kExitOk : kExitCriterion;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Monte Carlo lab for eigenvalue statistics of the Anderson model"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    Common opts;
    std::vector<int> only;
    auto* simulate = app.add_subcommand("simulate", "full pipeline: decay, ids, sweeps, stats");
    auto* ids = app.add_subcommand("ids", "integrated density of states and its fractional derivative");
    auto* decay = app.add_subcommand("decay", "fractional-moment decay of the resolvent");
    auto* stats = app.add_subcommand("stats", "statistics on the sample streams in --out");
    auto* verify = app.add_subcommand("verify", "run the acceptance checks");
    auto* report = app.add_subcommand("report", "render SVG figures and a summary from --out");
    for (auto* cmd : {simulate, ids, decay, stats, verify, report})
        add_common(cmd, opts);
    verify->add_option("--only", only, "criterion numbers to run")->check(CLI::Range(1, 9));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (*verify)
            return run_verify(opts, only);
        const ExperimentConfig c = resolve(opts);
        const RunOptions options = run_options(opts, c);
        if (*simulate) {
            run_pipeline(c, options);
            std::cout << "results in " << options.out_dir.string() << "\n";
        } else if (*ids) {
            std::cout << run_ids_stage(c, options).dump(2) << "\n";
        } else if (*decay) {
            std::cout << run_decay_stage(c, options).dump(2) << "\n";
        } else if (*stats) {
            std::cout << run_stats_stage(c, options).dump(2) << "\n";
        } else if (*report) {
            for (const auto& path : render_report(options.out_dir))
                std::cout << path.string() << "\n";
        }
        return kExitOk;
    } catch (const StageError& e) {
        std::cerr << "stage failed: " << e.what() << "\n";
        return e.exit_code();
    } catch (const ConfigError& e) {
        std::cerr << "invalid configuration: " << e.what() << "\n";
        return kExitValidation;
    } catch (const DomainError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ResourceError& e) {
        std::cerr << "resource limit: " << e.what() << "\n";
        return kExitResource;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}
