// Command-line front end; talks to the library exclusively through the C API.
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "cloudcluster/cloudcluster.h"

namespace {

int report_failure(const char* action, cc_status status) {
    std::fprintf(stderr, "error: %s failed: %s (%s)\n", action, cc_status_name(status),
                 cc_last_error());
    return 1;
}

struct SystemHandle {
    cc_system* ptr = nullptr;
    ~SystemHandle() { cc_system_free(ptr); }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-tier cloud-cluster event detection: threshold optimization, "
                 "error probabilities and experiment sweeps"};
    app.require_subcommand(1);

    // run: config-driven sweep, CSV out
    std::string config_path;
    std::string out_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t cluster_cap = 0;
    std::size_t fc_cap = 0;
    std::string curves;
    std::uint64_t mc_trials = 0;

    CLI::App* run = app.add_subcommand("run", "Run the experiment sweep of a config and emit CSV");
    run->add_option("--config", config_path, "Experiment config (JSON)")->required();
    run->add_option("--out", out_path, "Output CSV path")->required();
    run->add_option("--seed", seed, "Override the config seed")->each([&](const std::string&) {
        seed_set = true;
    });
    run->add_option("--cluster-cap", cluster_cap, "Override the exact-enumeration cap per cluster");
    run->add_option("--fc-cap", fc_cap, "Override the exact-enumeration cap at the fusion center");
    run->add_option("--curves", curves, "Comma-separated curve selection");
    run->add_option("--mc-trials", mc_trials, "Add a Monte Carlo cross-check column");

    // simulate: one sweep point, optimized thresholds, Monte Carlo
    std::string sim_config;
    std::size_t sim_point = 0;
    std::uint64_t sim_trials = 100000;
    std::uint64_t sim_seed = 0;
    std::string trace_path;

    CLI::App* simulate = app.add_subcommand(
        "simulate", "Monte Carlo one sweep point of a config at exact-optimized thresholds");
    simulate->add_option("--config", sim_config, "Experiment config (JSON)")->required();
    simulate->add_option("--point", sim_point, "Sweep index (default 0)");
    simulate->add_option("--trials", sim_trials, "Trial count");
    simulate->add_option("--seed", sim_seed, "Simulation seed");
    simulate->add_option("--trace", trace_path, "Write per-trial records (JSON lines)");

    // optimize: one sweep point, print thresholds and loss
    std::string opt_config;
    std::size_t opt_point = 0;
    std::size_t opt_cluster_cap = 0;
    std::size_t opt_fc_cap = 0;
    bool opt_gauss_seidel = false;

    CLI::App* optimize =
        app.add_subcommand("optimize", "Optimize thresholds for one sweep point of a config");
    optimize->add_option("--config", opt_config, "Experiment config (JSON)")->required();
    optimize->add_option("--point", opt_point, "Sweep index (default 0)");
    optimize->add_option("--cluster-cap", opt_cluster_cap, "Override the per-cluster cap");
    optimize->add_option("--fc-cap", opt_fc_cap, "Override the fusion-center cap");
    optimize->add_flag("--gauss-seidel", opt_gauss_seidel,
                       "Per-cluster coordinate search instead of the shared threshold");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        cc_run_options options{};
        options.has_seed = seed_set ? 1 : 0;
        options.seed = seed;
        options.cluster_cap = cluster_cap;
        options.fc_cap = fc_cap;
        options.curves = curves.empty() ? nullptr : curves.c_str();
        options.mc_trials = mc_trials;
        const cc_status status = cc_run_experiment(config_path.c_str(), out_path.c_str(), &options);
        if (status != CC_OK) return report_failure("run", status);
        std::printf("wrote %s\n", out_path.c_str());
        return 0;
    }

    if (simulate->parsed()) {
        SystemHandle system;
        cc_status status = cc_config_build_system(sim_config.c_str(), sim_point, &system.ptr);
        if (status != CC_OK) return report_failure("simulate (build)", status);
        cc_opt_result opt{};
        status = cc_optimize_equal_threshold(system.ptr, 0, 0, 0, &opt);
        if (status != CC_OK) return report_failure("simulate (optimize)", status);

        double p_fa = 0.0, p_md = 0.0, loss = 0.0;
        status = cc_fc_error_probs(system.ptr, CC_METHOD_EXACT, CC_METHOD_EXACT, 0, 0, &p_fa, &p_md);
        if (status != CC_OK) return report_failure("simulate (analytic)", status);
        status = cc_expected_loss(system.ptr, p_fa, p_md, &loss);
        if (status != CC_OK) return report_failure("simulate (analytic)", status);

        cc_sim_result sim{};
        status = cc_simulate(system.ptr, sim_trials, sim_seed,
                             trace_path.empty() ? nullptr : trace_path.c_str(), &sim);
        if (status != CC_OK) return report_failure("simulate", status);
        std::printf("{\"trials\": %" PRIu64 ", \"seed\": %" PRIu64
                    ", \"empirical\": {\"p_fa\": %.12g, \"p_md\": %.12g, \"loss\": %.12g}, "
                    "\"analytic\": {\"p_fa\": %.12g, \"p_md\": %.12g, \"loss\": %.12g}}\n",
                    sim.trials, sim_seed, sim.p_fa, sim.p_md, sim.loss, p_fa, p_md, loss);
        return 0;
    }

    if (optimize->parsed()) {
        SystemHandle system;
        cc_status status = cc_config_build_system(opt_config.c_str(), opt_point, &system.ptr);
        if (status != CC_OK) return report_failure("optimize (build)", status);
        cc_opt_result opt{};
        status = opt_gauss_seidel
                     ? cc_optimize_thresholds(system.ptr, 0, opt_cluster_cap, opt_fc_cap, &opt)
                     : cc_optimize_equal_threshold(system.ptr, 0, opt_cluster_cap, opt_fc_cap, &opt);
        if (status != CC_OK) return report_failure("optimize", status);

        size_t count = 0;
        cc_system_cluster_count(system.ptr, &count);
        std::printf("{\"loss\": %.12g, \"sweeps\": %" PRIu64 ", \"converged\": %s, "
                    "\"thresholds\": [",
                    opt.loss, opt.sweeps, opt.converged ? "true" : "false");
        for (size_t j = 0; j < count; ++j) {
            double gamma = 0.0;
            cc_system_get_threshold(system.ptr, j, &gamma);
            std::printf("%s%.12g", j ? ", " : "", gamma);
        }
        std::printf("]}\n");
        return 0;
    }

    return 1;
}
