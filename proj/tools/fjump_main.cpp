// fjump: frequency-jump state-expansion simulator for a levitated particle
// in a hybrid optical / Paul trap.
//
//   fjump analytic --config cfg.json --out dir     model curves over t_d
//   fjump ensemble --config cfg.json --out dir     Monte Carlo + pipeline
//   fjump verify                                   acceptance checks

#include <cstdint>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "fjump/fjump.hpp"

namespace {

fjump::ExperimentConfig load_or_default(const std::string& path) {
    if (path.empty()) return fjump::ExperimentConfig{};
    return fjump::load_config(path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"frequency-jump state-expansion simulator (hybrid optical/Paul trap)"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    std::uint64_t seed = 0;
    bool seed_given = false;
    int threads = 0;

    auto add_common = [&](CLI::App* sub, bool with_out) {
        sub->add_option("--config", config_path, "JSON experiment config (defaults when omitted)");
        if (with_out) sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "override base_seed")->each([&](const std::string&) {
            seed_given = true;
        });
        sub->add_option("--threads", threads, "worker threads (0 = hardware)");
    };

    auto* analytic = app.add_subcommand("analytic", "evaluate model curves over the t_d sweep");
    add_common(analytic, true);
    auto* ensemble =
        app.add_subcommand("ensemble", "run Monte Carlo ensembles through the pipeline");
    add_common(ensemble, true);
    std::string traj_path;
    ensemble->add_option("--trajectory-out", traj_path,
                         "also dump one full example trajectory as CSV (debugging)");
    auto* verify = app.add_subcommand("verify", "run the acceptance checks");
    verify->add_option("--threads", threads, "worker threads (0 = hardware)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(verify)) {
            const int t = threads > 0
                              ? threads
                              : static_cast<int>(std::thread::hardware_concurrency());
            const auto rep = fjump::run_acceptance(std::max(1, t));
            fjump::print_report(std::cout, rep);
            return rep.all_pass() ? 0 : 1;
        }

        fjump::ExperimentConfig cfg = load_or_default(config_path);
        if (seed_given) cfg.base_seed = seed;
        if (threads > 0) cfg.threads = threads;

        if (app.got_subcommand(analytic)) {
            const auto path = fjump::cmd_analytic(cfg, out_dir);
            std::cout << "wrote " << path << "\n";
        } else if (app.got_subcommand(ensemble)) {
            for (const auto& p : fjump::cmd_ensemble(cfg, out_dir))
                std::cout << "wrote " << p << "\n";
            if (!traj_path.empty()) {
                const auto traj = fjump::run_protocol(
                    cfg.schedule(cfg.t_d_start), cfg.init(), cfg.particle(), cfg.optical(),
                    cfg.paul(), fjump::derive_seed(cfg.base_seed, 0, 1));
                fjump::export_trajectory_csv(traj_path, traj);
                std::cout << "wrote " << traj_path << "\n";
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
