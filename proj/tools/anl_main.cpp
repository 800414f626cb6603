// anl: procedural-terrain navigation lab. Subcommands cover terrain
// generation, staged training, benchmark evaluation, single-episode replay
// and stability plotting. Exit codes: 0 success, 1 usage/config error,
// 2 curriculum stalled.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "anl/benchmark.hpp"
#include "anl/config.hpp"
#include "anl/curriculum.hpp"
#include "anl/terrain_io.hpp"

namespace {

std::atomic<bool> g_interrupt{false};

void handle_sigint(int) { g_interrupt.store(true); }

std::string hex64(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string file_stem(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

bool is_resume_bundle(const std::string& path) {
    return std::filesystem::is_directory(path) &&
           std::filesystem::exists(std::filesystem::path(path) / "state.json");
}

int cmd_train(const std::string& config_path, const std::string& stage_arg,
              const std::string& resume_path) {
    anl::RunConfig cfg = anl::load_run_config(config_path);
    cfg.echo_into(cfg.out_dir);

    anl::Trainer trainer(cfg.trainer_setup(&g_interrupt));
    int start_stage = 1;
    if (!resume_path.empty()) {
        if (is_resume_bundle(resume_path)) {
            trainer.load_resume(resume_path);
            start_stage = trainer.resume_stage();
        } else {
            trainer.load_params(resume_path);
        }
    }

    std::signal(SIGINT, handle_sigint);

    std::vector<int> stage_ids;
    if (stage_arg == "all") {
        for (int i = start_stage; i <= 5; ++i) stage_ids.push_back(i);
    } else {
        int id = std::stoi(stage_arg);
        if (id < 1 || id > 5) throw anl::ConfigError("--stage must be all or 1..5");
        stage_ids.push_back(id);
    }

    bool stalled = false;
    for (int id : stage_ids) {
        anl::StageReport rep = trainer.run_stage(id);
        std::cout << "stage " << id << " [" << rep.family << "] " << anl::stage_outcome_name(rep.outcome)
                  << ": steps=" << rep.env_steps << " episodes=" << rep.episodes
                  << " trailing_success=" << rep.trailing_success << "\n";
        if (rep.outcome == anl::StageOutcome::Stalled) {
            stalled = true;
            break;
        }
        if (rep.outcome == anl::StageOutcome::Interrupted) {
            std::cout << "interrupted; resume bundle at " << trainer.resume_dir(id) << "\n";
            break;
        }
    }
    return stalled ? 2 : 0;
}

int cmd_eval(const std::string& config_path, const std::string& checkpoint,
             const std::string& family_arg, int episodes, const std::string& ablate_arg) {
    anl::RunConfig cfg = anl::load_run_config(config_path);
    if (episodes <= 0) throw anl::ConfigError("--episodes must be positive");

    anl::Family family = family_arg.empty() ? cfg.eval.family : anl::family_from_name(family_arg);
    anl::ScenarioRanges ranges =
        (family == cfg.eval.family) ? cfg.eval.ranges : anl::default_ranges(family);
    ranges.base_robot = cfg.robot;
    anl::Ablation ablate = ablate_arg.empty() ? cfg.eval.ablate : anl::ablation_from_name(ablate_arg);

    anl::PolicyParams params = anl::load_checkpoint(checkpoint);
    anl::ActionBounds bounds{static_cast<float>(cfg.robot.v_max), static_cast<float>(cfg.robot.w_max)};

    std::vector<anl::ControllerSpec> controllers;
    auto policy_spec = [&](anl::Ablation ab) {
        anl::ControllerSpec spec;
        spec.make = [&params, bounds, ab]() {
            return std::make_unique<anl::PolicyController>(params, bounds, ab);
        };
        anl::PolicyController tmp(params, bounds, ab);
        spec.name = tmp.name();
        return spec;
    };
    if (ablate == anl::Ablation::None) {
        controllers.push_back(policy_spec(anl::Ablation::None));
        controllers.push_back(policy_spec(anl::Ablation::Stable));
        controllers.push_back(policy_spec(anl::Ablation::Adaptive));
        controllers.push_back({"straight_p", []() { return std::make_unique<anl::StraightPController>(); }});
        controllers.push_back({"greedy_elev", []() { return std::make_unique<anl::GreedyElevationController>(); }});
    } else {
        controllers.push_back(policy_spec(ablate));
    }

    std::vector<std::vector<anl::EpisodeLog>> logs;
    anl::BenchmarkTable table = anl::run_benchmark(controllers, family, ranges, cfg.sim, cfg.sensors,
                                                   cfg.rewards, episodes, cfg.seed, &logs);

    std::string run_dir = cfg.out_dir + "/eval-" + hex64(anl::RunConfig::fnv64_text(cfg.raw_text)) +
                          "-" + std::to_string(cfg.seed);
    std::filesystem::create_directories(run_dir + "/logs");
    cfg.echo_into(run_dir);
    anl::emit_table_csv(table, run_dir + "/table.csv");
    anl::emit_table_json(table, run_dir + "/table.json");
    for (std::size_t c = 0; c < logs.size(); ++c)
        for (std::size_t i = 0; i < logs[c].size(); ++i)
            anl::save_episode_log(logs[c][i], run_dir + "/logs/" + table.rows[c].method + "_" +
                                                  std::to_string(i) + ".jsonl");

    std::cout << "scenario=" << table.scenario << " episodes=" << table.n_episodes << "\n";
    for (const anl::BenchRow& r : table.rows)
        std::cout << "  " << r.method << ": success=" << r.report.success
                  << " vibration_x100=" << r.report.vibration * 100.0
                  << " drift_x100=" << r.report.drift_sim * 100.0
                  << " elev_x100=" << r.report.elevation_change * 100.0 << "\n";
    std::cout << "outputs in " << run_dir << "\n";
    return 0;
}

int cmd_rollout(const std::string& checkpoint, const std::string& scenario_file,
                const std::string& record_path) {
    anl::ScenarioSpec scenario = anl::load_scenario(scenario_file);
    anl::PolicyParams params = anl::load_checkpoint(checkpoint);
    anl::ActionBounds bounds{static_cast<float>(scenario.robot.v_max),
                             static_cast<float>(scenario.robot.w_max)};
    anl::PolicyController controller(params, bounds, anl::Ablation::None);
    anl::SimConfig sim;
    anl::SensorConfig sensors;
    anl::RewardWeights rewards;
    anl::EpisodeLog log = anl::run_episode(controller, scenario, sim, sensors, rewards,
                                           anl::mix64(scenario.seed, 0x524f4cULL));
    anl::save_episode_log(log, record_path);
    std::cout << "wrote " << log.size() << " steps to " << record_path << " (outcome "
              << anl::terminal_name(log.outcome()) << ")\n";
    return 0;
}

int cmd_gen_terrain(const std::string& family_arg, std::uint64_t seed, const std::string& out_path) {
    anl::Family family = anl::family_from_name(family_arg);
    anl::ScenarioSpec spec = anl::sample_scenario(family, seed);
    anl::save_terrain(spec.terrain, out_path);
    std::string scenario_path = out_path + ".scenario";
    anl::save_scenario(spec, scenario_path, std::filesystem::path(out_path).filename().string());
    std::cout << "wrote " << out_path << " and " << scenario_path << "\n";
    return 0;
}

int cmd_plot(const std::vector<std::string>& log_paths, const std::string& out_path) {
    std::vector<std::pair<std::string, anl::EpisodeLog>> series;
    for (const std::string& p : log_paths) series.emplace_back(file_stem(p), anl::load_episode_log(p));
    anl::emit_stability_plot(series, out_path);
    std::cout << "wrote " << out_path << " (" << series.size() << " series)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"anl: adaptive navigation lab"};
    app.require_subcommand(1);

    std::string config_path, stage_arg = "all", resume_path;
    auto* train = app.add_subcommand("train", "run the staged training pipeline");
    train->add_option("--config", config_path, "run config file")->required();
    train->add_option("--stage", stage_arg, "all or a stage number 1..5");
    train->add_option("--resume", resume_path, "checkpoint or resume bundle to continue from");

    std::string eval_config, eval_ckpt, eval_family, eval_ablate;
    int eval_episodes = 0;
    auto* eval = app.add_subcommand("eval", "benchmark a checkpoint against baselines/ablations");
    eval->add_option("--config", eval_config, "run config file")->required();
    eval->add_option("--checkpoint", eval_ckpt, "policy checkpoint")->required();
    eval->add_option("--family", eval_family, "scenario family");
    eval->add_option("--episodes", eval_episodes, "episode count")->required();
    eval->add_option("--ablate", eval_ablate, "none|stable|adaptive");

    std::string ro_ckpt, ro_scenario, ro_record;
    auto* rollout = app.add_subcommand("rollout", "replay one scenario and record its step log");
    rollout->add_option("--checkpoint", ro_ckpt, "policy checkpoint")->required();
    rollout->add_option("--scenario-file", ro_scenario, "scenario key/value file")->required();
    rollout->add_option("--record", ro_record, "output JSON-Lines path")->required();

    std::string gt_family;
    std::uint64_t gt_seed = 0;
    std::string gt_out;
    auto* gen = app.add_subcommand("gen-terrain", "generate a terrain container + scenario file");
    gen->add_option("--family", gt_family, "scenario family")->required();
    gen->add_option("--seed", gt_seed, "generator seed")->required();
    gen->add_option("--out", gt_out, "output terrain path")->required();

    std::vector<std::string> plot_logs;
    std::string plot_out;
    auto* plot = app.add_subcommand("plot", "stability chart from episode logs");
    plot->add_option("--logs", plot_logs, "one or more JSON-Lines episode logs")->required();
    plot->add_option("--out", plot_out, "output SVG path")->required();

    try {
        app.parse(argc, argv);
        if (train->parsed()) return cmd_train(config_path, stage_arg, resume_path);
        if (eval->parsed()) return cmd_eval(eval_config, eval_ckpt, eval_family, eval_episodes, eval_ablate);
        if (rollout->parsed()) return cmd_rollout(ro_ckpt, ro_scenario, ro_record);
        if (gen->parsed()) return cmd_gen_terrain(gt_family, gt_seed, gt_out);
        if (plot->parsed()) return cmd_plot(plot_logs, plot_out);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    } catch (const anl::CurriculumStalled& e) {
        std::cerr << "curriculum stalled: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
