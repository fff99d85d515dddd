// Copyright (C) 2026 The trimask authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "trimask/trimask.hpp"

namespace fs = std::filesystem;
using namespace trimask;

namespace {

struct Overrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> budget;
    std::optional<double> tau2d, tau3d, beta, theta_2dext, eps_3d, bg_keep_prob;
    std::optional<std::size_t> k;
    bool no_smoothing = false;
};

void add_config_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_path, "JSON config file; flags override its fields")->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "master seed (falls back to config, then TRIMASK_SEED)");
    cmd->add_option("--budget", o.budget, "global target pruning rate in [0,1)");
    cmd->add_option("--tau2d", o.tau2d);
    cmd->add_option("--tau3d", o.tau3d);
    cmd->add_option("--beta", o.beta);
    cmd->add_option("--k", o.k);
    cmd->add_option("--theta-2dext", o.theta_2dext);
    cmd->add_option("--eps-3d", o.eps_3d);
    cmd->add_option("--bg-keep-prob", o.bg_keep_prob);
    cmd->add_flag("--no-smoothing", o.no_smoothing, "feed raw indicators to the candidate rules");
}

// defaults < config file < flags; seed additionally falls back to TRIMASK_SEED.
RunConfig resolve_config(const Overrides& o) {
    RunConfig cfg;
    bool file_has_seed = false;
    if (!o.config_path.empty()) {
        const auto j = read_json_file(o.config_path, ErrorCode::InvalidConfig);
        merge_config(cfg, j);
        file_has_seed = j.is_object() && j.contains("seed");
    }
    auto& p = cfg.pruner;
    if (o.seed) p.seed = *o.seed;
    else if (!file_has_seed) p.seed = seed_from_env().value_or(0);
    if (o.budget) p.budget = *o.budget;
    if (o.tau2d) p.thresholds.tau2d = *o.tau2d;
    if (o.tau3d) p.thresholds.tau3d = *o.tau3d;
    if (o.beta) p.ema.beta = *o.beta;
    if (o.k) p.ema.k = *o.k;
    if (o.theta_2dext) p.rules.theta_2dext = *o.theta_2dext;
    if (o.eps_3d) p.rules.eps_3d = *o.eps_3d;
    if (o.bg_keep_prob) p.bg_keep_prob = *o.bg_keep_prob;
    if (o.no_smoothing) p.smoothing = false;
    cfg.validate();
    return cfg;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    return out;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
}

int cmd_run(const std::string& trace_path, const Overrides& o, const fs::path& out_dir) {
    const auto cfg = resolve_config(o);
    const auto trace = load_trace(trace_path);
    const auto result = prune_episode(trace, cfg.pruner);
    ensure_dir(out_dir);
    save_masks(result, (out_dir / "masks.jsonl").string());
    auto csv = open_out(out_dir / "stats.csv");
    write_stats_csv(csv, result.stats);
    auto summary = open_out(out_dir / "summary.json");
    summary << summary_to_json(summarize(result, cfg.cost));
    return 0;
}

int cmd_simulate(const std::string& spec_path, std::optional<std::uint64_t> seed, const fs::path& out_dir) {
    ScenarioSpec spec;
    if (!spec_path.empty()) {
        spec = scenario_from_json(read_json_file(spec_path, ErrorCode::InvalidSpec));
    } else if (auto env = seed_from_env()) {
        spec.seed = *env;
    }
    if (seed) spec.seed = *seed;
    const auto ep = generate_episode(spec);
    ensure_dir(out_dir);
    save_trace(ep.trace, (out_dir / "trace.jsonl").string());
    auto gt = open_out(out_dir / "ground_truth.json");
    gt << truth_to_json(ep.truth).dump() << '\n';
    return 0;
}

int cmd_sweep(const std::string& trace_path, const std::string& grid_path, const Overrides& o,
              const fs::path& out_dir, std::size_t workers) {
    std::ifstream in(grid_path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + grid_path);
    nlohmann::ordered_json gj;
    try {
        gj = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, grid_path + ": " + e.what());
    }
    auto [grid, base_json] = parse_sweep_grid(gj);
    if (grid.num_points() == 0) {
        std::cerr << "error: sweep grid is empty\n";
        return 2;
    }
    auto cfg = resolve_config(o);
    merge_config(cfg, base_json);
    if (o.seed) cfg.pruner.seed = *o.seed;
    cfg.validate();
    const auto trace = load_trace(trace_path);
    const auto rows = run_sweep(trace, cfg, grid, workers);
    ensure_dir(out_dir);
    auto csv = open_out(out_dir / "sweep.csv");
    write_sweep_csv(csv, rows);
    return 0;
}

int cmd_maskgrid(const std::string& masks_path, const fs::path& out_path) {
    const auto file = load_masks(masks_path);
    grid_side(file.num_patches);
    const auto masks = file.masks();
    if (out_path.has_parent_path()) ensure_dir(out_path.parent_path());
    auto out = open_out(out_path);
    write_mask_grids(out, masks);
    return 0;
}

int cmd_stats(const std::string& masks_path, const Overrides& o, const std::string& out_path) {
    const auto cfg = resolve_config(o);
    const auto file = load_masks(masks_path);
    std::vector<std::size_t> conflicts;
    for (const auto& r : file.records) conflicts.push_back(r.conflicts);
    const auto masks = file.masks();
    const auto text = summary_to_json(summarize(file.episode_id, file.num_patches, masks, conflicts, cfg.cost));
    if (out_path.empty()) {
        std::cout << text;
    } else {
        auto out = open_out(out_path);
        out << text;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"trimask: tri-stage 2D/3D visual token pruning engine"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    Overrides run_o, sweep_o, stats_o;
    std::string trace_path, out_dir, spec_path, grid_path, masks_path, out_path;
    std::optional<std::uint64_t> sim_seed;
    std::size_t workers = 0;

    auto* run = app.add_subcommand("run", "prune a trace; writes masks.jsonl, stats.csv, summary.json");
    run->add_option("--trace", trace_path, "trace JSONL")->required();
    run->add_option("--out", out_dir, "output directory")->required();
    add_config_flags(run, run_o);

    auto* sim = app.add_subcommand("simulate", "generate a synthetic trace and its ground truth");
    sim->add_option("--spec", spec_path, "scenario JSON (defaults when omitted)")->check(CLI::ExistingFile);
    sim->add_option("--seed", sim_seed, "overrides the scenario seed");
    sim->add_option("--out", out_dir, "output directory")->required();

    auto* sweep = app.add_subcommand("sweep", "one-at-a-time hyperparameter sweep; writes sweep.csv");
    sweep->add_option("--trace", trace_path, "trace JSONL")->required();
    sweep->add_option("--grid", grid_path, "grid JSON")->required()->check(CLI::ExistingFile);
    sweep->add_option("--out", out_dir, "output directory")->required();
    sweep->add_option("--workers", workers, "parallel grid points (0 = hardware threads)");
    add_config_flags(sweep, sweep_o);

    auto* grid = app.add_subcommand("maskgrid", "per-step mask grids as CSV blocks");
    grid->add_option("--masks", masks_path, "masks JSONL")->required();
    grid->add_option("--out", out_path, "output CSV")->required();

    auto* stats = app.add_subcommand("stats", "episode summary of a masks file");
    stats->add_option("--masks", masks_path, "masks JSONL")->required();
    stats->add_option("--out", out_path, "summary JSON (stdout when omitted)");
    add_config_flags(stats, stats_o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*run) return cmd_run(trace_path, run_o, out_dir);
        if (*sim) return cmd_simulate(spec_path, sim_seed, out_dir);
        if (*sweep) return cmd_sweep(trace_path, grid_path, sweep_o, out_dir, workers);
        if (*grid) return cmd_maskgrid(masks_path, out_path);
        if (*stats) return cmd_stats(masks_path, stats_o, out_path);
    } catch (const trimask::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
