#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "grl/config.hpp"
#include "grl/gradcheck.hpp"
#include "grl/qnet.hpp"
#include "grl/trainer.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "run config file (key = value lines)");
    cmd->add_option("--set", opts.overrides, "override a config key, dotted.key=value")
        ->take_all();
    cmd->add_option("--seed", opts.seed, "root seed for all randomness");
    cmd->add_option("--out", opts.out_dir, "output directory");
}

grl::RunConfig resolve(const CommonOpts& opts) {
    grl::RunConfig cfg;
    if (!opts.config_path.empty()) cfg = grl::load_run_config(opts.config_path);
    for (const std::string& o : opts.overrides) grl::apply_override(cfg, o);
    if (opts.seed) {
        // one root seed fans out to the configured number of training seeds
        std::vector<std::uint64_t> seeds;
        for (std::size_t i = 0; i < cfg.training.seeds.size(); ++i) seeds.push_back(*opts.seed + i);
        cfg.training.seeds = seeds;
    }
    if (!opts.out_dir.empty()) cfg.output_dir = opts.out_dir;
    cfg.validate();
    return cfg;
}

std::string run_prefix(const grl::RunConfig& cfg) {
    return cfg.run_label + "_" + grl::variant_name(cfg.training.variant);
}

int cmd_train(const CommonOpts& opts) {
    grl::RunConfig cfg = resolve(opts);
    fs::create_directories(cfg.output_dir);
    {
        std::ofstream os(fs::path(cfg.output_dir) / (cfg.run_label + "_resolved.cfg"));
        os << grl::resolved_config_text(cfg);
    }

    grl::EncoderConfig encoder = cfg.encoder();
    std::string prefix = run_prefix(cfg);
    double best_mean = -std::numeric_limits<double>::infinity();
    bool any_diverged = false;
    std::vector<grl::AggregateRow> aggregate;

    for (std::uint64_t seed : cfg.training.seeds) {
        grl::SeedRunResult run = grl::train_seed(cfg.scenario, encoder, cfg.training, seed);
        std::string stem = prefix + "_seed" + std::to_string(seed);
        grl::write_metrics_csv((fs::path(cfg.output_dir) / (stem + ".csv")).string(), run.episodes);
        grl::save_checkpoint((fs::path(cfg.output_dir) / (stem + ".ckpt")).string(), run.final_net);
        for (const auto& m : run.episodes)
            aggregate.push_back({grl::variant_name(cfg.training.variant), seed, m});
        if (run.diverged) {
            std::cerr << "seed " << seed << " diverged: " << run.diagnostic << "\n";
            any_diverged = true;
            continue;
        }
        // With periodic best-evaluation snapshots enabled, the per-seed best
        // network is the artifact of record; otherwise it equals final_net.
        const grl::QNetwork& artifact =
            cfg.training.best_eval_every > 0 ? run.best_net : run.final_net;
        if (cfg.training.best_eval_every > 0)
            grl::save_checkpoint((fs::path(cfg.output_dir) / (stem + "_best.ckpt")).string(),
                                 run.best_net);
        grl::EvalResult eval =
            grl::evaluate(artifact, cfg.scenario, encoder, 10, grl::derive_seed(seed, 777));
        std::cout << "seed " << seed << ": episodes=" << run.episodes.size()
                  << " updates=" << run.gradient_updates << " eval_reward=" << eval.mean << " +- "
                  << eval.stddev << "\n";
        if (eval.mean > best_mean) {
            best_mean = eval.mean;
            grl::save_checkpoint((fs::path(cfg.output_dir) / (prefix + "_best.ckpt")).string(),
                                 artifact);
        }
    }
    grl::write_aggregate_csv((fs::path(cfg.output_dir) / (prefix + "_aggregate.csv")).string(),
                             aggregate);
    return any_diverged ? kExitRuntime : kExitOk;
}

int cmd_eval(const CommonOpts& opts, const std::string& checkpoint, int episodes) {
    if (checkpoint == "baseline")
        throw std::invalid_argument("the baseline policy has no checkpoint; use the baseline command");
    grl::RunConfig cfg = resolve(opts);
    grl::QNetwork net = grl::load_checkpoint(checkpoint);
    if (net.variant != cfg.training.variant)
        throw std::invalid_argument("checkpoint variant '" + grl::variant_name(net.variant) +
                                    "' does not match configured variant '" +
                                    grl::variant_name(cfg.training.variant) + "'");
    net.literal_adjacency_norm = cfg.training.literal_adjacency_norm;
    std::uint64_t seed = opts.seed.value_or(cfg.training.seeds.front());
    grl::EvalResult result = grl::evaluate(net, cfg.scenario, cfg.encoder(), episodes, seed);
    std::cout << "eval reward: " << result.mean << " +- " << result.stddev << " over " << episodes
              << " episodes\n";

    fs::create_directories(cfg.output_dir);
    std::ofstream os(fs::path(cfg.output_dir) / (run_prefix(cfg) + "_eval.csv"));
    os << "episode,total_reward\n";
    for (std::size_t i = 0; i < result.episode_rewards.size(); ++i)
        os << i << ',' << result.episode_rewards[i] << '\n';
    return kExitOk;
}

int cmd_baseline(const CommonOpts& opts, int episodes) {
    grl::RunConfig cfg = resolve(opts);
    std::uint64_t seed = opts.seed.value_or(cfg.training.seeds.front());
    grl::BaselineResult result = grl::run_baseline(cfg.scenario, episodes, seed);
    std::cout << "baseline reward: " << result.summary.mean << " +- " << result.summary.stddev
              << " over " << episodes << " episodes\n";

    fs::create_directories(cfg.output_dir);
    std::vector<grl::AggregateRow> rows;
    for (const auto& m : result.episodes) rows.push_back({"baseline", seed, m});
    grl::write_aggregate_csv((fs::path(cfg.output_dir) / (cfg.run_label + "_baseline.csv")).string(),
                             rows);
    return kExitOk;
}

int cmd_gradcheck(bool corrupt_gcn) {
    grl::GradCheckOptions opts;
    opts.corrupt_gcn = corrupt_gcn;
    grl::GradCheckReport report = grl::run_gradcheck(opts);
    for (const auto& e : report.entries)
        std::cout << e.name << ": max relative error " << e.max_rel_error << " -> "
                  << (e.pass ? "ok" : "FAIL") << "\n";
    std::cout << "runtime: " << report.runtime_s << " s\n";
    if (!report.all_pass) {
        for (const auto& e : report.entries)
            if (!e.pass) std::cerr << "gradcheck failed for " << e.name << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

// Merges per-seed metrics CSVs (named <label>_<variant>_seed<N>.csv) into one
// aggregate with variant,seed prefix columns.
int cmd_export(const std::vector<std::string>& inputs, const std::string& out_path) {
    std::ofstream os(out_path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open output: " + out_path);
    bool header_written = false;
    for (const std::string& input : inputs) {
        std::string name = fs::path(input).stem().string();
        auto seed_pos = name.rfind("_seed");
        if (seed_pos == std::string::npos)
            throw std::invalid_argument("cannot infer seed from filename: " + input);
        std::string seed = name.substr(seed_pos + 5);
        std::string rest = name.substr(0, seed_pos);
        auto var_pos = rest.rfind('_');
        if (var_pos == std::string::npos)
            throw std::invalid_argument("cannot infer variant from filename: " + input);
        std::string variant = rest.substr(var_pos + 1);

        std::ifstream is(input);
        if (!is) throw std::runtime_error("cannot open input: " + input);
        std::string line;
        bool first = true;
        while (std::getline(is, line)) {
            if (first) {
                first = false;
                if (!header_written) {
                    os << "variant,seed," << line << '\n';
                    header_written = true;
                }
                continue;
            }
            os << variant << ',' << seed << ',' << line << '\n';
        }
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"graph reinforcement learning for cooperative lane changing"};
    app.require_subcommand(1);

    CommonOpts train_opts, eval_opts, baseline_opts;
    std::string checkpoint;
    int eval_episodes = 10;
    int baseline_episodes = 10;
    bool corrupt_gcn = false;
    std::vector<std::string> export_inputs;
    std::string export_out = "aggregate.csv";

    CLI::App* train = app.add_subcommand("train", "train a policy for the configured variant");
    add_common(train, train_opts);

    CLI::App* eval = app.add_subcommand("eval", "greedy evaluation of a checkpoint");
    add_common(eval, eval_opts);
    eval->add_option("checkpoint", checkpoint, "checkpoint file")->required();
    eval->add_option("--episodes", eval_episodes, "evaluation episodes");

    CLI::App* baseline = app.add_subcommand("baseline", "run the rule-based policy");
    add_common(baseline, baseline_opts);
    baseline->add_option("--episodes", baseline_episodes, "baseline episodes");

    CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient self-check");
    gradcheck->add_flag("--corrupt-gcn", corrupt_gcn,
                        "negative control: perturb the analytic GCN gradient");

    CLI::App* exp = app.add_subcommand("export", "merge per-seed metrics CSVs into one aggregate");
    exp->add_option("inputs", export_inputs, "per-seed metrics CSV files")->required();
    exp->add_option("--out", export_out, "aggregate CSV path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train(train_opts);
        if (eval->parsed()) return cmd_eval(eval_opts, checkpoint, eval_episodes);
        if (baseline->parsed()) return cmd_baseline(baseline_opts, baseline_episodes);
        if (gradcheck->parsed()) return cmd_gradcheck(corrupt_gcn);
        if (exp->parsed()) return cmd_export(export_inputs, export_out);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        // missing config and bad checkpoints are validation failures
        std::string what = e.what();
        if (what.find("config not found") != std::string::npos ||
            what.find("checkpoint") != std::string::npos)
            return kExitValidation;
        return kExitRuntime;
    }
    return kExitOk;
}
