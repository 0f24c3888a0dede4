// Copyright 2026 The CODA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "coda_app/app.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"

#include "coda/analysis.hpp"
#include "coda/serialization.hpp"
#include "coda_app/figures.hpp"

#ifndef CODA_VERSION
#define CODA_VERSION "0.0.0"
#endif

namespace coda::app {

namespace {

using json = nlohmann::json;

class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& what) : std::runtime_error(what), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

template <class F>
auto stage(const std::string& name, F&& body) -> decltype(body())
{
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<std::string> variant;
    std::optional<double> lambda;
    std::optional<double> alpha;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool overrides)
{
    cmd->add_option("--config", f.config, "Run configuration file (JSON)");
    cmd->add_option("--seed", f.seed, "Seed override");
    cmd->add_option("--out", f.out, "Output directory");
    if (overrides) {
        cmd->add_option("--variant", f.variant, "baseline | uncond_aug | qcond_aug | coda_cfg | coda_classifier");
        cmd->add_option("--lambda", f.lambda, "Classifier guidance scale");
        cmd->add_option("--alpha", f.alpha, "Synthetic share of the training pool");
    }
}

RunConfig load_config(const CommonFlags& f)
{
    return stage("config", [&] {
        RunConfig cfg = f.config.empty() ? RunConfig{} : load_run_config(f.config);
        if (f.seed) cfg.seed = *f.seed;
        if (f.variant) cfg.variant = variant_from_string(*f.variant);
        if (f.lambda) cfg.guidance.lambda = *f.lambda;
        if (f.alpha) cfg.alpha = *f.alpha;
        cfg.validate();
        return cfg;
    });
}

std::filesystem::path out_dir(const CommonFlags& f, const std::string& command)
{
    std::filesystem::path dir = f.out.empty() ? default_out_dir(command) : std::filesystem::path(f.out);
    std::filesystem::create_directories(dir);
    return dir;
}

std::ofstream open_out(const std::filesystem::path& p)
{
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    return os;
}

void write_text(const std::filesystem::path& p, const std::string& text)
{
    auto os = open_out(p);
    os << text;
    if (!text.empty() && text.back() != '\n') os << '\n';
}

// Written before any result so every artifact can be traced to its inputs.
void write_metadata(const std::filesystem::path& dir, const std::string& command, const RunConfig& cfg,
                    const json& extra = json::object())
{
    json meta = {{"tool", "coda"},
                 {"version", version()},
                 {"command", command},
                 {"seed", cfg.seed},
                 {"config_hash", config_hash(cfg)}};
    for (const auto& [k, v] : extra.items()) meta[k] = v;
    write_text(dir / "metadata.json", meta.dump(2));
    write_text(dir / "config.json", to_json_text(cfg));
}

std::pair<double, double> parse_pair(const std::string& text, const std::string& flag)
{
    std::istringstream is(text);
    double a = 0.0, b = 0.0;
    char comma = 0;
    if (!(is >> a >> comma >> b) || comma != ',') throw InvalidArgument(flag + ": expected 'x,y'");
    return {a, b};
}

OfflineDataset dataset_for(const RunConfig& cfg, const std::string& path)
{
    return stage("dataset", [&] {
        if (path.empty()) return run_dataset(cfg);
        std::ifstream in(path);
        if (!in) throw InvalidArgument("cannot open dataset " + path);
        return read_dataset(in);
    });
}

// --- subcommands -----------------------------------------------------------

int cmd_gen_data(const CommonFlags& f, std::optional<std::size_t> n)
{
    RunConfig cfg = load_config(f);
    if (n) cfg.dataset.n = *n;
    const auto dir = out_dir(f, "gen-data");
    write_metadata(dir, "gen-data", cfg);
    const OfflineDataset data = dataset_for(cfg, "");
    stage("write", [&] {
        auto os = open_out(dir / "dataset.csv");
        write_dataset(os, data);
    });
    std::cout << "wrote " << data.size() << " records to " << (dir / "dataset.csv").string() << '\n';
    return 0;
}

int cmd_train(const CommonFlags& f, const std::string& data_path, const std::string& kind_name)
{
    const RunConfig cfg = load_config(f);
    PriorKind kind = prior_kind_for(cfg.variant);
    if (!kind_name.empty()) {
        kind = stage("config", [&] {
            for (PriorKind k : {PriorKind::Unconditional, PriorKind::Policy, PriorKind::Return})
                if (to_string(k) == kind_name) return k;
            throw InvalidArgument("--kind: unknown prior kind '" + kind_name + "'");
        });
    }
    const auto dir = out_dir(f, "train-diffusion");
    write_metadata(dir, "train-diffusion", cfg, {{"prior_kind", to_string(kind)}});
    const OfflineDataset data = dataset_for(cfg, data_path);
    const TrainedPrior prior = stage("train-diffusion", [&] {
        return train_prior(data, kind, cfg.diffusion, prior_seed(cfg.seed, kind), cfg.q_target);
    });
    stage("write", [&] {
        save_prior(dir / "prior", prior);
        auto os = open_out(dir / "loss.csv");
        write_loss_curve(os, prior.losses);
    });
    std::cout << "trained " << to_string(kind) << " prior; final loss "
              << (prior.losses.losses.empty() ? 0.0 : prior.losses.losses.back()) << '\n';
    return 0;
}

int cmd_sample(const CommonFlags& f, const std::string& prior_dir, std::size_t n, const std::string& theta_text,
               std::optional<double> w)
{
    const RunConfig cfg = load_config(f);
    const TrainedPrior prior = stage("load-prior", [&] { return load_prior(prior_dir); });
    JointPolicy policy;
    policy.theta_x = cfg.learner.init.ax;
    policy.theta_y = cfg.learner.init.ay;
    if (!theta_text.empty()) {
        const auto [x, y] = stage("config", [&] { return parse_pair(theta_text, "--theta"); });
        policy.theta_x = x;
        policy.theta_y = y;
    }
    GuidanceHook hook = cfg.guidance;
    if (w) hook.w = *w;
    switch (prior.kind) {
    case PriorKind::Unconditional: hook.mode = hook.lambda > 0.0 ? GuidanceMode::Classifier : GuidanceMode::None; break;
    case PriorKind::Policy: hook.mode = GuidanceMode::CFG; break;
    case PriorKind::Return: hook.mode = GuidanceMode::QCond; break;
    }

    const auto dir = out_dir(f, "sample");
    write_metadata(dir, "sample", cfg,
                   {{"prior", prior_dir},
                    {"prior_kind", to_string(prior.kind)},
                    {"guidance", to_string(hook.mode)},
                    {"lambda", hook.lambda},
                    {"w", hook.w},
                    {"theta", {policy.theta_x, policy.theta_y}},
                    {"n", n}});
    const std::vector<JointAction> actions = stage("sample", [&] {
        SamplerSetup setup;
        setup.model = &prior.model;
        setup.normalizer = &prior.normalizer;
        setup.schedule = cfg.diffusion.schedule;
        setup.churn = cfg.diffusion.churn;
        setup.options.workers = cfg.diffusion.workers;
        std::optional<Vector> condition;
        if (hook.mode == GuidanceMode::CFG) condition = policy.descriptor();
        if (hook.mode == GuidanceMode::QCond) condition = Vector::Constant(1, prior.return_condition.value_or(0.0));
        const Matrix z = sample_trajectories(setup, hook, &policy, condition, n, derive_seed(cfg.seed, "cli-sample"));
        return actions_from_trajectories(prior.normalizer.inverse_rows(z));
    });
    stage("write", [&] {
        auto os = open_out(dir / "samples.csv");
        write_actions(os, actions);
    });
    std::cout << "wrote " << actions.size() << " samples (" << to_string(hook.mode) << ")\n";
    return 0;
}

int cmd_run(const CommonFlags& f)
{
    const RunConfig cfg = load_config(f);
    const auto dir = out_dir(f, "run");
    write_metadata(dir, "run", cfg, {{"variant", to_string(cfg.variant)}});
    const RunLog log = stage("run", [&] { return run(cfg); });
    stage("write", [&] {
        auto steps = open_out(dir / "steps.csv");
        write_step_log(steps, log.steps);
        auto epochs = open_out(dir / "epochs.csv");
        write_epoch_log(epochs, log.epochs);
        if (!log.first_synthetic.empty()) {
            auto syn = open_out(dir / "synthetic.csv");
            write_actions(syn, log.first_synthetic);
        }
        write_text(dir / "summary.json", run_summary_json(log));
    });
    std::cout << to_string(cfg.variant) << " seed " << cfg.seed << ": final theta (" << log.final_policy.theta_x << ", "
              << log.final_policy.theta_y << "), return " << log.final_return << " [" << log.wall_seconds << " s]\n";
    return 0;
}

int cmd_sweep(const CommonFlags& f, const std::vector<std::string>& variants, int seeds, int jobs)
{
    const RunConfig base = load_config(f);
    std::vector<RunConfig> configs = stage("config", [&] {
        if (seeds < 1) throw InvalidArgument("--seeds: must be >= 1");
        std::vector<RunConfig> out;
        const std::vector<std::string> names = variants.empty() ? std::vector<std::string>{to_string(base.variant)} : variants;
        for (const auto& name : names) {
            for (int s = 0; s < seeds; ++s) {
                RunConfig c = base;
                c.variant = variant_from_string(name);
                c.seed = base.seed + static_cast<std::uint64_t>(s);
                out.push_back(c);
            }
        }
        return out;
    });
    const auto dir = out_dir(f, "sweep");
    write_metadata(dir, "sweep", base, {{"variants", variants}, {"seeds", seeds}});
    PriorCache cache;
    const SweepResult result = stage("sweep", [&] { return sweep(configs, jobs, &cache); });
    stage("write", [&] {
        auto rows = open_out(dir / "runs.csv");
        rows << "label,variant,seed,ok,final_theta_x,final_theta_y,final_return,converged_return,error\n";
        for (const auto& r : result.rows) {
            rows << r.label << ',' << to_string(r.variant) << ',' << r.seed << ',' << (r.ok ? 1 : 0) << ','
                 << format_double(r.log.final_policy.theta_x) << ',' << format_double(r.log.final_policy.theta_y) << ','
                 << format_double(r.final_return) << ',' << format_double(r.log.converged_return) << ",\""
                 << r.error << "\"\n";
        }
        auto agg = open_out(dir / "aggregate.csv");
        agg << "label,variant,runs,failures,mean_return,stderr_return\n";
        for (const auto& a : result.aggregates) {
            agg << a.label << ',' << to_string(a.variant) << ',' << a.runs << ',' << a.failures << ','
                << format_double(a.mean_return) << ',' << format_double(a.stderr_return) << '\n';
            std::cout << a.label << ": " << a.mean_return << " +- " << a.stderr_return << " (" << a.runs - a.failures
                      << "/" << a.runs << " ok)\n";
        }
    });
    return 0;
}

int cmd_analyze(const CommonFlags& f, const std::vector<std::string>& samples, const std::string& data_path,
                const std::string& theta_text, double stddev)
{
    const RunConfig cfg = load_config(f);
    const auto dir = out_dir(f, "analyze");
    write_metadata(dir, "analyze", cfg, {{"samples", samples}});
    std::ostringstream report;
    report.precision(10);

    if (!samples.empty()) {
        JointPolicy policy;
        policy.theta_x = cfg.learner.init.ax;
        policy.theta_y = cfg.learner.init.ay;
        if (!theta_text.empty()) {
            const auto [x, y] = stage("config", [&] { return parse_pair(theta_text, "--theta"); });
            policy.theta_x = x;
            policy.theta_y = y;
        }
        std::optional<OfflineDataset> reference;
        if (!data_path.empty()) reference = dataset_for(cfg, data_path);
        stage("analyze", [&] {
            report << "theta_x=" << policy.theta_x << "\ntheta_y=" << policy.theta_y << "\nstd=" << stddev << '\n';
            for (std::size_t k = 0; k < samples.size(); ++k) {
                std::ifstream in(samples[k]);
                if (!in) throw InvalidArgument("cannot open samples " + samples[k]);
                const auto actions = read_actions(in);
                report << "samples[" << k << "].path=" << samples[k] << '\n';
                report << "samples[" << k << "].mean_policy_loglik=" << mean_policy_loglik(actions, policy, stddev) << '\n';
                if (reference) {
                    const auto diag = distribution_diagnostics(actions, *reference);
                    for (const auto& d : diag.dims) {
                        report << "samples[" << k << "]." << d.name << ".mean_gap=" << d.mean_gap << '\n';
                        report << "samples[" << k << "]." << d.name << ".var_gap=" << d.var_gap << '\n';
                        report << "samples[" << k << "]." << d.name << ".ks=" << d.ks << '\n';
                    }
                }
            }
        });
    } else {
        // No samples: closed-form checks on the configured game and dataset.
        const OfflineDataset data = dataset_for(cfg, data_path);
        stage("analyze", [&] {
            Rng rng = make_rng(cfg.seed, "analyze");
            if (cfg.game.kind == GameKind::Multiplication) {
                const auto cf = constant_field_check(data, rng);
                report << "constant_field.expected_x=" << cf.expected.first << "\nconstant_field.expected_y="
                       << cf.expected.second << "\nconstant_field.max_deviation=" << cf.max_deviation << '\n';
            }
            if (cfg.game.kind == GameKind::TwinPeaks) {
                LearnerConfig lc = cfg.learner;
                lc.full_batch = true;
                const auto fp = twin_peaks_fixed_point_report(data, lc);
                report << "fixed_point.predicted_x=" << fp.predicted.ax << "\nfixed_point.predicted_y=" << fp.predicted.ay
                       << "\nfixed_point.empirical_x=" << fp.empirical.ax << "\nfixed_point.empirical_y="
                       << fp.empirical.ay << "\nfixed_point.gap_x=" << fp.gap.ax << "\nfixed_point.gap_y=" << fp.gap.ay
                       << '\n';
            }
            const auto battery = contraction_battery({-0.5, 0.0, 0.1, 0.5, 1.0, 1.5, 2.0, 2.5}, 100, rng);
            for (const auto& c : battery.cases) {
                report << "contraction[" << c.lambda << "].class=" << to_string(c.kind) << "\ncontraction[" << c.lambda
                       << "].max_law_error=" << c.max_law_error << "\ncontraction[" << c.lambda
                       << "].passed=" << (c.passed ? "true" : "false") << '\n';
            }
            report << "contraction.passed=" << (battery.passed ? "true" : "false") << '\n';
        });
    }
    stage("write", [&] { write_text(dir / "report.txt", report.str()); });
    std::cout << report.str();
    return 0;
}

int cmd_repro(int figure, const CommonFlags& f, int seeds, int jobs, const std::string& coda)
{
    FigureSpec spec;
    spec.figure = figure;
    spec.seeds = seeds;
    spec.jobs = jobs;
    spec.base_seed = f.seed.value_or(0);
    const Variant coda_variant = stage("config", [&] {
        if (coda == "classifier") return Variant::CodaClassifier;
        if (coda == "cfg") return Variant::CodaCFG;
        throw InvalidArgument("--coda: expected 'classifier' or 'cfg'");
    });
    spec.variants = {Variant::Baseline, Variant::UncondAug, Variant::QCondAug, coda_variant};
    const std::string command = "repro-fig" + std::to_string(figure);
    const auto dir = out_dir(f, command);
    write_metadata(dir, command, figure_config(figure, coda_variant, spec.base_seed),
                   {{"seeds", seeds}, {"variants", {"baseline", "uncond_aug", "qcond_aug", to_string(coda_variant)}}});
    const FigureResult result = stage("runs", [&] { return reproduce_figure(spec); });
    stage("plot", [&] { write_figure(dir, result); });
    for (std::size_t v = 0; v < result.variants.size(); ++v) {
        double mean = 0.0;
        for (const auto& log : result.logs[v]) mean += log.final_return / static_cast<double>(result.logs[v].size());
        std::cout << to_string(result.variants[v]) << ": mean final return " << mean << '\n';
    }
    return 0;
}

} // namespace

std::string version() { return CODA_VERSION; }

std::filesystem::path default_out_dir(const std::string& command)
{
    const char* root = std::getenv("CODA_OUT_ROOT");
    return std::filesystem::path(root && *root ? root : "coda-out") / command;
}

int run_cli(int argc, const char* const* argv)
{
    CLI::App app{"coda: policy-conditioned diffusion augmentation for offline cooperative games"};
    app.set_version_flag("--version", version());
    app.require_subcommand(1);

    CommonFlags flags;

    auto* gen = app.add_subcommand("gen-data", "Generate an offline dataset");
    add_common(gen, flags, false);
    std::optional<std::size_t> n_records;
    gen->add_option("--n", n_records, "Number of records");

    auto* train_cmd = app.add_subcommand("train-diffusion", "Train a diffusion prior on a dataset");
    add_common(train_cmd, flags, true);
    std::string data_path, kind_name;
    train_cmd->add_option("--data", data_path, "Dataset file (default: generate from config)");
    train_cmd->add_option("--kind", kind_name, "unconditional | policy | return (default: from variant)");

    auto* sample_cmd = app.add_subcommand("sample", "Draw trajectories from a trained prior");
    add_common(sample_cmd, flags, true);
    std::string prior_dir, theta;
    std::size_t n_samples = 1000;
    std::optional<double> w;
    sample_cmd->add_option("--prior", prior_dir, "Prior directory written by train-diffusion")->required();
    sample_cmd->add_option("--n", n_samples, "Number of samples");
    sample_cmd->add_option("--theta", theta, "Policy parameters 'x,y' (default: learner init)");
    sample_cmd->add_option("--w", w, "CFG scale");

    auto* run_cmd = app.add_subcommand("run", "Execute one training run");
    add_common(run_cmd, flags, true);

    auto* sweep_cmd = app.add_subcommand("sweep", "Run variants over several seeds and aggregate");
    add_common(sweep_cmd, flags, true);
    std::vector<std::string> variants;
    int seeds = 5, jobs = 1;
    sweep_cmd->add_option("--variants", variants, "Variants to sweep")->delimiter(',');
    sweep_cmd->add_option("--seeds", seeds, "Seeds per variant");
    sweep_cmd->add_option("--jobs", jobs, "Parallel runs");

    auto* analyze_cmd = app.add_subcommand("analyze", "Steering metrics and closed-form checks");
    add_common(analyze_cmd, flags, true);
    std::vector<std::string> sample_files;
    double stddev = 1.0;
    analyze_cmd->add_option("--samples", sample_files, "Sample files (ax,ay)");
    analyze_cmd->add_option("--data", data_path, "Reference dataset for distribution diagnostics");
    analyze_cmd->add_option("--theta", theta, "Policy parameters 'x,y'");
    analyze_cmd->add_option("--std", stddev, "Surrogate policy standard deviation");

    std::string coda = "classifier";
    auto* fig1 = app.add_subcommand("repro-fig1", "Multiplication game figure");
    add_common(fig1, flags, false);
    fig1->add_option("--seeds", seeds, "Seeds per variant");
    fig1->add_option("--jobs", jobs, "Parallel runs");
    fig1->add_option("--coda", coda, "CODA variant: classifier | cfg");
    auto* fig2 = app.add_subcommand("repro-fig2", "Twin Peaks figure");
    add_common(fig2, flags, false);
    fig2->add_option("--seeds", seeds, "Seeds per variant");
    fig2->add_option("--jobs", jobs, "Parallel runs");
    fig2->add_option("--coda", coda, "CODA variant: classifier | cfg");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*gen) return cmd_gen_data(flags, n_records);
        if (*train_cmd) return cmd_train(flags, data_path, kind_name);
        if (*sample_cmd) return cmd_sample(flags, prior_dir, n_samples, theta, w);
        if (*run_cmd) return cmd_run(flags);
        if (*sweep_cmd) return cmd_sweep(flags, variants, seeds, jobs);
        if (*analyze_cmd) return cmd_analyze(flags, sample_files, data_path, theta, stddev);
        if (*fig1) return cmd_repro(1, flags, seeds, jobs, coda);
        if (*fig2) return cmd_repro(2, flags, seeds, jobs, coda);
    } catch (const StageError& e) {
        std::cerr << "error [" << e.stage() << "]: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error [io]: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

int run_cli(const std::vector<std::string>& args)
{
    std::vector<const char*> argv{"coda"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

} // namespace coda::app
