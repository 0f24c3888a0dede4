// Copyright 2026 The CODA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "coda_app/figures.hpp"

#include <fstream>
#include <stdexcept>

#include "coda/serialization.hpp"
#include "coda_app/svg.hpp"

namespace coda::app {

namespace {

std::string color_for(Variant v)
{
    switch (v) {
    case Variant::Baseline: return "#1f77b4";
    case Variant::UncondAug: return "#ff7f0e";
    case Variant::QCondAug: return "#2ca02c";
    case Variant::CodaCFG: return "#9467bd";
    case Variant::CodaClassifier: return "#d62728";
    }
    return "#000000";
}

std::ofstream open_out(const std::filesystem::path& p)
{
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    return os;
}

} // namespace

RunConfig figure_config(int figure, Variant variant, std::uint64_t seed)
{
    RunConfig c;
    c.variant = variant;
    c.seed = seed;
    c.policy_steps = 10;
    if (figure == 1) {
        c.game = GameSpec::multiplication();
        c.dataset.law = DatasetLaw::Uniform;
        c.epochs = 30;
    } else if (figure == 2) {
        c.game = GameSpec::twin_peaks(1.0, 4.0, 5.0);
        c.dataset.law = DatasetLaw::SymmetricUniform;
        c.epochs = 100;
    } else {
        throw InvalidArgument("figure must be 1 or 2");
    }
    return c;
}

FigureResult reproduce_figure(const FigureSpec& spec, PriorCache* cache)
{
    if (spec.seeds < 1) throw InvalidArgument("figure: seeds must be >= 1");
    if (spec.variants.empty()) throw InvalidArgument("figure: no variants");
    PriorCache local;
    if (!cache) cache = &local;

    FigureResult out;
    out.figure = spec.figure;
    out.variants = spec.variants;
    const RunConfig first = figure_config(spec.figure, spec.variants.front(), spec.base_seed);
    out.dataset = run_dataset(first);
    out.optimum = grid_optimum(first.game, 401);

    std::vector<RunConfig> configs;
    for (Variant v : spec.variants)
        for (int s = 0; s < spec.seeds; ++s)
            configs.push_back(figure_config(spec.figure, v, spec.base_seed + static_cast<std::uint64_t>(s)));
    SweepResult sweep_result = sweep(configs, spec.jobs, cache);

    out.logs.assign(spec.variants.size(), {});
    for (std::size_t i = 0; i < sweep_result.rows.size(); ++i) {
        auto& row = sweep_result.rows[i];
        if (!row.ok) {
            throw std::runtime_error("run " + row.label + " seed " + std::to_string(row.seed) + ": " + row.error);
        }
        out.logs[i / static_cast<std::size_t>(spec.seeds)].push_back(std::move(row.log));
    }
    return out;
}

void write_figure(const std::filesystem::path& dir, const FigureResult& r)
{
    std::filesystem::create_directories(dir);
    {
        auto os = open_out(dir / "dataset.csv");
        write_dataset(os, r.dataset);
    }
    {
        auto os = open_out(dir / "paths.csv");
        os << "variant,seed,step,theta_x,theta_y,return\n";
        for (std::size_t v = 0; v < r.variants.size(); ++v)
            for (const auto& log : r.logs[v])
                for (const auto& s : log.steps)
                    os << to_string(r.variants[v]) << ',' << log.seed << ',' << s.step << ',' << format_double(s.theta_x)
                       << ',' << format_double(s.theta_y) << ',' << format_double(s.ret) << '\n';
    }

    // Mean return across seeds at each update.
    std::vector<std::vector<double>> mean_curves(r.variants.size());
    for (std::size_t v = 0; v < r.variants.size(); ++v) {
        const auto& logs = r.logs[v];
        const std::size_t len = logs.front().steps.size();
        mean_curves[v].assign(len, 0.0);
        for (const auto& log : logs)
            for (std::size_t k = 0; k < len; ++k) mean_curves[v][k] += log.steps[k].ret / static_cast<double>(logs.size());
    }
    {
        auto os = open_out(dir / "returns.csv");
        os << "step";
        for (Variant v : r.variants) os << ',' << to_string(v);
        os << '\n';
        for (std::size_t k = 0; k < mean_curves.front().size(); ++k) {
            os << k;
            for (const auto& c : mean_curves) os << ',' << format_double(k < c.size() ? c[k] : c.back());
            os << '\n';
        }
    }
    {
        auto os = open_out(dir / "summary.csv");
        os << "variant,seed,config_hash,final_theta_x,final_theta_y,final_return,converged_theta_x,converged_theta_y,"
              "converged_return\n";
        for (std::size_t v = 0; v < r.variants.size(); ++v)
            for (const auto& log : r.logs[v])
                os << to_string(r.variants[v]) << ',' << log.seed << ',' << log.config_hash << ','
                   << format_double(log.final_policy.theta_x) << ',' << format_double(log.final_policy.theta_y) << ','
                   << format_double(log.final_return) << ',' << format_double(log.converged_theta.ax) << ','
                   << format_double(log.converged_theta.ay) << ',' << format_double(log.converged_return) << '\n';
    }

    const std::string game = r.figure == 1 ? "Multiplication" : "Twin Peaks";
    const double lo = r.dataset.game.action_low, hi = r.dataset.game.action_high;

    SvgPlot scatter(game + ": offline dataset", "a^x", "a^y", 400, 400);
    scatter.set_x_range(lo, hi);
    scatter.set_y_range(lo, hi);
    std::vector<double> xs, ys;
    for (const auto& a : r.dataset.actions) xs.push_back(a.ax), ys.push_back(a.ay);
    scatter.add_scatter(xs, ys, "#555555");
    scatter.add_marker(r.optimum.argmax.ax, r.optimum.argmax.ay, "#000000", "grid optimum");
    auto os = open_out(dir / "fig_dataset.svg");
    os << scatter.render();
    os.close();

    SvgPlot paths(game + ": policy paths (seed " + std::to_string(r.logs.front().front().seed) + ")", "theta^x",
                  "theta^y", 400, 400);
    paths.set_x_range(lo, hi);
    paths.set_y_range(lo, hi);
    for (std::size_t v = 0; v < r.variants.size(); ++v) {
        std::vector<double> px, py;
        for (const auto& s : r.logs[v].front().steps) px.push_back(s.theta_x), py.push_back(s.theta_y);
        paths.add_line(px, py, color_for(r.variants[v]), to_string(r.variants[v]), "policy-path");
    }
    paths.add_marker(r.optimum.argmax.ax, r.optimum.argmax.ay, "#000000", "grid optimum");
    os = open_out(dir / "fig_paths.svg");
    os << paths.render();
    os.close();

    SvgPlot returns(game + ": mean test return", "update step", "return", 480, 380);
    for (std::size_t v = 0; v < r.variants.size(); ++v) {
        std::vector<double> steps(mean_curves[v].size());
        for (std::size_t k = 0; k < steps.size(); ++k) steps[k] = static_cast<double>(k);
        returns.add_line(steps, mean_curves[v], color_for(r.variants[v]), to_string(r.variants[v]), "return-curve");
    }
    os = open_out(dir / "fig_returns.svg");
    os << returns.render();
}

} // namespace coda::app
