// Copyright 2026 The CODA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "coda/serialization.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace coda {

using json = nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& path)
{
    if (!obj.is_object()) throw ConfigError((path.empty() ? std::string("<root>") : path) + ": expected an object");
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok |= key == a;
        if (!ok) throw ConfigError(join(path, key) + ": unknown field");
    }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& path)
{
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(join(path, key) + ": " + e.what());
    }
}

const json* section(const json& obj, const char* key)
{
    return obj.contains(key) ? &obj.at(key) : nullptr;
}

template <class E, class F>
void read_enum(const json& obj, const char* key, E& out, const std::string& path, F parse)
{
    if (!obj.contains(key)) return;
    std::string name;
    read(obj, key, name, path);
    try {
        out = parse(name);
    } catch (const InvalidArgument& e) {
        throw ConfigError(join(path, key) + ": " + e.what());
    }
}

json game_json(const GameSpec& g)
{
    json j;
    j["kind"] = to_string(g.kind);
    if (g.kind == GameKind::TwinPeaks && g.twin_peaks_params) {
        j["A"] = (*g.twin_peaks_params)[0];
        j["B"] = (*g.twin_peaks_params)[1];
        j["C"] = (*g.twin_peaks_params)[2];
    }
    if (g.kind == GameKind::CustomPolynomial) {
        json terms = json::array();
        for (const auto& [mono, c] : g.coefficients) terms.push_back({mono.first, mono.second, c});
        j["terms"] = terms;
    }
    j["action_low"] = g.action_low;
    j["action_high"] = g.action_high;
    return j;
}

GameSpec game_from_json(const json& j, const std::string& path)
{
    check_keys(j, {"kind", "A", "B", "C", "terms", "action_low", "action_high"}, path);
    std::string kind = "multiplication";
    read(j, "kind", kind, path);
    GameSpec g;
    try {
        switch (game_kind_from_string(kind)) {
        case GameKind::Multiplication: g = GameSpec::multiplication(); break;
        case GameKind::TwinPeaks: {
            double a = 1.0, b = 4.0, c = 5.0;
            read(j, "A", a, path);
            read(j, "B", b, path);
            read(j, "C", c, path);
            g = GameSpec::twin_peaks(a, b, c);
            break;
        }
        case GameKind::CustomPolynomial: {
            std::vector<std::tuple<int, int, double>> terms;
            read(j, "terms", terms, path);
            std::map<Monomial, double> coeffs;
            for (const auto& [i, k, c] : terms) coeffs[{i, k}] += c;
            g = GameSpec::custom(coeffs);
            break;
        }
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidArgument& e) {
        throw ConfigError(path + ": " + e.what());
    }
    read(j, "action_low", g.action_low, path);
    read(j, "action_high", g.action_high, path);
    try {
        g.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return g;
}

json config_json(const RunConfig& c)
{
    json j;
    j["variant"] = to_string(c.variant);
    j["seed"] = c.seed;
    j["epochs"] = c.epochs;
    j["policy_steps"] = c.policy_steps;
    j["synthetic_batch"] = c.synthetic_batch;
    j["alpha"] = c.alpha;
    j["generation_interval"] = c.generation_interval;
    j["tail_fraction"] = c.tail_fraction;
    j["game"] = game_json(c.game);
    j["dataset"] = {{"law", to_string(c.dataset.law)},
                    {"n", c.dataset.n},
                    {"mean", {c.dataset.mean.ax, c.dataset.mean.ay}},
                    {"stddev", c.dataset.stddev}};
    j["guidance"] = {{"lambda", c.guidance.lambda},
                     {"w", c.guidance.w},
                     {"schedule", to_string(c.guidance.schedule)},
                     {"surrogate_std", c.guidance.surrogate_std}};
    j["q_target"] = {{"kind", c.q_target.kind == QTarget::Kind::MaxReturn ? "max_return" : "quantile"},
                     {"q", c.q_target.q}};
    j["learner"] = {{"lr", c.learner.lr},
                    {"grad_clip", c.learner.grad_clip},
                    {"batch", c.learner.batch},
                    {"init", {c.learner.init.ax, c.learner.init.ay}},
                    {"burn_in", c.learner.burn_in},
                    {"steps", c.learner.steps},
                    {"full_batch", c.learner.full_batch}};
    const auto& d = c.diffusion;
    j["diffusion"] = {
        {"hidden", d.arch.hidden},
        {"noise_features", d.arch.noise_features},
        {"cond_embed", d.arch.cond_embed},
        {"train",
         {{"epochs", d.train.epochs},
          {"batch", d.train.batch},
          {"lr", d.train.lr},
          {"cond_dropout", d.train.cond_dropout},
          {"grad_clip", d.train.grad_clip},
          {"optimizer", d.train.optimizer == Optimizer::Sgd ? "sgd" : "adam"}}},
        {"noise", {{"mu_log", d.noise.mu_log}, {"sigma_log", d.noise.sigma_log}, {"min", d.noise.clamp_min}, {"max", d.noise.clamp_max}}},
        {"schedule", {{"sigma_min", d.schedule.sigma_min}, {"sigma_max", d.schedule.sigma_max}, {"rho", d.schedule.rho}, {"steps", d.schedule.steps}}},
        {"churn", {{"gamma", d.churn.gamma}, {"s_noise", d.churn.s_noise}}},
        {"cdf_epsilon", d.cdf_epsilon},
        {"workers", d.workers}};
    return j;
}

RunConfig config_from_json(const json& j)
{
    RunConfig c;
    check_keys(j, {"variant", "seed", "epochs", "policy_steps", "synthetic_batch", "alpha", "generation_interval",
                   "tail_fraction", "game", "dataset", "guidance", "q_target", "learner", "diffusion"},
               "");
    read_enum(j, "variant", c.variant, "", variant_from_string);
    read(j, "seed", c.seed, "");
    read(j, "epochs", c.epochs, "");
    read(j, "policy_steps", c.policy_steps, "");
    read(j, "synthetic_batch", c.synthetic_batch, "");
    read(j, "alpha", c.alpha, "");
    read(j, "generation_interval", c.generation_interval, "");
    read(j, "tail_fraction", c.tail_fraction, "");
    if (const json* g = section(j, "game")) c.game = game_from_json(*g, "game");
    if (const json* d = section(j, "dataset")) {
        check_keys(*d, {"law", "n", "mean", "stddev"}, "dataset");
        read_enum(*d, "law", c.dataset.law, "dataset", dataset_law_from_string);
        read(*d, "n", c.dataset.n, "dataset");
        std::array<double, 2> mean{c.dataset.mean.ax, c.dataset.mean.ay};
        read(*d, "mean", mean, "dataset");
        c.dataset.mean = {mean[0], mean[1]};
        read(*d, "stddev", c.dataset.stddev, "dataset");
    }
    if (const json* g = section(j, "guidance")) {
        check_keys(*g, {"lambda", "w", "schedule", "surrogate_std"}, "guidance");
        read(*g, "lambda", c.guidance.lambda, "guidance");
        read(*g, "w", c.guidance.w, "guidance");
        read_enum(*g, "schedule", c.guidance.schedule, "guidance", guidance_schedule_from_string);
        read(*g, "surrogate_std", c.guidance.surrogate_std, "guidance");
    }
    if (const json* q = section(j, "q_target")) {
        check_keys(*q, {"kind", "q"}, "q_target");
        read_enum(*q, "kind", c.q_target.kind, "q_target", [](const std::string& s) {
            if (s == "max_return") return QTarget::Kind::MaxReturn;
            if (s == "quantile") return QTarget::Kind::Quantile;
            throw InvalidArgument("unknown q_target kind '" + s + "'");
        });
        read(*q, "q", c.q_target.q, "q_target");
    }
    if (const json* l = section(j, "learner")) {
        check_keys(*l, {"lr", "grad_clip", "batch", "init", "burn_in", "steps", "full_batch"}, "learner");
        read(*l, "lr", c.learner.lr, "learner");
        read(*l, "grad_clip", c.learner.grad_clip, "learner");
        read(*l, "batch", c.learner.batch, "learner");
        std::array<double, 2> init{c.learner.init.ax, c.learner.init.ay};
        read(*l, "init", init, "learner");
        c.learner.init = {init[0], init[1]};
        read(*l, "burn_in", c.learner.burn_in, "learner");
        read(*l, "steps", c.learner.steps, "learner");
        read(*l, "full_batch", c.learner.full_batch, "learner");
    }
    if (const json* d = section(j, "diffusion")) {
        auto& s = c.diffusion;
        check_keys(*d, {"hidden", "noise_features", "cond_embed", "train", "noise", "schedule", "churn", "cdf_epsilon", "workers"},
                   "diffusion");
        read(*d, "hidden", s.arch.hidden, "diffusion");
        read(*d, "noise_features", s.arch.noise_features, "diffusion");
        read(*d, "cond_embed", s.arch.cond_embed, "diffusion");
        read(*d, "cdf_epsilon", s.cdf_epsilon, "diffusion");
        read(*d, "workers", s.workers, "diffusion");
        if (const json* t = section(*d, "train")) {
            const std::string p = "diffusion.train";
            check_keys(*t, {"epochs", "batch", "lr", "cond_dropout", "grad_clip", "optimizer"}, p);
            read(*t, "epochs", s.train.epochs, p);
            read(*t, "batch", s.train.batch, p);
            read(*t, "lr", s.train.lr, p);
            read(*t, "cond_dropout", s.train.cond_dropout, p);
            read(*t, "grad_clip", s.train.grad_clip, p);
            read_enum(*t, "optimizer", s.train.optimizer, p, [](const std::string& name) {
                if (name == "sgd") return Optimizer::Sgd;
                if (name == "adam") return Optimizer::Adam;
                throw InvalidArgument("unknown optimizer '" + name + "'");
            });
        }
        if (const json* n = section(*d, "noise")) {
            const std::string p = "diffusion.noise";
            check_keys(*n, {"mu_log", "sigma_log", "min", "max"}, p);
            read(*n, "mu_log", s.noise.mu_log, p);
            read(*n, "sigma_log", s.noise.sigma_log, p);
            read(*n, "min", s.noise.clamp_min, p);
            read(*n, "max", s.noise.clamp_max, p);
        }
        if (const json* n = section(*d, "schedule")) {
            const std::string p = "diffusion.schedule";
            check_keys(*n, {"sigma_min", "sigma_max", "rho", "steps"}, p);
            read(*n, "sigma_min", s.schedule.sigma_min, p);
            read(*n, "sigma_max", s.schedule.sigma_max, p);
            read(*n, "rho", s.schedule.rho, p);
            read(*n, "steps", s.schedule.steps, p);
        }
        if (const json* n = section(*d, "churn")) {
            const std::string p = "diffusion.churn";
            check_keys(*n, {"gamma", "s_noise"}, p);
            if (n->contains("gamma") && n->at("gamma").is_number()) {
                double g = 0.0;
                read(*n, "gamma", g, p);
                s.churn.gamma.assign(static_cast<std::size_t>(s.schedule.steps), g);
            } else {
                read(*n, "gamma", s.churn.gamma, p);
            }
            read(*n, "s_noise", s.churn.s_noise, p);
        }
    }
    try {
        c.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    return c;
}

std::uint64_t fnv1a(const std::string& s)
{
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace

std::string to_json_text(const RunConfig& cfg) { return config_json(cfg).dump(2); }

RunConfig run_config_from_json_text(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("<root>: ") + e.what());
    }
    return config_from_json(j);
}

RunConfig load_run_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return run_config_from_json_text(ss.str());
}

std::string game_to_json_text(const GameSpec& game) { return game_json(game).dump(); }

std::string config_hash(const RunConfig& cfg)
{
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(config_json(cfg).dump());
    return os.str();
}

std::string format_double(double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

void write_dataset(std::ostream& os, const OfflineDataset& data)
{
    json header = {{"format", "coda-dataset"},
                   {"version", 1},
                   {"n", data.size()},
                   {"seed", data.settings.seed},
                   {"law", to_string(data.settings.law)},
                   {"game", game_json(data.game)}};
    os << "# " << header.dump() << '\n' << "ax,ay,reward\n";
    for (std::size_t r = 0; r < data.size(); ++r) {
        os << format_double(data.actions[r].ax) << ',' << format_double(data.actions[r].ay) << ','
           << format_double(data.rewards[r]) << '\n';
    }
}

OfflineDataset read_dataset(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line.rfind("# ", 0) != 0) throw InvalidArgument("dataset: missing header record");
    json header;
    try {
        header = json::parse(line.substr(2));
    } catch (const json::parse_error& e) {
        throw InvalidArgument(std::string("dataset: bad header: ") + e.what());
    }
    if (header.value("format", "") != "coda-dataset") throw InvalidArgument("dataset: not a coda dataset");
    const GameSpec game = game_from_json(header.at("game"), "game");
    if (!std::getline(is, line) || line != "ax,ay,reward") throw InvalidArgument("dataset: missing column header");

    std::vector<JointAction> actions;
    std::vector<double> rewards;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        double v[3];
        const char* p = line.data();
        const char* end = line.data() + line.size();
        for (int k = 0; k < 3; ++k) {
            auto res = std::from_chars(p, end, v[k]);
            if (res.ec != std::errc()) throw InvalidArgument("dataset: malformed record '" + line + "'");
            p = res.ptr;
            if (k < 2) {
                if (p == end || *p != ',') throw InvalidArgument("dataset: malformed record '" + line + "'");
                ++p;
            }
        }
        actions.push_back({v[0], v[1]});
        rewards.push_back(v[2]);
    }
    const auto expected = header.at("n").get<std::size_t>();
    if (actions.size() != expected) throw InvalidArgument("dataset: record count does not match header");
    OfflineDataset d;
    d.game = game;
    d.actions = std::move(actions);
    d.rewards = std::move(rewards);
    d.settings.n = expected;
    d.settings.seed = header.value("seed", std::uint64_t{0});
    d.settings.law = dataset_law_from_string(header.value("law", std::string("uniform")));
    d.refit();
    return d;
}

void write_step_log(std::ostream& os, const std::vector<StepRecord>& steps)
{
    os << "step,theta_x,theta_y,return,grad_x,grad_y\n";
    for (const auto& s : steps) {
        os << s.step << ',' << format_double(s.theta_x) << ',' << format_double(s.theta_y) << ',' << format_double(s.ret)
           << ',' << format_double(s.grad_x) << ',' << format_double(s.grad_y) << '\n';
    }
}

void write_epoch_log(std::ostream& os, const std::vector<EpochRecord>& epochs)
{
    os << "epoch,theta_x,theta_y,return,generated,synthetic_loglik,reference_loglik,synthetic_mean_x,synthetic_mean_y\n";
    for (const auto& e : epochs) {
        os << e.epoch << ',' << format_double(e.theta_x) << ',' << format_double(e.theta_y) << ',' << format_double(e.ret)
           << ',' << (e.generated ? 1 : 0) << ',' << format_double(e.synthetic_loglik) << ','
           << format_double(e.reference_loglik) << ',' << format_double(e.synthetic_mean_x) << ','
           << format_double(e.synthetic_mean_y) << '\n';
    }
}

void write_loss_curve(std::ostream& os, const LossCurve& curve)
{
    os << "step,loss\n";
    for (std::size_t k = 0; k < curve.losses.size(); ++k) os << k << ',' << format_double(curve.losses[k]) << '\n';
}

void write_actions(std::ostream& os, const std::vector<JointAction>& actions)
{
    os << "ax,ay\n";
    for (const auto& a : actions) os << format_double(a.ax) << ',' << format_double(a.ay) << '\n';
}

std::vector<JointAction> read_actions(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line != "ax,ay") throw InvalidArgument("actions: missing column header");
    std::vector<JointAction> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        JointAction a;
        const char* end = line.data() + line.size();
        if (comma == std::string::npos ||
            std::from_chars(line.data(), line.data() + comma, a.ax).ec != std::errc() ||
            std::from_chars(line.data() + comma + 1, end, a.ay).ec != std::errc()) {
            throw InvalidArgument("actions: malformed record '" + line + "'");
        }
        out.push_back(a);
    }
    return out;
}

std::string run_summary_json(const RunLog& log)
{
    json j = {{"variant", to_string(log.variant)},
              {"seed", log.seed},
              {"config_hash", log.config_hash},
              {"final_theta", {log.final_policy.theta_x, log.final_policy.theta_y}},
              {"final_return", log.final_return},
              {"converged_theta", {log.converged_theta.ax, log.converged_theta.ay}},
              {"converged_return", log.converged_return},
              {"epochs", log.epochs.size()},
              {"updates", log.steps.empty() ? 0 : log.steps.size() - 1}};
    return j.dump(2);
}

void save_prior(const std::filesystem::path& dir, const TrainedPrior& prior)
{
    std::filesystem::create_directories(dir);
    {
        std::ofstream os(dir / "model.txt");
        prior.model.save(os);
    }
    {
        std::ofstream os(dir / "normalizer.txt");
        prior.normalizer.save(os);
    }
    json meta = {{"format", "coda-prior"}, {"version", 1}, {"kind", to_string(prior.kind)}};
    if (prior.return_condition) meta["return_condition"] = *prior.return_condition;
    std::ofstream os(dir / "prior.json");
    os << meta.dump(2) << '\n';
    if (!os) throw InvalidArgument("save_prior: write failed in " + dir.string());
}

TrainedPrior load_prior(const std::filesystem::path& dir)
{
    TrainedPrior p;
    std::ifstream meta_in(dir / "prior.json");
    if (!meta_in) throw InvalidArgument("load_prior: missing prior.json in " + dir.string());
    json meta = json::parse(meta_in);
    const std::string kind = meta.at("kind").get<std::string>();
    if (kind == "unconditional") p.kind = PriorKind::Unconditional;
    else if (kind == "policy") p.kind = PriorKind::Policy;
    else if (kind == "return") p.kind = PriorKind::Return;
    else throw InvalidArgument("load_prior: unknown kind '" + kind + "'");
    if (meta.contains("return_condition")) p.return_condition = meta.at("return_condition").get<double>();
    std::ifstream model_in(dir / "model.txt");
    if (!model_in) throw InvalidArgument("load_prior: missing model.txt");
    p.model = DenoiserModel::load(model_in);
    std::ifstream norm_in(dir / "normalizer.txt");
    if (!norm_in) throw InvalidArgument("load_prior: missing normalizer.txt");
    p.normalizer = CdfNormalizer::load(norm_in);
    return p;
}

} // namespace coda
