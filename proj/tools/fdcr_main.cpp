#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fdcr/cli.hpp"
#include "fdcr/textio.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<int> m;
    std::optional<long> frames;
    std::optional<int> replications;
    std::optional<std::string> scheme;
    std::optional<std::string> inject;
    std::optional<double> pf, pd, pf_si, pd_si;
    bool dump_frames = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "configuration file (key = value sections)");
    cmd->add_option("--out", f.out_dir, "output directory")->capture_default_str();
    cmd->add_option("--seed", f.seed, "master seed override");
    cmd->add_option("--m", f.m, "transmission slots per frame override");
    cmd->add_option("--frames", f.frames, "frames per replication override");
    cmd->add_option("--replications", f.replications, "replication count override");
    cmd->add_option("--scheme", f.scheme, "nn-ams, tr or ts")
        ->check(CLI::IsMember({"nn-ams", "tr", "ts"}));
    cmd->add_option("--inject-prediction", f.inject,
                    "ppf,ppd prediction bypass (skips training)");
    cmd->add_option("--pf", f.pf, "override false-alarm probability (no SI)");
    cmd->add_option("--pd", f.pd, "override detection probability (no SI)");
    cmd->add_option("--pf-si", f.pf_si, "override false-alarm probability (with SI)");
    cmd->add_option("--pd-si", f.pd_si, "override detection probability (with SI)");
    cmd->add_flag("--dump-frames", f.dump_frames, "write per-frame records CSV");
}

fdcr::AppConfig load_config(const CommonFlags& f) {
    fdcr::AppConfig cfg = f.config_path.empty()
                              ? fdcr::parse_config_text(fdcr::default_config_text())
                              : fdcr::parse_config_file(f.config_path);
    if (f.seed) cfg.experiment.master_seed = *f.seed;
    if (f.m) cfg.experiment.frame.m_slots = *f.m;
    if (f.frames) cfg.experiment.n_frames = *f.frames;
    if (f.replications) cfg.experiment.replications = *f.replications;
    if (f.scheme) {
        if (*f.scheme == "nn-ams") cfg.experiment.scheme = fdcr::Scheme::NnAms;
        else if (*f.scheme == "tr") cfg.experiment.scheme = fdcr::Scheme::TrOnly;
        else cfg.experiment.scheme = fdcr::Scheme::TsOnly;
    }
    if (f.inject) {
        const auto comma = f.inject->find(',');
        if (comma == std::string::npos)
            throw fdcr::ConfigError("--inject-prediction wants ppf,ppd");
        cfg.experiment.inject = std::make_pair(
            fdcr::parse_double(f.inject->substr(0, comma)),
            fdcr::parse_double(f.inject->substr(comma + 1)));
    }
    if (f.pf) cfg.ovr_pf = *f.pf;
    if (f.pd) cfg.ovr_pd = *f.pd;
    if (f.pf_si) cfg.ovr_pf_si = *f.pf_si;
    if (f.pd_si) cfg.ovr_pd_si = *f.pd_si;
    if (f.dump_frames) cfg.experiment.keep_frames = true;
    cfg.resolve();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"full-duplex cognitive radio simulator and analytics"};
    app.set_version_flag("--version", fdcr::kToolVersion);
    app.require_subcommand(1);

    CommonFlags train_f, eval_f, analytic_f, simulate_f, sweep_f, compare_f;
    std::string eval_net;
    std::string analytic_range = "2:30";
    double analytic_ppf = 0.05, analytic_ppd = 0.9;
    std::string sweep_range = "2:30:2";
    bool sweep_single_scheme = false;

    auto* train = app.add_subcommand("train", "train the occupancy predictor");
    add_common(train, train_f);

    auto* eval = app.add_subcommand("eval", "evaluate a saved predictor on fresh windows");
    add_common(eval, eval_f);
    eval->add_option("--net", eval_net, "net file produced by train")->required();

    auto* analytic = app.add_subcommand("analytic", "closed-form curves over M");
    add_common(analytic, analytic_f);
    analytic->add_option("--m-range", analytic_range, "a:b[:step] or comma list")
        ->capture_default_str();
    analytic->add_option("--ppf", analytic_ppf, "prediction false-alarm probability")
        ->capture_default_str();
    analytic->add_option("--ppd", analytic_ppd, "prediction detection probability")
        ->capture_default_str();

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo run at one M");
    add_common(simulate, simulate_f);

    auto* sweep = app.add_subcommand("sweep", "Monte Carlo runs over an M grid");
    add_common(sweep, sweep_f);
    sweep->add_option("--m-range", sweep_range, "a:b[:step] or comma list")
        ->capture_default_str();
    sweep->add_flag("--single-scheme", sweep_single_scheme,
                    "sweep only the configured scheme instead of all three");

    auto* compare = app.add_subcommand("compare", "paired nn-ams / tr / ts comparison at one M");
    add_common(compare, compare_f);

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return fdcr::cmd_train(load_config(train_f), train_f.out_dir);
        if (eval->parsed()) return fdcr::cmd_eval(load_config(eval_f), eval_net, eval_f.out_dir);
        if (analytic->parsed()) {
            const auto ms = fdcr::parse_m_range(analytic_range);
            const fdcr::AppConfig cfg = load_config(analytic_f);
            double ppf = analytic_ppf, ppd = analytic_ppd;
            if (cfg.experiment.inject) {
                ppf = cfg.experiment.inject->first;
                ppd = cfg.experiment.inject->second;
            }
            return fdcr::cmd_analytic(cfg, ms, ppf, ppd, analytic_f.out_dir);
        }
        if (simulate->parsed()) return fdcr::cmd_simulate(load_config(simulate_f), simulate_f.out_dir);
        if (sweep->parsed()) {
            return fdcr::cmd_sweep(load_config(sweep_f), fdcr::parse_m_range(sweep_range),
                                   !sweep_single_scheme, sweep_f.out_dir);
        }
        if (compare->parsed()) return fdcr::cmd_compare(load_config(compare_f), compare_f.out_dir);
    } catch (const fdcr::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
