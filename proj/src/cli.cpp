#include "fdcr/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "fdcr/textio.hpp"

namespace fdcr {

namespace {

using ordered_json = nlohmann::ordered_json;

// every file carries the tool version, the config hash, and the full echo
std::string config_note(const std::string& echo) {
    return std::string(kToolVersion) + "\nconfig_hash " + config_hash(echo) + "\n" + echo;
}

void write_note_lines(std::ostream& os, const std::string& note) {
    std::size_t start = 0;
    while (start < note.size()) {
        auto end = note.find('\n', start);
        if (end == std::string::npos) end = note.size();
        if (end > start) os << "# " << note.substr(start, end - start) << "\n";
        start = end + 1;
    }
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
    os << content;
    if (!os) throw std::runtime_error("short write: " + path.string());
}

ordered_json stats_json(const PredictionStats& s) {
    ordered_json j;
    j["n_tt"] = s.n_tt;
    j["n_0"] = s.n_0;
    j["n_01"] = s.n_01;
    j["n_e"] = s.n_e;
    j["p_e"] = s.p_e;
    if (s.p_pf) j["p_pf"] = *s.p_pf;
    else j["p_pf"] = nullptr;
    if (s.p_pd) j["p_pd"] = *s.p_pd;
    else j["p_pd"] = nullptr;
    return j;
}

ordered_json result_json(const ExperimentResult& r) {
    ordered_json j;
    j["scheme"] = to_string(r.scheme);
    j["m"] = r.m_slots;
    j["n_frames"] = r.n_frames;
    j["master_seed"] = r.master_seed;
    j["avg_throughput"] = r.avg_throughput;
    j["hw_throughput"] = r.hw_throughput;
    j["avg_throughput_nc"] = r.avg_throughput_nc;
    j["hw_throughput_nc"] = r.hw_throughput_nc;
    j["collision_prob"] = r.collision_prob;
    j["hw_collision"] = r.hw_collision;
    j["frac_tr"] = r.frac_tr;
    j["frac_fallback"] = r.frac_fallback;
    j["frac_ts"] = r.frac_ts;
    j["transmitted_slots"] = r.transmitted_slots;
    j["prediction"] = stats_json(r.prediction);
    j["analytic"] = {
        {"avg_throughput", r.analytic.avg_throughput},
        {"avg_throughput_nc", r.analytic.avg_throughput_nc},
        {"collision_prob", r.analytic.collision_prob},
    };
    ordered_json reps = ordered_json::array();
    for (const auto& rep : r.reps) {
        ordered_json jr;
        jr["index"] = rep.index;
        jr["timeline_seed"] = rep.timeline_seed;
        jr["skipped"] = rep.skipped;
        if (rep.trained) {
            jr["train_stop"] = to_string(rep.train_stop);
            jr["offline"] = stats_json(rep.offline);
        }
        if (!rep.skipped) {
            jr["avg_throughput"] = rep.run.avg_throughput;
            jr["avg_throughput_nc"] = rep.run.avg_throughput_nc;
            jr["collision_prob"] = rep.run.collision_prob;
            jr["online"] = stats_json(rep.run.prediction);
        }
        reps.push_back(std::move(jr));
    }
    j["replications"] = std::move(reps);
    return j;
}

ordered_json summary_header(const std::string& echo) {
    ordered_json j;
    j["tool"] = kToolVersion;
    j["config_hash"] = config_hash(echo);
    j["config"] = echo;
    return j;
}

Scenario scenario_from(const AppConfig& cfg, int m, double p_pf, double p_pd) {
    Scenario sc;
    sc.lambda0 = cfg.experiment.traffic.lambda0;
    sc.lambda1 = cfg.experiment.traffic.lambda1;
    sc.sensing = cfg.experiment.sensing();
    sc.p_pf = p_pf;
    sc.p_pd = p_pd;
    sc.frame = cfg.experiment.frame;
    sc.frame.m_slots = m;
    sc.rate = rates(cfg.experiment.radio);
    return sc;
}

}  // namespace

std::vector<int> parse_m_range(const std::string& spec) {
    std::vector<int> out;
    if (spec.find(':') != std::string::npos) {
        int a = 0, b = 0, step = 1;
        char c1 = 0, c2 = 0;
        std::istringstream ss(spec);
        if (!(ss >> a >> c1 >> b) || c1 != ':')
            throw ConfigError("bad m-range '" + spec + "' (want a:b[:step])");
        if (ss >> c2 >> step) {
            if (c2 != ':' || step < 1) throw ConfigError("bad m-range step in '" + spec + "'");
        }
        if (b < a) throw ConfigError("bad m-range '" + spec + "': end before start");
        for (int m = a; m <= b; m += step) out.push_back(m);
    } else {
        std::istringstream ss(spec);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (tok.empty()) continue;
            out.push_back(static_cast<int>(parse_int(tok)));
        }
    }
    if (out.empty()) throw ConfigError("empty m-range '" + spec + "'");
    for (const int m : out)
        if (m < 2) throw ConfigError("m values must be >= 2");
    return out;
}

int cmd_train(const AppConfig& cfg, const std::filesystem::path& out) {
    std::filesystem::create_directories(out);
    const std::string echo = serialize_config(cfg);
    const std::string note = config_note(echo);

    const TrainedPredictor trained = train_predictor(cfg.experiment, 0);

    std::map<std::string, std::string> meta;
    meta["config_hash"] = config_hash(echo);
    meta["m"] = std::to_string(cfg.experiment.frame.m_slots);
    meta["n_train"] = std::to_string(cfg.experiment.predictor.n_train);
    meta["max_epochs"] = std::to_string(cfg.experiment.predictor.train.max_epochs);
    meta["loss_goal"] = format_double(cfg.experiment.predictor.train.loss_goal);
    meta["stop"] = to_string(trained.result.stop);
    meta["final_mse"] = format_double(trained.result.final_mse);
    std::ostringstream net_text;
    save_mlp(net_text, trained.net, trained.init_seed, meta);
    write_file(out / "net.txt", net_text.str());

    std::ostringstream trace;
    trace << "# schema fdcr-train-v1\n";
    write_note_lines(trace, note);
    trace << "epoch,mu,train_mse,val_mse\n";
    for (const auto& e : trained.result.trace) {
        trace << e.epoch << "," << format_double(e.mu) << ","
              << format_double(e.train_mse) << "," << format_double(e.val_mse) << "\n";
    }
    write_file(out / "loss_trace.csv", trace.str());

    ordered_json j = summary_header(echo);
    j["initial_mse"] = trained.result.initial_mse;
    j["final_mse"] = trained.result.final_mse;
    j["epochs"] = trained.result.trace.size();
    j["stop"] = to_string(trained.result.stop);
    j["offline"] = stats_json(trained.offline);
    write_file(out / "train.json", j.dump(2) + "\n");

    std::cout << "trained m=" << cfg.experiment.frame.m_slots
              << " stop=" << to_string(trained.result.stop)
              << " mse=" << format_double(trained.result.final_mse)
              << " p_e=" << format_double(trained.offline.p_e) << "\n";
    return trained.result.stop == TrainStop::NoProgress ? 2 : 0;
}

int cmd_eval(const AppConfig& cfg, const std::filesystem::path& net_file,
             const std::filesystem::path& out) {
    std::filesystem::create_directories(out);
    std::ifstream in(net_file);
    if (!in) throw ConfigError("eval: cannot open net file " + net_file.string());
    const MlpFile file = load_mlp(in);
    if (file.net.n_inputs() != cfg.experiment.predictor.n_inputs)
        throw ConfigError("eval: net input width does not match predictor.n");

    const std::string echo = serialize_config(cfg);
    const PredictionStats stats = evaluate_predictor(cfg.experiment, file.net, 0);

    ordered_json j = summary_header(echo);
    j["net"] = net_file.filename().string();
    j["net_seed"] = file.seed;
    j["offline"] = stats_json(stats);
    write_file(out / "eval.json", j.dump(2) + "\n");
    std::cout << "p_e=" << format_double(stats.p_e) << "\n";
    return 0;
}

int cmd_analytic(const AppConfig& cfg, const std::vector<int>& m_values,
                 double p_pf, double p_pd, const std::filesystem::path& out) {
    if (cfg.experiment.traffic.distribution != DurationDistribution::Exponential)
        throw ConfigError("analytic: closed forms hold for exponential traffic only");
    std::filesystem::create_directories(out);
    const std::string echo = serialize_config(cfg);

    std::vector<AnalyticRow> rows;
    int best_nn = 0, best_tr = 0;
    double best_nn_thr = -1.0, best_tr_thr = -1.0;
    for (const int m : m_values) {
        const Scenario nn = scenario_from(cfg, m, p_pf, p_pd);
        rows.push_back({m, "nn-ams", case_breakdown(nn)});
        rows.push_back({m, "tr", case_breakdown(tr_only(nn))});
        rows.push_back({m, "ts", case_breakdown(ts_only(nn))});
        const auto& nn_cb = rows[rows.size() - 3].cb;
        const auto& tr_cb = rows[rows.size() - 2].cb;
        if (nn_cb.avg_throughput_nc > best_nn_thr) {
            best_nn_thr = nn_cb.avg_throughput_nc;
            best_nn = m;
        }
        if (tr_cb.avg_throughput_nc > best_tr_thr) {
            best_tr_thr = tr_cb.avg_throughput_nc;
            best_tr = m;
        }
    }

    std::ostringstream csv;
    write_analytic_csv(csv, rows, config_note(echo));
    write_file(out / "analytic.csv", csv.str());

    ordered_json j = summary_header(echo);
    j["p_pf"] = p_pf;
    j["p_pd"] = p_pd;
    j["m_values"] = m_values;
    j["argmax_nc_throughput"] = {{"nn-ams", best_nn}, {"tr", best_tr}};
    write_file(out / "analytic_summary.json", j.dump(2) + "\n");
    std::cout << "argmax M (non-collision throughput): nn-ams=" << best_nn
              << " tr=" << best_tr << "\n";
    return 0;
}

int cmd_simulate(const AppConfig& cfg, const std::filesystem::path& out) {
    std::filesystem::create_directories(out);
    const std::string echo = serialize_config(cfg);
    const std::string note = config_note(echo);

    const ExperimentResult result = run_experiment(cfg.experiment);

    std::ostringstream csv;
    write_results_csv(csv, std::span(&result, 1), note);
    write_file(out / "result.csv", csv.str());

    ordered_json j = summary_header(echo);
    j["result"] = result_json(result);
    write_file(out / "result.json", j.dump(2) + "\n");

    if (cfg.experiment.keep_frames) {
        std::ostringstream frames;
        write_frames_csv(frames, result.reps, note);
        write_file(out / "frames.csv", frames.str());
    }
    std::cout << to_string(result.scheme) << " m=" << result.m_slots
              << " throughput=" << format_double(result.avg_throughput)
              << " collision=" << format_double(result.collision_prob) << "\n";
    return 0;
}

int cmd_sweep(const AppConfig& cfg, const std::vector<int>& m_values,
              bool all_schemes, const std::filesystem::path& out) {
    std::filesystem::create_directories(out);
    const std::string echo = serialize_config(cfg);
    const std::string note = config_note(echo);

    std::vector<ExperimentResult> results;
    if (all_schemes) {
        for (const Scheme s : {Scheme::NnAms, Scheme::TrOnly, Scheme::TsOnly}) {
            ExperimentConfig per = cfg.experiment;
            per.scheme = s;
            for (const int m : m_values) {
                per.frame.m_slots = m;
                results.push_back(run_experiment(per));
            }
        }
    } else {
        const auto swept = sweep_m(cfg.experiment, m_values);
        results.insert(results.end(), swept.begin(), swept.end());
    }

    std::ostringstream csv;
    write_results_csv(csv, results, note);
    write_file(out / "sweep.csv", csv.str());

    ordered_json j = summary_header(echo);
    ordered_json arr = ordered_json::array();
    for (const auto& r : results) arr.push_back(result_json(r));
    j["results"] = std::move(arr);
    write_file(out / "sweep.json", j.dump(2) + "\n");
    std::cout << "sweep rows: " << results.size() << "\n";
    return 0;
}

int cmd_compare(const AppConfig& cfg, const std::filesystem::path& out) {
    std::filesystem::create_directories(out);
    const std::string echo = serialize_config(cfg);
    const std::string note = config_note(echo);

    std::vector<ExperimentResult> results;
    for (const Scheme s : {Scheme::NnAms, Scheme::TrOnly, Scheme::TsOnly}) {
        ExperimentConfig per = cfg.experiment;
        per.scheme = s;
        results.push_back(run_experiment(per));
    }
    const auto& nn = results[0];
    const auto& tr = results[1];
    const auto& ts = results[2];

    std::ostringstream csv;
    write_results_csv(csv, results, note);
    write_file(out / "compare.csv", csv.str());

    ordered_json j = summary_header(echo);
    j["nn_ams"] = result_json(nn);
    j["tr"] = result_json(tr);
    j["ts"] = result_json(ts);
    ordered_json ratios;
    const auto ratio = [](double num, double den) -> ordered_json {
        if (den > 0.0) return num / den;
        return nullptr;
    };
    ratios["collision_nn_over_tr"] = ratio(nn.collision_prob, tr.collision_prob);
    ratios["analytic_collision_nn_over_tr"] =
        ratio(nn.analytic.collision_prob, tr.analytic.collision_prob);
    ratios["throughput_nn_over_tr"] = ratio(nn.avg_throughput, tr.avg_throughput);
    ratios["throughput_nc_nn_over_ts"] =
        ratio(nn.avg_throughput_nc, ts.avg_throughput_nc);
    j["ratios"] = std::move(ratios);
    write_file(out / "compare.json", j.dump(2) + "\n");

    std::cout << "collision nn/tr = "
              << (tr.collision_prob > 0.0
                      ? format_double(nn.collision_prob / tr.collision_prob)
                      : std::string("n/a"))
              << ", throughput nn/tr = "
              << (tr.avg_throughput > 0.0
                      ? format_double(nn.avg_throughput / tr.avg_throughput)
                      : std::string("n/a"))
              << "\n";
    return 0;
}

}  // namespace fdcr
