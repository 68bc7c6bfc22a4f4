#include "fdcr/montecarlo.hpp"

#include <cmath>
#include <future>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "fdcr/textio.hpp"

namespace fdcr {

const char* to_string(Scheme s) {
    switch (s) {
        case Scheme::NnAms: return "nn-ams";
        case Scheme::TrOnly: return "tr";
        case Scheme::TsOnly: return "ts";
    }
    return "?";
}

void ExperimentConfig::validate() const {
    traffic.validate();
    radio.validate();
    frame.validate();
    if (predictor.n_inputs < 1) throw std::invalid_argument("experiment: n_inputs must be >= 1");
    if (predictor.n_train < 1 || predictor.n_test < 1)
        throw std::invalid_argument("experiment: n_train and n_test must be >= 1");
    if (predictor.history_slots < predictor.n_inputs + frame.m_slots)
        throw std::invalid_argument("experiment: history_slots too short for one window");
    if (n_frames < 1) throw std::invalid_argument("experiment: n_frames must be >= 1");
    if (replications < 1) throw std::invalid_argument("experiment: replications must be >= 1");
    if (inject) {
        const auto [ppf, ppd] = *inject;
        if (!(ppf >= 0.0 && ppf <= 1.0 && ppd >= 0.0 && ppd <= 1.0))
            throw std::invalid_argument("experiment: injected probabilities must be in [0,1]");
    }
}

SensingProbs ExperimentConfig::sensing() const {
    return sensing_override ? *sensing_override : sensing_probs(radio);
}

namespace {

// per-replication stream roles
enum StreamRole : std::uint64_t {
    kTimeline = 1,
    kTrainTimeline,
    kTrainWindows,
    kTestTimeline,
    kTestWindows,
    kWeights,
    kSense,
    kPredict,
};

std::uint64_t role_seed(const ExperimentConfig& cfg, int replication, StreamRole role) {
    // keyed on the M value itself so a sweep entry and a standalone run at the
    // same M see identical streams
    const auto a = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(cfg.frame.m_slots));
    const auto b = derive_seed(a, static_cast<std::uint64_t>(replication));
    return derive_seed(b, role);
}

}  // namespace

TrainedPredictor train_predictor(const ExperimentConfig& cfg, int replication) {
    cfg.validate();
    const int n = cfg.predictor.n_inputs;
    const int m = cfg.frame.m_slots;
    const SensingProbs probs = cfg.sensing();
    const SensingProbs* channel = cfg.predictor.perfect_sensing ? nullptr : &probs;

    const double horizon = static_cast<double>(cfg.predictor.history_slots) * cfg.frame.t_s;
    const ChannelTimeline history =
        sample_timeline(cfg.traffic, horizon, cfg.frame.t_s,
                        role_seed(cfg, replication, kTrainTimeline));
    RngStream window_rng(role_seed(cfg, replication, kTrainWindows));
    const TrainingSet train_set = make_training_data(history.slots, n, m,
                                                     cfg.predictor.n_train, window_rng,
                                                     channel, false);

    TrainedPredictor out;
    out.init_seed = role_seed(cfg, replication, kWeights);
    RngStream weight_rng(out.init_seed);
    const Mlp start = Mlp::random_init(n, weight_rng);
    out.result = train_lm(start, train_set, cfg.predictor.train);
    out.net = out.result.net;
    out.offline = evaluate_predictor(cfg, out.net, replication);
    return out;
}

PredictionStats evaluate_predictor(const ExperimentConfig& cfg, const Mlp& net,
                                   int replication) {
    const int n = cfg.predictor.n_inputs;
    const int m = cfg.frame.m_slots;
    const SensingProbs probs = cfg.sensing();
    const SensingProbs* channel = cfg.predictor.perfect_sensing ? nullptr : &probs;

    const double horizon = static_cast<double>(cfg.predictor.history_slots) * cfg.frame.t_s;
    const ChannelTimeline fresh =
        sample_timeline(cfg.traffic, horizon, cfg.frame.t_s,
                        role_seed(cfg, replication, kTestTimeline));
    RngStream window_rng(role_seed(cfg, replication, kTestWindows));
    const TrainingSet test_set = make_training_data(fresh.slots, n, m,
                                                    cfg.predictor.n_test, window_rng,
                                                    channel, false);
    return evaluate(net, test_set.inputs, test_set.truth);
}

namespace {

ReplicationResult run_replication(const ExperimentConfig& cfg, int rep) {
    ReplicationResult out;
    out.index = rep;
    const SensingProbs probs = cfg.sensing();
    const Rates rate = rates(cfg.radio);
    const int n = cfg.predictor.n_inputs;
    const int m = cfg.frame.m_slots;

    std::unique_ptr<Predictor> predictor;
    switch (cfg.scheme) {
        case Scheme::TrOnly:
            predictor = std::make_unique<ConstantPredictor>(std::int8_t{-1});
            break;
        case Scheme::TsOnly:
            predictor = std::make_unique<ConstantPredictor>(std::int8_t{1});
            break;
        case Scheme::NnAms:
            if (cfg.inject) {
                predictor = std::make_unique<InjectedPredictor>(
                    cfg.inject->first, cfg.inject->second,
                    role_seed(cfg, rep, kPredict));
            } else {
                TrainedPredictor trained = train_predictor(cfg, rep);
                out.trained = true;
                out.train_stop = trained.result.stop;
                out.offline = trained.offline;
                if (trained.result.stop == TrainStop::NoProgress) {
                    out.skipped = true;
                    return out;
                }
                predictor = std::make_unique<MlpPredictor>(std::move(trained.net));
            }
            break;
    }

    const std::size_t slots_needed =
        static_cast<std::size_t>(n) + static_cast<std::size_t>(cfg.n_frames) * m;
    const double total_time = static_cast<double>(slots_needed + 2) * cfg.frame.t_s;
    out.timeline_seed = role_seed(cfg, rep, kTimeline);
    const ChannelTimeline timeline =
        sample_timeline(cfg.traffic, total_time, cfg.frame.t_s, out.timeline_seed);

    out.run = run_nn_ams(*predictor, cfg.frame, timeline, probs, rate,
                         role_seed(cfg, rep, kSense), cfg.n_frames, n,
                         cfg.keep_frames);
    return out;
}

double mean_of(const std::vector<double>& v) {
    double acc = 0.0;
    for (const double x : v) acc += x;
    return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

// 95% half-width from the replication-level normal approximation
double half_width(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double mean = mean_of(v);
    double ss = 0.0;
    for (const double x : v) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    return 1.96 * sd / std::sqrt(static_cast<double>(v.size()));
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();

    ExperimentResult out;
    out.scheme = cfg.scheme;
    out.m_slots = cfg.frame.m_slots;
    out.n_frames = cfg.n_frames;
    out.master_seed = cfg.master_seed;
    out.reps.resize(static_cast<std::size_t>(cfg.replications));

    // Replications are independent; run them on whatever cores exist and
    // reduce in index order so results do not depend on scheduling.
    const unsigned hw = std::thread::hardware_concurrency();
    if (hw > 1 && cfg.replications > 1) {
        std::vector<std::future<ReplicationResult>> futs;
        futs.reserve(static_cast<std::size_t>(cfg.replications));
        for (int r = 0; r < cfg.replications; ++r)
            futs.push_back(std::async(std::launch::async,
                                      [&cfg, r] { return run_replication(cfg, r); }));
        for (int r = 0; r < cfg.replications; ++r)
            out.reps[static_cast<std::size_t>(r)] = futs[static_cast<std::size_t>(r)].get();
    } else {
        for (int r = 0; r < cfg.replications; ++r)
            out.reps[static_cast<std::size_t>(r)] = run_replication(cfg, r);
    }

    std::vector<double> thr, thr_nc, coll;
    long n_tt = 0, n_0 = 0, n_01 = 0, n_e = 0;
    long frames_total = 0, tr = 0, ts = 0, fb = 0;
    for (const auto& rep : out.reps) {
        if (rep.skipped) continue;
        thr.push_back(rep.run.avg_throughput);
        thr_nc.push_back(rep.run.avg_throughput_nc);
        coll.push_back(rep.run.collision_prob);
        n_tt += rep.run.prediction.n_tt;
        n_0 += rep.run.prediction.n_0;
        n_01 += rep.run.prediction.n_01;
        n_e += rep.run.prediction.n_e;
        frames_total += rep.run.n_frames;
        tr += rep.run.n_tr;
        ts += rep.run.n_ts;
        fb += rep.run.n_fallback;
        out.transmitted_slots += rep.run.transmitted_slots;
    }
    out.avg_throughput = mean_of(thr);
    out.avg_throughput_nc = mean_of(thr_nc);
    out.collision_prob = mean_of(coll);
    out.hw_throughput = half_width(thr);
    out.hw_throughput_nc = half_width(thr_nc);
    out.hw_collision = half_width(coll);
    out.prediction = stats_from_counts(n_tt, n_0, n_01, n_e);
    if (frames_total > 0) {
        out.frac_tr = static_cast<double>(tr) / frames_total;
        out.frac_ts = static_cast<double>(ts) / frames_total;
        out.frac_fallback = static_cast<double>(fb) / frames_total;
    }

    // closed-form companion under the operative prediction probabilities
    Scenario sc;
    sc.lambda0 = cfg.traffic.lambda0;
    sc.lambda1 = cfg.traffic.lambda1;
    sc.sensing = cfg.sensing();
    sc.frame = cfg.frame;
    sc.rate = rates(cfg.radio);
    switch (cfg.scheme) {
        case Scheme::TrOnly:
            sc.p_pf = 0.0;
            sc.p_pd = 0.0;
            break;
        case Scheme::TsOnly:
            sc.p_pf = 1.0;
            sc.p_pd = 1.0;
            break;
        case Scheme::NnAms:
            if (cfg.inject) {
                sc.p_pf = cfg.inject->first;
                sc.p_pd = cfg.inject->second;
            } else {
                sc.p_pf = out.prediction.p_pf.value_or(0.0);
                sc.p_pd = out.prediction.p_pd.value_or(1.0);
            }
            break;
    }
    out.analytic = case_breakdown(sc);
    return out;
}

std::vector<ExperimentResult> sweep_m(const ExperimentConfig& cfg,
                                      std::span<const int> m_values) {
    if (m_values.empty()) throw std::invalid_argument("sweep_m: no M values");
    std::vector<ExperimentResult> out;
    out.reserve(m_values.size());
    for (const int m : m_values) {
        ExperimentConfig per = cfg;
        per.frame.m_slots = m;
        out.push_back(run_experiment(per));
    }
    return out;
}

namespace {

void write_note_lines(std::ostream& os, const std::string& note) {
    std::size_t start = 0;
    while (start < note.size()) {
        auto end = note.find('\n', start);
        if (end == std::string::npos) end = note.size();
        if (end > start) os << "# " << note.substr(start, end - start) << "\n";
        start = end + 1;
    }
}

}  // namespace

void write_results_csv(std::ostream& os, std::span<const ExperimentResult> results,
                       const std::string& config_note) {
    os << "# schema fdcr-results-v1\n";
    write_note_lines(os, config_note);
    os << "m,scheme,n_frames,replications,avg_throughput,hw_throughput,"
          "avg_throughput_nc,hw_throughput_nc,collision_prob,hw_collision,"
          "frac_tr,frac_fallback,frac_ts,transmitted_slots,"
          "p_e,p_pf,p_pd,analytic_throughput,analytic_throughput_nc,"
          "analytic_collision\n";
    for (const auto& r : results) {
        os << r.m_slots << "," << to_string(r.scheme) << "," << r.n_frames << ","
           << r.reps.size() << "," << format_double(r.avg_throughput) << ","
           << format_double(r.hw_throughput) << ","
           << format_double(r.avg_throughput_nc) << ","
           << format_double(r.hw_throughput_nc) << ","
           << format_double(r.collision_prob) << ","
           << format_double(r.hw_collision) << "," << format_double(r.frac_tr) << ","
           << format_double(r.frac_fallback) << "," << format_double(r.frac_ts) << ","
           << r.transmitted_slots << "," << format_double(r.prediction.p_e) << ",";
        if (r.prediction.p_pf) os << format_double(*r.prediction.p_pf);
        os << ",";
        if (r.prediction.p_pd) os << format_double(*r.prediction.p_pd);
        os << "," << format_double(r.analytic.avg_throughput) << ","
           << format_double(r.analytic.avg_throughput_nc) << ","
           << format_double(r.analytic.collision_prob) << "\n";
    }
}

void write_frames_csv(std::ostream& os, std::span<const ReplicationResult> reps,
                      const std::string& config_note) {
    os << "# schema fdcr-frames-v1\n";
    write_note_lines(os, config_note);
    os << "replication,frame,mode,prediction,initial_sense,slots_transmitted,"
          "collided,throughput\n";
    for (const auto& rep : reps) {
        for (std::size_t f = 0; f < rep.run.frames.size(); ++f) {
            const auto& fr = rep.run.frames[f];
            os << rep.index << "," << f << "," << to_string(fr.mode) << ","
               << int(fr.prediction) << "," << int(fr.initial_sense) << ","
               << fr.slots_transmitted() << "," << int(fr.collided) << ","
               << format_double(fr.throughput) << "\n";
        }
    }
}

}  // namespace fdcr
