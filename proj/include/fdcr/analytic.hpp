#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fdcr/selection.hpp"
#include "fdcr/sensing.hpp"

namespace fdcr {

// Inputs to the closed forms. Valid for exponential ON/OFF traffic only.
struct Scenario {
    double lambda0 = 0.1;
    double lambda1 = 0.1;
    SensingProbs sensing;
    double p_pf = 0.0;  // prediction false-alarm probability
    double p_pd = 1.0;  // prediction detection probability
    FrameConfig frame;
    Rates rate;
    void validate() const;
};

// Mean of an exponential with the given mean truncated to [0, cutoff].
double truncated_exp_mean(double mean, double cutoff);

// The eight transmission cases: C1..C4 start in OFF (stay idle / PU returns,
// in TR / TS), C5..C8 mirror them starting in ON.
struct CaseBreakdown {
    std::array<double, 8> pr{};    // occurrence probabilities
    std::array<double, 8> r{};     // expected throughput per case
    std::array<double, 8> r_nc{};  // zero-tolerance credit: PU-touched cases forfeit
    std::array<double, 8> pr_c{};  // collision probability terms (0 for C1, C2)
    double e_l0 = 0.0;             // E[L0-hat]: OFF recurrence truncated to Tt
    double e_l1 = 0.0;
    double avg_throughput = 0.0;
    double avg_throughput_nc = 0.0;
    double collision_prob = 0.0;
};

std::array<double, 8> case_probs(const Scenario& s);
std::array<double, 8> case_throughputs(const Scenario& s);
CaseBreakdown case_breakdown(const Scenario& s);

double avg_throughput(const Scenario& s);
double avg_throughput_nc(const Scenario& s);
double collision_prob(const Scenario& s);

// Exact integration of the C4 throughput over the truncated recurrence-time
// density, for quantifying the plug-in approximation error.
double expected_r4_exact(const Scenario& s);

// Degenerate prediction substitutions produce the baselines.
Scenario with_prediction(Scenario s, double p_pf, double p_pd);
inline Scenario tr_only(Scenario s) { return with_prediction(std::move(s), 0.0, 0.0); }
inline Scenario ts_only(Scenario s) { return with_prediction(std::move(s), 1.0, 1.0); }

struct AnalyticRow {
    int m = 0;
    std::string scheme;
    CaseBreakdown cb;
};

// One CSV row per (M, scheme): occurrence probabilities, throughputs,
// collision terms, totals.
void write_analytic_csv(std::ostream& os, std::span<const AnalyticRow> rows,
                        const std::string& config_note);

}  // namespace fdcr
