#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "fdcr/montecarlo.hpp"

namespace fdcr {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat key = value configuration with [sections]. Unknown keys are rejected.
// SNRs accept linear (snr_ss) or decibel (snr_ss_db) forms; the energy
// threshold comes either directly (eps_over_sigma2) or via target_pf.
struct AppConfig {
    ExperimentConfig experiment;
    std::optional<double> target_pf;
    bool threshold_with_si = true;
    // direct sensing-probability overrides, for diagnostics
    std::optional<double> ovr_pf, ovr_pd, ovr_pf_si, ovr_pd_si;

    // Propagates the slot duration into the radio parameters, resolves the
    // threshold, applies overrides, and validates everything.
    void resolve();
};

AppConfig parse_config_text(const std::string& text);
AppConfig parse_config_file(const std::string& path);

// Canonical echo; parsing it back reproduces the same configuration.
std::string serialize_config(const AppConfig& cfg);

// FNV-1a content hash of the canonical form, as a hex string.
std::string config_hash(const std::string& canonical);

std::string default_config_text();

}  // namespace fdcr
