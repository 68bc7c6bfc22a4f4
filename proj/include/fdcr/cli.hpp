#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fdcr/config.hpp"

namespace fdcr {

inline constexpr const char* kToolVersion = "fdcr 1.0.0";

// Subcommand bodies. All of them write their outputs under `out` and return a
// process exit code (0 success, 2 runtime failure). Configuration errors are
// thrown as ConfigError and mapped to exit code 1 by the frontend.

int cmd_train(const AppConfig& cfg, const std::filesystem::path& out);
int cmd_eval(const AppConfig& cfg, const std::filesystem::path& net_file,
             const std::filesystem::path& out);
int cmd_analytic(const AppConfig& cfg, const std::vector<int>& m_values,
                 double p_pf, double p_pd, const std::filesystem::path& out);
int cmd_simulate(const AppConfig& cfg, const std::filesystem::path& out);
int cmd_sweep(const AppConfig& cfg, const std::vector<int>& m_values,
              bool all_schemes, const std::filesystem::path& out);
int cmd_compare(const AppConfig& cfg, const std::filesystem::path& out);

// "a:b[:step]" or a comma list
std::vector<int> parse_m_range(const std::string& spec);

}  // namespace fdcr
