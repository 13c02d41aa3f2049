#ifndef OPRISK_IO_HPP
#define OPRISK_IO_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "oprisk/analytic.hpp"
#include "oprisk/core.hpp"
#include "oprisk/estimate.hpp"
#include "oprisk/forecast.hpp"

namespace oprisk {

// Loss-database CSV: leading `# key=value` metadata lines, a `t,process,amount`
// header, then one row per nonzero loss. Zeros are implicit.
struct LoadedDatabase {
    LossTrajectory trajectory;
    std::map<std::string, std::string> metadata;
    std::optional<ModelParams> truth; // present when the file embeds the
                                      // generating parameters
};

void save_database(const LossTrajectory& db, const std::string& path,
                   std::map<std::string, std::string> metadata = {},
                   const std::optional<ModelParams>& truth = std::nullopt);

LoadedDatabase load_database(const std::string& path);

// Run configuration: flat key = value lines plus sparse [coupling] and
// [corr_times] sections of `i j value` triples.
struct ModelConfig {
    ModelParams params;
    int horizon = 0;
    int trajectories = 1;
    std::uint64_t seed = 0;
    double confidence = 0.99865;
    std::vector<double> fractions = {1.0, 0.75};
};

ModelConfig load_config(const std::string& path);
void save_config(const ModelConfig& config, const std::string& path);

// Exact-roundtrip decimal rendering of a double (17 significant digits).
std::string format_amount(double value);

// JSON reports.
std::string moment_report_json(const MomentReport& report);
std::string estimation_json(const EstimationResult& result);
std::string forecast_report_json(const ForecastReport& report);

// Plot-ready series: process,t,z_star,mean,lower,upper rows, one block per
// process per fraction fit.
void write_plot_series(const ForecastReport& report, const LossTrajectory& db,
                       const std::string& path);

// Summary table: process,VaR_f1,VaR_f<frac>,delta_VaR rows per extra fraction.
void write_summary_table(const ForecastReport& report, const std::string& path);

} // namespace oprisk

#endif
