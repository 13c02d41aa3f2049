#include "oprisk/io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "oprisk/simulate.hpp"

namespace oprisk {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

long parse_long(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        long v = std::stol(trim(s), &pos);
        if (pos != trim(s).size()) throw std::invalid_argument(what);
        return v;
    } catch (const std::exception&) {
        throw DataError("cannot parse integer " + what + ": '" + s + "'");
    }
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(trim(s), &pos);
        if (pos != trim(s).size()) throw std::invalid_argument(what);
        return v;
    } catch (const std::exception&) {
        throw DataError("cannot parse number " + what + ": '" + s + "'");
    }
}

std::string join_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (k) out += ",";
        out += format_amount(v[k]);
    }
    return out;
}

std::vector<double> parse_double_list(const std::string& s,
                                      const std::string& what) {
    std::vector<double> out;
    for (const std::string& item : split(s, ','))
        out.push_back(parse_double(item, what));
    return out;
}

// Sparse matrix entries as `i:j:value` joined by ';'.
std::string join_triples(const ModelParams& p, bool corr) {
    std::string out;
    for (int i = 0; i < p.n_processes; ++i)
        for (int j = 0; j < p.n_processes; ++j) {
            if (p.coupling(i, j) == 0.0) continue;
            if (!out.empty()) out += ";";
            out += std::to_string(i) + ":" + std::to_string(j) + ":" +
                   (corr ? std::to_string(p.corr_times(i, j))
                         : format_amount(p.coupling(i, j)));
        }
    return out;
}

} // namespace

std::string format_amount(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

void save_database(const LossTrajectory& db, const std::string& path,
                   std::map<std::string, std::string> metadata,
                   const std::optional<ModelParams>& truth) {
    metadata["n_processes"] = std::to_string(db.n_processes());
    metadata["horizon"] = std::to_string(db.n_steps());
    metadata["origin"] =
        db.origin() == TrajectoryOrigin::Simulated ? "simulated" : "ingested";
    metadata["model"] = db.model_tag();
    if (truth) {
        metadata["truth_theta"] = join_doubles(truth->theta);
        metadata["truth_lambda"] = join_doubles(truth->noise_rates);
        metadata["truth_coupling"] = join_triples(*truth, false);
        metadata["truth_corr_times"] = join_triples(*truth, true);
    }

    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    for (const auto& [k, v] : metadata) out << "# " << k << "=" << v << "\n";
    out << "t,process,amount\n";
    for (int t = 1; t <= db.n_steps(); ++t)
        for (int i = 0; i < db.n_processes(); ++i) {
            double l = db.at(t, i);
            if (l > 0.0)
                out << t << "," << i << "," << format_amount(l) << "\n";
        }
    if (!out) throw DataError("write failed: " + path);
}

LoadedDatabase load_database(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path);

    LoadedDatabase loaded;
    std::string line;
    bool header_seen = false;
    int n = 0, horizon = 0;
    std::vector<char> seen;

    while (std::getline(in, line)) {
        std::string s = trim(line);
        if (s.empty()) continue;
        if (s[0] == '#') {
            std::string body = trim(s.substr(1));
            std::size_t eq = body.find('=');
            if (eq == std::string::npos)
                throw DataError("malformed metadata line: " + line);
            loaded.metadata[trim(body.substr(0, eq))] =
                trim(body.substr(eq + 1));
            continue;
        }
        if (!header_seen) {
            if (s != "t,process,amount")
                throw DataError("expected header 't,process,amount', got: " + s);
            header_seen = true;

            auto need = [&](const char* key) {
                auto it = loaded.metadata.find(key);
                if (it == loaded.metadata.end())
                    throw DataError(std::string("missing metadata key: ") + key);
                return it->second;
            };
            n = static_cast<int>(parse_long(need("n_processes"), "n_processes"));
            horizon = static_cast<int>(parse_long(need("horizon"), "horizon"));
            if (n < 1 || horizon < 1)
                throw DataError("n_processes and horizon must be positive");
            loaded.trajectory = LossTrajectory(horizon, n, TrajectoryOrigin::Ingested);
            if (auto it = loaded.metadata.find("origin");
                it != loaded.metadata.end() && it->second == "simulated")
                loaded.trajectory.set_origin(TrajectoryOrigin::Simulated);
            if (auto it = loaded.metadata.find("model");
                it != loaded.metadata.end())
                loaded.trajectory.set_model_tag(it->second);
            seen.assign(static_cast<std::size_t>(n) * horizon, 0);
            continue;
        }
        std::vector<std::string> cols = split(s, ',');
        if (cols.size() != 3) throw DataError("expected 3 columns, got: " + s);
        long t = parse_long(cols[0], "t");
        long i = parse_long(cols[1], "process");
        double amount = parse_double(cols[2], "amount");
        if (t < 1 || t > horizon)
            throw DataError("step out of range [1, horizon]: " + cols[0]);
        if (i < 0 || i >= n)
            throw DataError("process index out of range: " + cols[1]);
        if (!(amount > 0.0))
            throw DataError("amounts must be strictly positive: " + cols[2]);
        std::size_t cell = static_cast<std::size_t>(t - 1) * n + i;
        if (seen[cell])
            throw DataError("duplicate (t, process) row: " + s);
        seen[cell] = 1;
        loaded.trajectory.set(static_cast<int>(t), static_cast<int>(i), amount);
    }
    if (!header_seen) throw DataError("no 't,process,amount' header in " + path);

    if (loaded.metadata.count("truth_theta")) {
        ModelParams truth;
        truth.n_processes = n;
        truth.theta = parse_double_list(loaded.metadata.at("truth_theta"), "theta");
        truth.noise_rates =
            parse_double_list(loaded.metadata.at("truth_lambda"), "lambda");
        truth.coupling = SquareMatrix<double>(n);
        truth.corr_times = SquareMatrix<int>(n);
        auto fill = [&](const std::string& key, bool corr) {
            auto it = loaded.metadata.find(key);
            if (it == loaded.metadata.end() || it->second.empty()) return;
            for (const std::string& triple : split(it->second, ';')) {
                std::vector<std::string> f = split(triple, ':');
                if (f.size() != 3)
                    throw DataError("malformed triple in " + key + ": " + triple);
                int i = static_cast<int>(parse_long(f[0], "i"));
                int j = static_cast<int>(parse_long(f[1], "j"));
                if (i < 0 || i >= n || j < 0 || j >= n)
                    throw DataError("index out of range in " + key);
                if (corr)
                    truth.corr_times(i, j) =
                        static_cast<int>(parse_long(f[2], "t*"));
                else
                    truth.coupling(i, j) = parse_double(f[2], "J");
            }
        };
        fill("truth_coupling", false);
        fill("truth_corr_times", true);
        try {
            truth.validate();
        } catch (const ParameterError& e) {
            throw DataError(std::string("inconsistent truth metadata: ") +
                            e.what());
        }
        loaded.truth = truth;
    }
    return loaded;
}

ModelConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path);

    ModelConfig config;
    ModelParams& p = config.params;
    std::string line, section;
    std::vector<std::array<double, 3>> coupling_triples;
    std::vector<std::array<double, 3>> corr_triples;
    bool have_n = false;

    while (std::getline(in, line)) {
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        if (s.front() == '[' && s.back() == ']') {
            section = trim(s.substr(1, s.size() - 2));
            if (section != "coupling" && section != "corr_times")
                throw DataError("unknown section [" + section + "]");
            continue;
        }
        if (!section.empty()) {
            std::stringstream ss(s);
            double i, j, v;
            if (!(ss >> i >> j >> v))
                throw DataError("expected 'i j value' triple, got: " + s);
            (section == "coupling" ? coupling_triples : corr_triples)
                .push_back({i, j, v});
            continue;
        }
        std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw DataError("expected 'key = value', got: " + s);
        std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));
        if (key == "n_processes") {
            p.n_processes = static_cast<int>(parse_long(value, key));
            have_n = true;
        } else if (key == "theta") {
            p.theta = parse_double_list(value, key);
        } else if (key == "lambda") {
            p.noise_rates = parse_double_list(value, key);
        } else if (key == "horizon") {
            config.horizon = static_cast<int>(parse_long(value, key));
        } else if (key == "trajectories") {
            config.trajectories = static_cast<int>(parse_long(value, key));
        } else if (key == "seed") {
            config.seed = static_cast<std::uint64_t>(parse_long(value, key));
        } else if (key == "confidence") {
            config.confidence = parse_double(value, key);
        } else if (key == "fractions") {
            config.fractions = parse_double_list(value, key);
        } else {
            throw DataError("unknown config key: " + key);
        }
    }
    if (!have_n || p.n_processes < 1)
        throw DataError("config must set a positive n_processes");

    p.coupling = SquareMatrix<double>(p.n_processes);
    p.corr_times = SquareMatrix<int>(p.n_processes);
    auto in_range = [&](double x) {
        int k = static_cast<int>(x);
        if (k < 0 || k >= p.n_processes || x != k)
            throw DataError("triple index out of range");
        return k;
    };
    for (const auto& t : coupling_triples)
        p.coupling(in_range(t[0]), in_range(t[1])) = t[2];
    for (const auto& t : corr_triples) {
        if (t[2] != std::floor(t[2]) || t[2] < 1)
            throw DataError("correlation times must be positive integers");
        p.corr_times(in_range(t[0]), in_range(t[1])) = static_cast<int>(t[2]);
    }
    // Every declared coupling needs its window and vice versa.
    for (int i = 0; i < p.n_processes; ++i)
        for (int j = 0; j < p.n_processes; ++j)
            if ((p.coupling(i, j) != 0.0) != (p.corr_times(i, j) != 0))
                throw DataError(
                    "[coupling] and [corr_times] entries must match pairwise");
    p.validate();
    if (config.horizon < 1) throw DataError("config must set a positive horizon");
    return config;
}

void save_config(const ModelConfig& config, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    const ModelParams& p = config.params;
    out << "n_processes = " << p.n_processes << "\n";
    out << "theta = " << join_doubles(p.theta) << "\n";
    out << "lambda = " << join_doubles(p.noise_rates) << "\n";
    out << "horizon = " << config.horizon << "\n";
    out << "trajectories = " << config.trajectories << "\n";
    out << "seed = " << config.seed << "\n";
    out << "confidence = " << format_amount(config.confidence) << "\n";
    out << "fractions = " << join_doubles(config.fractions) << "\n";
    out << "\n[coupling]\n";
    for (int i = 0; i < p.n_processes; ++i)
        for (int j = 0; j < p.n_processes; ++j)
            if (p.coupling(i, j) != 0.0)
                out << i << " " << j << " " << format_amount(p.coupling(i, j))
                    << "\n";
    out << "\n[corr_times]\n";
    for (int i = 0; i < p.n_processes; ++i)
        for (int j = 0; j < p.n_processes; ++j)
            if (p.corr_times(i, j) != 0)
                out << i << " " << j << " " << p.corr_times(i, j) << "\n";
    if (!out) throw DataError("write failed: " + path);
}

std::string moment_report_json(const MomentReport& report) {
    json j;
    j["horizon"] = report.horizon;
    j["confidence"] = report.confidence;
    j["processes"] = json::array();
    for (const auto& e : report.entries) {
        j["processes"].push_back({{"process", e.process},
                                  {"mean_l", e.mean_l},
                                  {"var_l", e.var_l},
                                  {"loss_probability", e.loss_probability},
                                  {"mean_z", e.mean_z},
                                  {"var_z", e.var_z},
                                  {"var_value", e.var_value},
                                  {"computed_via", e.computed_via}});
    }
    return j.dump(2);
}

namespace {

json estimation_to_json(const EstimationResult& r) {
    json j;
    j["theta"] = r.theta;
    j["lambda"] = r.lambda;
    j["lambda_estimated"] = r.lambda_estimated;
    j["theta_low_confidence"] = r.theta_low_confidence;
    j["warnings"] = r.warnings;
    j["couplings"] = json::array();
    for (const auto& c : r.couplings) {
        j["couplings"].push_back({{"i", c.i},
                                  {"j", c.j},
                                  {"levels", c.levels},
                                  {"candidates", c.candidates},
                                  {"level_counts", c.level_counts},
                                  {"skipped_levels", c.skipped_levels},
                                  {"aggregate", c.aggregate},
                                  {"feasible", c.feasible},
                                  {"low_confidence", c.low_confidence}});
    }
    json counts;
    counts["n_base"] = r.counts.n_base;
    counts["n_base_zero"] = r.counts.n_base_zero;
    counts["edges"] = json::array();
    for (const auto& e : r.counts.edges) {
        counts["edges"].push_back({{"i", e.i},
                                   {"j", e.j},
                                   {"t_star", e.t_star},
                                   {"n", e.n},
                                   {"n_zero", e.n_zero}});
    }
    j["counts"] = std::move(counts);
    return j;
}

} // namespace

std::string estimation_json(const EstimationResult& result) {
    return estimation_to_json(result).dump(2);
}

std::string forecast_report_json(const ForecastReport& report) {
    json j;
    j["horizon"] = report.horizon;
    j["confidence"] = report.confidence;
    j["z_star_at_horizon"] = report.z_star_at_horizon;
    j["fits"] = json::array();
    for (std::size_t k = 0; k < report.fits.size(); ++k) {
        const FractionFit& fit = report.fits[k];
        json f;
        f["fraction"] = fit.fraction;
        f["var_values"] = fit.var_values;
        f["delta_var_vs_f1"] = report.delta_var[k];
        f["estimation"] = estimation_to_json(fit.estimation);
        json bands = json::array();
        for (const auto& b : fit.bands) {
            bands.push_back({{"process", b.process},
                             {"mc_based", b.mc_based},
                             {"mean_l", b.mean_l},
                             {"var_l", b.var_l}});
        }
        f["bands"] = std::move(bands);
        if (k < report.truth_errors.size()) {
            f["truth_errors"] = {{"theta", report.truth_errors[k].theta},
                                 {"lambda", report.truth_errors[k].lambda},
                                 {"coupling", report.truth_errors[k].coupling}};
        }
        j["fits"].push_back(std::move(f));
    }
    return j.dump(2);
}

void write_plot_series(const ForecastReport& report, const LossTrajectory& db,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "fraction,process,t,z_star,mean,lower,upper\n";
    const int T = report.horizon;
    const int stride = std::max(1, T / 200);
    for (const FractionFit& fit : report.fits) {
        for (int i = 0; i < db.n_processes(); ++i) {
            std::vector<double> z = cumulative_series(db, i);
            const ForecastBand& b = fit.bands[static_cast<std::size_t>(i)];
            for (int t = stride; t <= T; t += stride) {
                double mean = b.mean_at(t), sigma = b.sigma_at(t);
                out << format_amount(fit.fraction) << "," << i << "," << t
                    << "," << format_amount(z[static_cast<std::size_t>(t - 1)])
                    << "," << format_amount(mean) << ","
                    << format_amount(mean - sigma) << ","
                    << format_amount(mean + sigma) << "\n";
            }
        }
    }
    if (!out) throw DataError("write failed: " + path);
}

void write_summary_table(const ForecastReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);

    auto label = [](double f) {
        // 1 -> f1, 0.75 -> f075
        std::string s = format_amount(f);
        std::string digits;
        for (char c : s)
            if (c != '.') digits += c;
        return "f" + digits;
    };

    out << "process";
    for (const FractionFit& fit : report.fits)
        out << ",VaR_" << label(fit.fraction);
    for (std::size_t k = 1; k < report.fits.size(); ++k)
        out << (report.fits.size() == 2
                    ? std::string(",delta_VaR")
                    : ",delta_VaR_" + label(report.fits[k].fraction));
    out << "\n";

    const std::size_t n = report.z_star_at_horizon.size();
    for (std::size_t i = 0; i < n; ++i) {
        out << i;
        for (const FractionFit& fit : report.fits)
            out << "," << format_amount(fit.var_values[i]);
        for (std::size_t k = 1; k < report.fits.size(); ++k)
            out << "," << format_amount(report.delta_var[k][i]);
        out << "\n";
    }
    if (!out) throw DataError("write failed: " + path);
}

} // namespace oprisk
