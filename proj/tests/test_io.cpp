#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oprisk/forecast.hpp"
#include "oprisk/io.hpp"
#include "oprisk/simulate.hpp"

using namespace oprisk;

namespace {

ModelParams benchmark_params() {
    SquareMatrix<double> j(5, 0.0);
    j(2, 0) = 0.1;
    j(3, 2) = 0.15;
    j(4, 0) = 0.1;
    j(4, 1) = 0.1;
    SquareMatrix<int> t(5, 0);
    t(2, 0) = 5;
    t(3, 2) = 5;
    t(4, 0) = 5;
    t(4, 1) = 5;
    return ModelParams(5, j, std::vector<double>(5, -1.0),
                       {2.0, 3.0, 5.0, 5.0, 5.0}, t);
}

std::string temp_path(const char* stem) {
    return std::string("/tmp/oprisk_io_test_") + stem + ".csv";
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

} // namespace

TEST_CASE("format_amount round-trips doubles bitwise") {
    RngStream rng(41, 0, 0);
    for (int k = 0; k < 1000; ++k) {
        double x = rng.next_exponential(0.001) * (rng.next_uniform() < 0.5 ? 1 : 1e-9);
        CHECK(std::stod(format_amount(x)) == x);
    }
    CHECK(std::stod(format_amount(0.1)) == 0.1);
    CHECK(std::stod(format_amount(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("database round-trip over randomized trajectories") {
    const std::string path = temp_path("roundtrip");
    RngStream rng(43, 0, 0);
    for (int trial = 0; trial < 1000; ++trial) {
        int n = 1 + static_cast<int>(rng.next_uniform() * 4.0);
        int T = 1 + static_cast<int>(rng.next_uniform() * 20.0);
        LossTrajectory db(T, n, trial % 2 ? TrajectoryOrigin::Ingested
                                          : TrajectoryOrigin::Simulated);
        if (trial % 3 == 0) db.set_model_tag("alt-constrained");
        for (int t = 1; t <= T; ++t)
            for (int i = 0; i < n; ++i)
                if (rng.next_uniform() < 0.3)
                    db.set(t, i, rng.next_exponential(2.0));

        save_database(db, path);
        LoadedDatabase loaded = load_database(path);
        CHECK(loaded.trajectory.n_steps() == T);
        CHECK(loaded.trajectory.n_processes() == n);
        CHECK(loaded.trajectory.origin() == db.origin());
        CHECK(loaded.trajectory.model_tag() == db.model_tag());
        CHECK_FALSE(loaded.truth.has_value());
        for (int t = 1; t <= T; ++t)
            for (int i = 0; i < n; ++i)
                CHECK(loaded.trajectory.at(t, i) == db.at(t, i)); // bitwise
    }
    std::remove(path.c_str());
}

TEST_CASE("embedded generating parameters survive the round-trip") {
    const std::string path = temp_path("truth");
    ModelParams truth = benchmark_params();
    SimulationConfig config;
    config.horizon = 50;
    config.seed = 1;
    LossTrajectory db = run_trajectory(truth, config, 0);

    save_database(db, path, {{"note", "unit"}}, truth);
    LoadedDatabase loaded = load_database(path);
    CHECK(loaded.metadata.at("note") == "unit");
    REQUIRE(loaded.truth.has_value());
    CHECK(loaded.truth->theta == truth.theta);
    CHECK(loaded.truth->noise_rates == truth.noise_rates);
    CHECK(loaded.truth->coupling == truth.coupling);
    CHECK(loaded.truth->corr_times == truth.corr_times);
    std::remove(path.c_str());
}

TEST_CASE("occurrence-pattern excerpt parses into the right sparse grid") {
    const std::string path = temp_path("excerpt");
    write_file(path,
               "# n_processes=5\n"
               "# horizon=6\n"
               "t,process,amount\n"
               "3,2,1.0\n"
               "4,2,2.0\n"
               "5,1,0.5\n"
               "5,3,1.5\n"
               "6,0,0.25\n");
    LoadedDatabase loaded = load_database(path);
    CHECK(loaded.trajectory.n_steps() == 6);
    CHECK(loaded.trajectory.n_processes() == 5);
    CHECK(loaded.trajectory.origin() == TrajectoryOrigin::Ingested);
    int nonzeros = 0;
    for (int t = 1; t <= 6; ++t)
        for (int i = 0; i < 5; ++i)
            if (loaded.trajectory.at(t, i) > 0.0) ++nonzeros;
    CHECK(nonzeros == 5);
    CHECK(loaded.trajectory.at(3, 2) == 1.0);
    CHECK(loaded.trajectory.at(6, 0) == 0.25);
    CHECK(loaded.trajectory.at(1, 0) == 0.0);
    std::remove(path.c_str());
}

TEST_CASE("malformed databases are rejected with data errors") {
    const std::string path = temp_path("bad");
    auto expect_data_error = [&](const std::string& content) {
        write_file(path, content);
        CHECK_THROWS_AS(load_database(path), DataError);
    };

    CHECK_THROWS_AS(load_database("/nonexistent/nowhere.csv"), DataError);
    // No header.
    expect_data_error("# n_processes=2\n# horizon=3\n");
    // Missing metadata.
    expect_data_error("# horizon=3\nt,process,amount\n");
    expect_data_error("# n_processes=2\nt,process,amount\n");
    // Wrong header.
    expect_data_error("# n_processes=2\n# horizon=3\ntime,proc,amt\n1,0,1.0\n");
    // Malformed metadata line.
    expect_data_error("# n_processes\nt,process,amount\n");
    // Bad integers / numbers.
    expect_data_error("# n_processes=two\n# horizon=3\nt,process,amount\n");
    expect_data_error("# n_processes=2\n# horizon=3\nt,process,amount\n1,0,abc\n");
    // Out-of-range rows.
    expect_data_error("# n_processes=2\n# horizon=3\nt,process,amount\n4,0,1.0\n");
    expect_data_error("# n_processes=2\n# horizon=3\nt,process,amount\n0,0,1.0\n");
    expect_data_error("# n_processes=2\n# horizon=3\nt,process,amount\n1,2,1.0\n");
    // Non-positive amounts (zeros are implicit and must not be stored).
    expect_data_error("# n_processes=2\n# horizon=3\nt,process,amount\n1,0,0.0\n");
    expect_data_error("# n_processes=2\n# horizon=3\nt,process,amount\n1,0,-2.0\n");
    // Duplicate cell.
    expect_data_error(
        "# n_processes=2\n# horizon=3\nt,process,amount\n1,0,1.0\n1,0,2.0\n");
    // Wrong column count.
    expect_data_error("# n_processes=2\n# horizon=3\nt,process,amount\n1,0\n");
    // Inconsistent truth block.
    expect_data_error(
        "# n_processes=2\n# horizon=3\n# truth_theta=-1,-1\n# truth_lambda=2\n"
        "t,process,amount\n1,0,1.0\n");
    std::remove(path.c_str());
}

TEST_CASE("config round-trip is lossless") {
    const std::string path = temp_path("config");
    ModelConfig config;
    config.params = benchmark_params();
    config.horizon = 200000;
    config.trajectories = 3;
    config.seed = 987654321;
    config.confidence = 0.999;
    config.fractions = {1.0, 0.75, 0.5};

    save_config(config, path);
    ModelConfig loaded = load_config(path);
    CHECK(loaded.params.n_processes == 5);
    CHECK(loaded.params.theta == config.params.theta);
    CHECK(loaded.params.noise_rates == config.params.noise_rates);
    CHECK(loaded.params.coupling == config.params.coupling);
    CHECK(loaded.params.corr_times == config.params.corr_times);
    CHECK(loaded.horizon == 200000);
    CHECK(loaded.trajectories == 3);
    CHECK(loaded.seed == 987654321);
    CHECK(loaded.confidence == 0.999);
    CHECK(loaded.fractions == config.fractions);
    std::remove(path.c_str());
}

TEST_CASE("malformed configs are rejected") {
    const std::string path = temp_path("badcfg");
    auto expect_data_error = [&](const std::string& content) {
        write_file(path, content);
        CHECK_THROWS_AS(load_config(path), DataError);
    };

    const std::string base =
        "n_processes = 2\ntheta = -1,-1\nlambda = 2,2\nhorizon = 100\n";
    // Coupling without a matching correlation time.
    expect_data_error(base + "[coupling]\n1 0 0.1\n");
    // Correlation time without a coupling.
    expect_data_error(base + "[corr_times]\n1 0 3\n");
    // Fractional or non-positive correlation time.
    expect_data_error(base + "[coupling]\n1 0 0.1\n[corr_times]\n1 0 2.5\n");
    expect_data_error(base + "[coupling]\n1 0 0.1\n[corr_times]\n1 0 0\n");
    // Unknown key / section, missing essentials, bad triples.
    expect_data_error(base + "volatility = 3\n");
    expect_data_error(base + "[wiring]\n1 0 0.1\n");
    expect_data_error("theta = -1\nlambda = 2\nhorizon = 10\n");
    expect_data_error("n_processes = 1\ntheta = -1\nlambda = 2\n");
    expect_data_error(base + "[coupling]\n1 0\n");
    expect_data_error(base + "[coupling]\n5 0 0.1\n[corr_times]\n5 0 2\n");

    // A minimal valid config parses.
    write_file(path, base + "[coupling]\n1 0 0.1\n[corr_times]\n1 0 3\n");
    ModelConfig ok = load_config(path);
    CHECK(ok.params.coupling(1, 0) == 0.1);
    CHECK(ok.params.corr_times(1, 0) == 3);
    CHECK(ok.fractions == std::vector<double>{1.0, 0.75}); // default
    std::remove(path.c_str());
}

TEST_CASE("json reports are valid and carry the key quantities") {
    ModelParams params = benchmark_params();
    MomentReport report = solve_model(params, 1000.0, 0.99865);
    nlohmann::json j = nlohmann::json::parse(moment_report_json(report));
    CHECK(j["horizon"] == 1000.0);
    REQUIRE(j["processes"].size() == 5);
    CHECK(j["processes"][0]["computed_via"] == "free");
    CHECK(j["processes"][0]["mean_z"].get<double>() ==
          doctest::Approx(report.entries[0].mean_z).epsilon(1e-15));

    SimulationConfig config;
    config.horizon = 20000;
    config.seed = 2;
    LossTrajectory db = run_trajectory(params, config, 0);
    CouplingStructure structure = CouplingStructure::from_params(params);

    EstimationResult fit = estimate_all(db, structure);
    nlohmann::json je = nlohmann::json::parse(estimation_json(fit));
    REQUIRE(je["theta"].size() == 5);
    REQUIRE(je["couplings"].size() == 4);
    CHECK(je["couplings"][0].contains("candidates"));
    CHECK(je["counts"]["n_base"].size() == 5);

    ForecastReport forecast = run_forecast(db, structure, {1.0, 0.75});
    nlohmann::json jf = nlohmann::json::parse(forecast_report_json(forecast));
    REQUIRE(jf["fits"].size() == 2);
    CHECK(jf["fits"][0]["fraction"] == 1.0);
    CHECK(jf["fits"][1]["delta_var_vs_f1"].size() == 5);
    CHECK(jf["z_star_at_horizon"].size() == 5);
}

TEST_CASE("plot series and summary table formats") {
    ModelParams params = benchmark_params();
    SimulationConfig config;
    config.horizon = 20000;
    config.seed = 3;
    LossTrajectory db = run_trajectory(params, config, 0);
    CouplingStructure structure = CouplingStructure::from_params(params);
    ForecastReport report = run_forecast(db, structure, {1.0, 0.75});

    const std::string plot_path = temp_path("plot");
    write_plot_series(report, db, plot_path);
    std::ifstream plot(plot_path);
    std::string header;
    std::getline(plot, header);
    CHECK(header == "fraction,process,t,z_star,mean,lower,upper");
    int rows = 0;
    std::string line;
    while (std::getline(plot, line)) {
        if (line.empty()) continue;
        ++rows;
        std::stringstream ss(line);
        std::string field;
        std::vector<double> fields;
        while (std::getline(ss, field, ',')) fields.push_back(std::stod(field));
        REQUIRE(fields.size() == 7);
        CHECK(fields[5] <= fields[4]); // lower <= mean
        CHECK(fields[4] <= fields[6]); // mean <= upper
    }
    // stride = max(1, 20000/200) = 100 -> 200 rows per process per fit.
    CHECK(rows == 2 * 5 * 200);
    std::remove(plot_path.c_str());

    const std::string table_path = temp_path("summary");
    write_summary_table(report, table_path);
    std::ifstream table(table_path);
    std::getline(table, header);
    CHECK(header == "process,VaR_f1,VaR_f075,delta_VaR");
    rows = 0;
    while (std::getline(table, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 5);
    std::remove(table_path.c_str());
}
