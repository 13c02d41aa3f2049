#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "oprisk/core.hpp"

using namespace oprisk;

TEST_CASE("ramp clamps negatives and passes positives through") {
    CHECK(ramp(-3.5) == 0.0);
    CHECK(ramp(0.0) == 0.0);
    CHECK(ramp(2.25) == 2.25);
    CHECK(ramp(1e-300) == 1e-300);
}

TEST_CASE("noise tail probability") {
    CHECK(noise_tail_probability(2.0, -1.0) == 1.0);
    CHECK(noise_tail_probability(2.0, 0.0) == 1.0);
    CHECK(noise_tail_probability(2.0, 1.5) == doctest::Approx(std::exp(-3.0)).epsilon(1e-14));
    CHECK_THROWS_AS(noise_tail_probability(0.0, 1.0), ParameterError);
    CHECK_THROWS_AS(noise_tail_probability(-1.0, 1.0), ParameterError);
}

TEST_CASE("rng streams are deterministic per key") {
    RngStream a(42, 7, 3);
    RngStream b(42, 7, 3);
    for (int k = 0; k < 100; ++k) CHECK(a.next_u64() == b.next_u64());

    RngStream c(42, 7, 4);
    RngStream d(42, 8, 3);
    RngStream e(43, 7, 3);
    RngStream base(42, 7, 3);
    std::uint64_t first = base.next_u64();
    CHECK(c.next_u64() != first);
    CHECK(d.next_u64() != first);
    CHECK(e.next_u64() != first);
}

TEST_CASE("uniform draws live strictly inside (0,1)") {
    RngStream rng(1, 0, 0);
    for (int k = 0; k < 100000; ++k) {
        double u = rng.next_uniform();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("exponential draws are positive with the right mean") {
    RngStream rng(2, 0, 0);
    const double rate = 3.0;
    const int n = 200000;
    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
        double x = rng.next_exponential(rate);
        REQUIRE(x > 0.0);
        sum += x;
    }
    double mean = sum / n;
    // SE of the mean is 1/(rate sqrt(n)); allow 5 SE.
    CHECK(std::abs(mean - 1.0 / rate) < 5.0 / (rate * std::sqrt(double(n))));
    CHECK_THROWS_AS(rng.next_exponential(0.0), ParameterError);
}

TEST_CASE("noise model dispatch") {
    NoiseModel expo = NoiseModel::exponential();
    CHECK(expo.is_exponential());
    CHECK(expo.name() == "exponential");

    NoiseModel constant = NoiseModel::custom(
        "constant", [](double, RngStream&) { return 0.75; });
    CHECK_FALSE(constant.is_exponential());
    CHECK(constant.name() == "constant");
    RngStream rng(0, 0, 0);
    CHECK(constant.sample(1.0, rng) == 0.75);

    NoiseModel bad = NoiseModel::custom("bad", [](double, RngStream&) { return 0.0; });
    CHECK_THROWS_AS(bad.sample(1.0, rng), ParameterError);
}

TEST_CASE("square matrix indexing and equality") {
    SquareMatrix<double> m(3, 0.0);
    m(0, 2) = 1.5;
    m(2, 1) = -4.0;
    CHECK(m.size() == 3);
    CHECK(m(0, 2) == 1.5);
    CHECK(m(2, 1) == -4.0);
    CHECK(m(1, 1) == 0.0);

    SquareMatrix<double> same(3, 0.0);
    same(0, 2) = 1.5;
    same(2, 1) = -4.0;
    CHECK(m == same);
    same(1, 0) = 1e-12;
    CHECK_FALSE(m == same);
}

namespace {

ModelParams two_node_params() {
    SquareMatrix<double> j(2, 0.0);
    j(1, 0) = 0.1;
    SquareMatrix<int> t(2, 0);
    t(1, 0) = 3;
    return ModelParams(2, j, {-1.0, -1.0}, {2.0, 3.0}, t);
}

} // namespace

TEST_CASE("model params validation") {
    CHECK_NOTHROW(two_node_params().validate());

    SquareMatrix<double> j(2, 0.0);
    j(1, 0) = 0.1;
    SquareMatrix<int> t(2, 0);
    t(1, 0) = 3;

    // Non-positive rates.
    CHECK_THROWS_AS(ModelParams(2, j, {-1.0, -1.0}, {2.0, 0.0}, t), ParameterError);
    // Size mismatches.
    CHECK_THROWS_AS(ModelParams(2, j, {-1.0}, {2.0, 3.0}, t), ParameterError);
    CHECK_THROWS_AS(ModelParams(2, j, {-1.0, -1.0}, {2.0}, t), ParameterError);
    CHECK_THROWS_AS(ModelParams(3, j, {-1.0, -1.0, -1.0}, {2.0, 3.0, 2.0}, t),
                    ParameterError);
    // Nonzero coupling needs t* >= 1.
    SquareMatrix<int> zero_t(2, 0);
    CHECK_THROWS_AS(ModelParams(2, j, {-1.0, -1.0}, {2.0, 3.0}, zero_t),
                    ParameterError);
    // Zero coupling must store t* = 0.
    SquareMatrix<int> stray(2, 0);
    stray(1, 0) = 3;
    stray(0, 1) = 2;
    CHECK_THROWS_AS(ModelParams(2, j, {-1.0, -1.0}, {2.0, 3.0}, stray),
                    ParameterError);
    CHECK_THROWS_AS(ModelParams(0, SquareMatrix<double>(0), {}, {},
                                SquareMatrix<int>(0)),
                    ParameterError);
}

TEST_CASE("max corr time") {
    ModelParams p = two_node_params();
    CHECK(p.max_corr_time() == 3);
}

TEST_CASE("loss trajectory storage and bounds") {
    LossTrajectory traj(4, 2);
    CHECK(traj.n_steps() == 4);
    CHECK(traj.n_processes() == 2);
    CHECK(traj.origin() == TrajectoryOrigin::Simulated);
    CHECK(traj.model_tag() == "primary");

    traj.set(1, 0, 2.5);
    traj.set(4, 1, 0.25);
    CHECK(traj.at(1, 0) == 2.5);
    CHECK(traj.at(4, 1) == 0.25);
    CHECK(traj.at(2, 0) == 0.0);

    CHECK_THROWS_AS(traj.set(1, 0, -0.1), ParameterError);
    CHECK_THROWS_AS(traj.at(0, 0), ParameterError);
    CHECK_THROWS_AS(traj.at(5, 0), ParameterError);
    CHECK_THROWS_AS(traj.at(1, 2), ParameterError);
    CHECK_THROWS_AS(LossTrajectory(-1, 2), ParameterError);
    CHECK_THROWS_AS(LossTrajectory(4, 0), ParameterError);
}

TEST_CASE("truncation keeps the prefix, tag, and origin") {
    LossTrajectory traj(5, 2, TrajectoryOrigin::Ingested);
    traj.set_model_tag("alt-constrained");
    for (int t = 1; t <= 5; ++t) traj.set(t, 1, t * 1.0);

    LossTrajectory head = traj.truncated(3);
    CHECK(head.n_steps() == 3);
    CHECK(head.n_processes() == 2);
    CHECK(head.origin() == TrajectoryOrigin::Ingested);
    CHECK(head.model_tag() == "alt-constrained");
    for (int t = 1; t <= 3; ++t) {
        CHECK(head.at(t, 1) == traj.at(t, 1));
        CHECK(head.at(t, 0) == 0.0);
    }
    CHECK_THROWS_AS(traj.truncated(6), ParameterError);
    CHECK_THROWS_AS(traj.truncated(-1), ParameterError);
}
