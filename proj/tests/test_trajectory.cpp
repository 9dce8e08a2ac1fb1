#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"

using namespace gmmflow;
using namespace testutil;
using Catch::Approx;

namespace {

Gaussian gauss1d(double mean, double var) {
    return Gaussian(VectorXd::Constant(1, mean), SpdMatrix(var * MatrixXd::Identity(1, 1)));
}

Gmm single(const Gaussian& g) { return Gmm(VectorXd::Ones(1), {g}); }

} // namespace

TEST_CASE("sample_source") {
    SECTION("standard normal sample moments") {
        const int n = 100000;
        const Gmm std3(VectorXd::Ones(1),
                       {Gaussian(VectorXd::Zero(3), SpdMatrix(MatrixXd::Identity(3, 3)))});
        const ParticleSet s = sample_source(std3, n, 7);
        const VectorXd mean = s.positions.colwise().mean();
        for (int a = 0; a < 3; ++a) REQUIRE(std::abs(mean(a)) < 4.0 / std::sqrt(double(n)));
        const MatrixXd centered = s.positions.rowwise() - mean.transpose();
        const MatrixXd cov = centered.transpose() * centered / (n - 1);
        REQUIRE((cov - MatrixXd::Identity(3, 3)).norm() < 0.02);
    }
    SECTION("degenerate weights pin the component label") {
        VectorXd w(2);
        w << 1.0, 0.0;
        const Gmm mix(w, {gauss1d(0, 1), gauss1d(5, 1)});
        const ParticleSet s = sample_source(mix, 500, 3);
        for (int label : s.source_component) REQUIRE(label == 0);
    }
    SECTION("point-mass covariance is rejected at construction") {
        REQUIRE_THROWS_AS(SpdMatrix(1e-12 * MatrixXd::Identity(2, 2)), NotSpd);
    }
    SECTION("deterministic and order-independent per particle") {
        const Gmm mix = single(random_gaussian(2, 5));
        const ParticleSet a = sample_source(mix, 64, 99);
        const ParticleSet b = sample_source(mix, 64, 99);
        REQUIRE(a.positions == b.positions);
        // A longer run reproduces the shorter run's prefix exactly.
        const ParticleSet c = sample_source(mix, 128, 99);
        REQUIRE(c.positions.topRows(64) == a.positions);
    }
}

TEST_CASE("integrate") {
    SECTION("zero-displacement flow leaves particles in place") {
        const Gaussian g = random_gaussian(2, 11);
        const MixtureFlow flow = build_flow(single(g), single(g), Method::A);
        const ParticleSet start = sample_source(single(g), 200, 17);
        const IntegrationResult res = integrate(flow, start, IntegratorConfig{50});
        REQUIRE((res.particles.positions - start.positions).cwiseAbs().maxCoeff() < 1e-9);
    }
    SECTION("single linear pair follows the affine flow map") {
        const MixtureFlow flow =
            build_flow(single(gauss1d(0, 1)), single(gauss1d(2, 4)), Method::A);
        ParticleSet start;
        start.positions = MatrixXd::Zero(3, 1);
        start.positions << -1.0, 0.3, 1.7;
        start.source_component = {0, 0, 0};
        const IntegrationResult res = integrate(flow, start, IntegratorConfig{100});
        for (int p = 0; p < 3; ++p) {
            const double expected = 2.0 + 2.0 * start.positions(p, 0);
            REQUIRE(std::abs(res.particles.positions(p, 0) - expected) < 1e-6);
        }
    }
    SECTION("single geodesic pair realizes the OT map") {
        const Gaussian a = gauss1d(0, 1), b = gauss1d(2, 4);
        const MixtureFlow flow = build_flow(single(a), single(b), Method::B);
        const OtMap map = ot_map(a, b);
        ParticleSet start;
        start.positions = MatrixXd::Zero(3, 1);
        start.positions << -0.5, 0.1, 2.0;
        start.source_component = {0, 0, 0};
        const IntegrationResult res = integrate(flow, start, IntegratorConfig{100});
        for (int p = 0; p < 3; ++p) {
            const double expected = map.apply(start.positions.row(p).transpose())(0);
            REQUIRE(std::abs(res.particles.positions(p, 0) - expected) < 1e-8);
        }
    }
    SECTION("endpoint error decays at fourth order in the step count") {
        const MixtureFlow flow =
            build_flow(single(gauss1d(0, 1)), single(gauss1d(2, 4)), Method::A);
        ParticleSet start;
        start.positions = MatrixXd::Constant(1, 1, 1.0);
        start.source_component = {0};
        std::vector<double> steps = {10, 20, 40, 80};
        std::vector<double> errors;
        for (double s : steps) {
            const IntegrationResult res =
                integrate(flow, start, IntegratorConfig{static_cast<int>(s)});
            errors.push_back(std::abs(res.particles.positions(0, 0) - 4.0));
        }
        const double slope = loglog_slope(steps, errors);
        REQUIRE(slope > -4.5);
        REQUIRE(slope < -3.5);
    }
    SECTION("snapshots land on the requested grid times") {
        const MixtureFlow flow =
            build_flow(single(gauss1d(0, 1)), single(gauss1d(1, 2)), Method::A);
        const ParticleSet start = sample_source(single(gauss1d(0, 1)), 8, 1);
        const IntegrationResult res =
            integrate(flow, start, IntegratorConfig{10}, {0.0, 0.52, 1.0});
        REQUIRE(res.snapshot_times.size() == 3);
        REQUIRE(res.snapshot_times[0] == 0.0);
        REQUIRE(res.snapshot_times[1] == Approx(0.5)); // rounded to the grid
        REQUIRE(res.snapshot_times[2] == Approx(1.0));
        REQUIRE(res.snapshots.size() == 3);
        REQUIRE((res.snapshots[0] - start.positions).norm() == 0.0);
    }
    SECTION("bit-identical endpoints for identical seeds and configs") {
        const Gmm src = single(random_gaussian(2, 21));
        const Gmm dst = single(random_gaussian(2, 22));
        const MixtureFlow flow = build_flow(src, dst, Method::A);
        const ParticleSet s1 = sample_source(src, 100, 5);
        const ParticleSet s2 = sample_source(src, 100, 5);
        const MatrixXd e1 = integrate(flow, s1, IntegratorConfig{30}).particles.positions;
        const MatrixXd e2 = integrate(flow, s2, IntegratorConfig{30}).particles.positions;
        REQUIRE(e1 == e2);
    }
}

TEST_CASE("pushforward_check") {
    SECTION("single-pair flows reach the target moments, both methods") {
        const auto [src, dst] = random_pair(2, 1234);
        for (Method method : {Method::A, Method::B}) {
            const MixtureFlow flow = build_flow(single(src), single(dst), method);
            const PushforwardReport report =
                pushforward_check(flow, 20000, 77, IntegratorConfig{100});
            REQUIRE(report.mean_err < 0.02 * (1.0 + dst.mean.norm()));
            REQUIRE(report.cov_err < 0.05);
        }
    }
    SECTION("self-transport sits at the sampling noise floor") {
        const Gaussian g = random_gaussian(2, 31);
        const MixtureFlow flow = build_flow(single(g), single(g), Method::A);
        const PushforwardReport report =
            pushforward_check(flow, 20000, 13, IntegratorConfig{20});
        // Two independent samples of the same density: sliced W2 ~ O(n^{-1/2}).
        REQUIRE(report.w2_to_target_estimate < 0.05);
        REQUIRE(report.mean_err < 0.05);
    }
    SECTION("a deliberately wrong flow is flagged") {
        const Gaussian src = gauss1d(0, 1);
        const Gaussian good = gauss1d(3, 1);
        const Gaussian bad = gauss1d(-3, 1); // swapped destination mean
        MixtureFlow flow = build_flow(single(src), single(good), Method::A);
        MixtureFlow wrong = build_flow(single(src), single(bad), Method::A);
        // Integrate under the wrong field but compare to the intended target.
        const ParticleSet start = sample_source(single(src), 5000, 3);
        const MatrixXd endpoints =
            integrate(wrong, start, IntegratorConfig{50}).particles.positions;
        const double mean_err = std::abs(endpoints.col(0).mean() - good.mean(0));
        REQUIRE(mean_err > 3.0); // half the 6-unit separation
        // And the matched flow is not flagged.
        const PushforwardReport ok = pushforward_check(flow, 5000, 3, IntegratorConfig{50});
        REQUIRE(ok.mean_err < 0.1);
    }
    SECTION("method-B particle kinetic action estimates W2^2") {
        const auto [src, dst] = random_pair(2, 888);
        const double w2 = w2_squared(src, dst);
        const MixtureFlow flow = build_flow(single(src), single(dst), Method::B);
        const int n = 5000, steps = 50;
        const ParticleSet start = sample_source(single(src), n, 55);
        std::vector<double> times;
        for (int k = 0; k <= steps; ++k) times.push_back(double(k) / steps);
        const IntegrationResult res =
            integrate(flow, start, IntegratorConfig{steps}, times);
        // Trapezoid in t of ||u(t, x_p(t))||^2, then average over particles.
        std::vector<FlowSnapshot> snaps;
        for (double t : times) snaps.push_back(flow_snapshot(flow, t));
        double mean_action = 0.0, sq_sum = 0.0;
        for (int p = 0; p < n; ++p) {
            double action = 0.0;
            for (int k = 0; k <= steps; ++k) {
                const double w = (k == 0 || k == steps) ? 0.5 : 1.0;
                const VectorXd x = res.snapshots[k].row(p).transpose();
                action += w * snaps[k].velocity(x).squaredNorm();
            }
            action /= steps;
            mean_action += action;
            sq_sum += action * action;
        }
        mean_action /= n;
        const double stddev = std::sqrt((sq_sum / n - mean_action * mean_action) / n);
        REQUIRE(std::abs(mean_action - w2) <= 3.0 * stddev + 1e-3);
    }
}
