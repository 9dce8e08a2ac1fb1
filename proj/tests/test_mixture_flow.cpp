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

// Two well separated 2D components on the x axis.
Gmm two_component_2d(double x_offset, double y_shift, std::uint64_t seed) {
    VectorXd w(2);
    w << 0.5, 0.5;
    VectorXd m1(2), m2(2);
    m1 << -x_offset, y_shift;
    m2 << x_offset, y_shift;
    return Gmm(w, {Gaussian(m1, random_spd(2, seed, 1.6)),
                   Gaussian(m2, random_spd(2, seed + 1, 1.6))});
}

// Exhaustive oracle for a 2x2 transport LP: the polytope is one-dimensional,
// scan it finely.
MatrixXd lp_coupling_2x2(const VectorXd& a, const VectorXd& b, const MatrixXd& cost) {
    const double lo = std::max(0.0, a(0) + b(0) - 1.0);
    const double hi = std::min(a(0), b(0));
    double best_t = lo, best_cost = std::numeric_limits<double>::infinity();
    const int grid = 20000;
    for (int i = 0; i <= grid; ++i) {
        const double t = lo + (hi - lo) * i / grid;
        const double c = t * cost(0, 0) + (a(0) - t) * cost(0, 1) + (b(0) - t) * cost(1, 0) +
                         (1.0 - a(0) - b(0) + t) * cost(1, 1);
        if (c < best_cost) {
            best_cost = c;
            best_t = t;
        }
    }
    MatrixXd plan(2, 2);
    plan << best_t, a(0) - best_t, b(0) - best_t, 1.0 - a(0) - b(0) + best_t;
    return plan;
}

} // namespace

TEST_CASE("Gmm validation") {
    VectorXd w2(2);
    w2 << 0.5, 0.5;
    const Gaussian g1 = random_gaussian(2, 1);
    const Gaussian g2 = random_gaussian(2, 2);
    REQUIRE_NOTHROW(Gmm(w2, {g1, g2}));

    VectorXd bad_sum(2);
    bad_sum << 0.6, 0.5;
    REQUIRE_THROWS_AS(Gmm(bad_sum, {g1, g2}), ValidationError);

    VectorXd negative(2);
    negative << 1.5, -0.5;
    REQUIRE_THROWS_AS(Gmm(negative, {g1, g2}), ValidationError);

    REQUIRE_THROWS_AS(Gmm(w2, {g1, random_gaussian(3, 3)}), ValidationError);
    REQUIRE_THROWS_AS(Gmm(VectorXd::Ones(0), {}), ValidationError);
}

TEST_CASE("cost_matrix") {
    SECTION("1x1 equals the pair cost") {
        const Gaussian a = gauss1d(0, 1), b = gauss1d(2, 4);
        REQUIRE(cost_matrix(single(a), single(b), Method::A)(0, 0) ==
                Approx(surrogate_cost(a, b)).epsilon(1e-14));
        REQUIRE(cost_matrix(single(a), single(b), Method::B)(0, 0) ==
                Approx(w2_squared(a, b)).epsilon(1e-14));
    }
    SECTION("identical mixtures give a zero diagonal under Method B") {
        const Gmm mix = two_component_2d(3.0, 0.0, 10);
        const MatrixXd c = cost_matrix(mix, mix, Method::B);
        REQUIRE(c(0, 0) == Approx(0.0).margin(1e-9));
        REQUIRE(c(1, 1) == Approx(0.0).margin(1e-9));
    }
    SECTION("surrogate dominates W2 entrywise") {
        const Gmm src = two_component_2d(2.0, 0.0, 20);
        const Gmm dst = two_component_2d(2.5, 1.0, 30);
        const MatrixXd ca = cost_matrix(src, dst, Method::A);
        const MatrixXd cb = cost_matrix(src, dst, Method::B);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) REQUIRE(ca(i, j) >= cb(i, j) - 1e-9);
    }
}

TEST_CASE("sinkhorn") {
    SECTION("trivial 1x1 problem") {
        const Coupling c = sinkhorn(VectorXd::Ones(1), VectorXd::Ones(1),
                                    MatrixXd::Constant(1, 1, 3.0));
        REQUIRE(c.plan(0, 0) == Approx(1.0).epsilon(1e-12));
        REQUIRE(c.marginal_error <= 1e-9);
    }
    SECTION("symmetry under simultaneous row/column swap") {
        VectorXd half = VectorXd::Constant(2, 0.5);
        MatrixXd cost(2, 2);
        cost << 1.0, 2.0, 2.0, 1.0;
        const Coupling c = sinkhorn(half, half, cost, {0.5, 5000, 1e-10});
        REQUIRE(c.plan(0, 0) == Approx(c.plan(1, 1)).epsilon(1e-9));
        REQUIRE(c.plan(0, 1) == Approx(c.plan(1, 0)).epsilon(1e-9));
    }
    SECTION("low-temperature plan recovers the LP coupling") {
        VectorXd half = VectorXd::Constant(2, 0.5);
        MatrixXd cost(2, 2);
        cost << 0.0, 1.0, 1.0, 0.0;
        const Coupling c = sinkhorn(half, half, cost, {0.01, 5000, 1e-12});
        const MatrixXd lp = lp_coupling_2x2(half, half, cost);
        REQUIRE((c.plan - lp).cwiseAbs().maxCoeff() < 1e-3);
    }
    SECTION("marginals meet the tolerance on the builtin mixtures") {
        for (int scenario : {1, 2, 3}) {
            const GmmPair pair = runtime_scenario(scenario, 2);
            const MatrixXd cost = cost_matrix(pair.src, pair.dst, Method::A);
            const Coupling c =
                sinkhorn(pair.src.weights(), pair.dst.weights(), cost, {5e-2, 5000, 1e-9});
            REQUIRE(c.marginal_error <= 1e-9);
            REQUIRE(c.iterations_used <= 5000);
        }
    }
    SECTION("entropic cost decreases as epsilon decreases") {
        const GmmPair pair = runtime_scenario(2, 3);
        const MatrixXd cost = cost_matrix(pair.src, pair.dst, Method::B);
        double prev = -std::numeric_limits<double>::infinity();
        for (double eps : {1e-2, 5e-2, 2e-1}) { // increasing
            const Coupling c =
                sinkhorn(pair.src.weights(), pair.dst.weights(), cost, {eps, 5000, 1e-10});
            const double transport = (c.plan.array() * cost.array()).sum();
            REQUIRE(transport >= prev - 1e-7);
            prev = transport;
        }
    }
    SECTION("zero weights produce zero rows") {
        VectorXd a(2), b(2);
        a << 1.0, 0.0;
        b << 0.5, 0.5;
        MatrixXd cost(2, 2);
        cost << 0.3, 0.9, 0.8, 0.1;
        const Coupling c = sinkhorn(a, b, cost, {0.1, 2000, 1e-10});
        REQUIRE(c.plan.row(1).cwiseAbs().maxCoeff() == 0.0);
        REQUIRE(c.marginal_error <= 1e-10);
    }
    SECTION("invalid inputs are rejected") {
        VectorXd half = VectorXd::Constant(2, 0.5);
        MatrixXd cost = MatrixXd::Zero(2, 2);
        REQUIRE_THROWS_AS(sinkhorn(half, half, cost, {0.0, 10, 1e-9}), ValidationError);
        cost(0, 0) = std::numeric_limits<double>::quiet_NaN();
        REQUIRE_THROWS_AS(sinkhorn(half, half, cost), ValidationError);
    }
}

TEST_CASE("build_flow and evaluation") {
    SECTION("single-pair flow degenerates to the pair field") {
        const Gaussian a = gauss1d(0, 1), b = gauss1d(2, 4);
        for (Method method : {Method::A, Method::B}) {
            const MixtureFlow flow = build_flow(single(a), single(b), method);
            REQUIRE(flow.coupling.plan(0, 0) == Approx(1.0).epsilon(1e-9));
            const GaussianPath path = method == Method::A ? GaussianPath::linear(a, b)
                                                          : GaussianPath::geodesic(a, b);
            RngStream rng(3, 0);
            for (int probe = 0; probe < 5; ++probe) {
                const double t = rng.next_uniform();
                const VectorXd x = 3.0 * rng.next_normal_vector(1);
                REQUIRE((global_velocity(flow, t, x) - field_at(path, t, x)).norm() < 1e-12);
                REQUIRE(responsibilities(flow, t, x)(0, 0) == Approx(1.0).epsilon(1e-12));
            }
        }
    }
    SECTION("self-transport stays put") {
        const Gmm mix = two_component_2d(4.0, 0.0, 50);
        const MixtureFlow flow = build_flow(mix, mix, Method::A, 1e-2);
        // Coupling concentrates on the diagonal at low temperature.
        REQUIRE(flow.coupling.plan(0, 0) == Approx(0.5).margin(1e-3));
        REQUIRE(flow.coupling.plan(1, 1) == Approx(0.5).margin(1e-3));
        RngStream rng(4, 0);
        for (int probe = 0; probe < 20; ++probe) {
            const double t = rng.next_uniform();
            VectorXd x(2);
            x << (rng.next_uniform() - 0.5) * 8.0, rng.next_normal();
            REQUIRE(std::abs(density_at(flow, t, x) - mix.density(x)) <
                    1e-6 * std::max(1e-12, mix.density(x)) + 1e-12);
        }
    }
    SECTION("defaults follow the reference settings") {
        const MixtureFlow flow =
            build_flow(single(gauss1d(0, 1)), single(gauss1d(1, 2)), Method::A);
        REQUIRE(flow.coupling.epsilon == Approx(5e-2));
        REQUIRE(flow.coupling.marginal_error <= 1e-9);
    }
}

TEST_CASE("density_at") {
    const Gmm src = two_component_2d(2.0, 0.0, 60);
    const Gmm dst = two_component_2d(2.0, 2.0, 70);
    MixtureFlow flow = build_flow(src, dst, Method::A);

    SECTION("endpoint densities under exact marginals") {
        // Project the plan once: columns then rows, so row sums are exact.
        MatrixXd plan = flow.coupling.plan;
        for (int j = 0; j < 2; ++j) plan.col(j) *= dst.weights()(j) / plan.col(j).sum();
        for (int i = 0; i < 2; ++i) plan.row(i) *= src.weights()(i) / plan.row(i).sum();
        MixtureFlow projected = flow;
        projected.coupling.plan = plan;
        RngStream rng(9, 0);
        for (int probe = 0; probe < 50; ++probe) {
            VectorXd x(2);
            x << 6.0 * (rng.next_uniform() - 0.5), 3.0 * rng.next_uniform();
            const double rho0 = src.density(x);
            REQUIRE(std::abs(density_at(projected, 0.0, x) - rho0) <=
                    1e-9 * std::max(rho0, 1e-12));
        }
    }
    SECTION("single-pair density is the path Gaussian") {
        const Gaussian a = gauss1d(0, 1), b = gauss1d(2, 4);
        const MixtureFlow pair_flow = build_flow(single(a), single(b), Method::A);
        const GaussianPath path = GaussianPath::linear(a, b);
        for (double t : {0.0, 0.4, 1.0}) {
            const VectorXd x = VectorXd::Constant(1, 0.7);
            REQUIRE(density_at(pair_flow, t, x) ==
                    Approx(density(path_at(path, t), x)).epsilon(1e-9));
        }
    }
    SECTION("1D interpolating density integrates to one") {
        const MixtureFlow f1 =
            build_flow(single(gauss1d(-1, 0.5)), single(gauss1d(2, 2.0)), Method::A);
        const double t = 0.5;
        const int n = 4000;
        const double lo = -12.0, hi = 14.0;
        double integral = 0.0;
        for (int i = 0; i <= n; ++i) {
            const double x = lo + (hi - lo) * i / n;
            const double w = (i == 0 || i == n) ? 0.5 : 1.0;
            integral += w * density_at(f1, t, VectorXd::Constant(1, x));
        }
        integral *= (hi - lo) / n;
        REQUIRE(integral == Approx(1.0).margin(1e-3));
    }
}

TEST_CASE("responsibilities and global velocity") {
    const Gmm src = two_component_2d(8.0, 0.0, 80);
    const Gmm dst = two_component_2d(8.0, 1.0, 90);
    const MixtureFlow flow = build_flow(src, dst, Method::A, 1e-2);

    SECTION("normalization on the simplex") {
        RngStream rng(12, 0);
        for (int probe = 0; probe < 10; ++probe) {
            VectorXd x(2);
            x << 16.0 * (rng.next_uniform() - 0.5), rng.next_normal();
            const MatrixXd gamma = responsibilities(flow, 0.5, x);
            REQUIRE(gamma.minCoeff() >= 0.0);
            REQUIRE(gamma.sum() == Approx(1.0).epsilon(1e-12));
        }
    }
    SECTION("deep inside one basin the responsibility saturates") {
        VectorXd x(2);
        x << -8.0, 0.2; // >= 10 std devs from the +8 components
        const MatrixXd gamma = responsibilities(flow, 0.0, x);
        REQUIRE(gamma(0, 0) + gamma(0, 1) > 1.0 - 1e-6);
    }
    SECTION("symmetric configuration splits evenly on the axis") {
        VectorXd w(2);
        w << 0.5, 0.5;
        const SpdMatrix iso(MatrixXd::Identity(2, 2));
        VectorXd left(2), right(2);
        left << -2.0, 0.0;
        right << 2.0, 0.0;
        const Gmm s(w, {Gaussian(left, iso), Gaussian(right, iso)});
        VectorXd lu(2), ru(2);
        lu << -2.0, 1.0;
        ru << 2.0, 1.0;
        const Gmm t(w, {Gaussian(lu, iso), Gaussian(ru, iso)});
        const MixtureFlow sym_flow = build_flow(s, t, Method::A);
        VectorXd on_axis(2);
        on_axis << 0.0, 0.5;
        const MatrixXd gamma = responsibilities(sym_flow, 0.5, on_axis);
        REQUIRE(gamma(0, 0) == Approx(gamma(1, 1)).margin(1e-10));
        REQUIRE(gamma(0, 1) == Approx(gamma(1, 0)).margin(1e-10));
    }
    SECTION("global velocity is a convex combination of the pair fields") {
        RngStream rng(14, 0);
        for (int probe = 0; probe < 10; ++probe) {
            const double t = 0.1 + 0.8 * rng.next_uniform();
            VectorXd x(2);
            x << 10.0 * (rng.next_uniform() - 0.5), rng.next_normal();
            const VectorXd u = global_velocity(flow, t, x);
            for (int axis = 0; axis < 2; ++axis) {
                double lo = std::numeric_limits<double>::infinity(), hi = -lo;
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j) {
                        const double v = field_at(flow.path(i, j), t, x)(axis);
                        lo = std::min(lo, v);
                        hi = std::max(hi, v);
                    }
                REQUIRE(u(axis) >= lo - 1e-9);
                REQUIRE(u(axis) <= hi + 1e-9);
            }
        }
    }
    SECTION("identical pair paths reproduce the common field") {
        VectorXd w(2);
        w << 0.5, 0.5;
        const Gaussian g0 = gauss1d(0, 1), g1 = gauss1d(3, 2);
        const Gmm s(w, {g0, g0});
        const Gmm t(w, {g1, g1});
        const MixtureFlow f = build_flow(s, t, Method::A);
        const GaussianPath path = GaussianPath::linear(g0, g1);
        const VectorXd x = VectorXd::Constant(1, 0.4);
        REQUIRE((global_velocity(f, 0.3, x) - field_at(path, 0.3, x)).norm() < 1e-12);
    }
    SECTION("full underflow raises DegenerateDensity") {
        VectorXd x(2);
        x << 1e6, 0.0;
        REQUIRE_THROWS_AS(responsibilities(flow, 0.5, x), DegenerateDensity);
    }
}

TEST_CASE("mixture flow satisfies the continuity equation numerically") {
    const Gmm src = two_component_2d(2.0, 0.0, 100);
    const Gmm dst = two_component_2d(1.5, 1.5, 110);
    const MixtureFlow flow = build_flow(src, dst, Method::A);
    const double h = 1e-4;
    RngStream rng(21, 0);
    for (int probe = 0; probe < 10; ++probe) {
        const double t = 0.2 + 0.6 * rng.next_uniform();
        VectorXd x(2);
        x << 3.0 * (rng.next_uniform() - 0.5), 1.5 * rng.next_uniform();
        const double drho_dt =
            (density_at(flow, t + h, x) - density_at(flow, t - h, x)) / (2 * h);
        double div_rho_u = 0.0;
        for (int axis = 0; axis < 2; ++axis) {
            VectorXd xp = x, xm = x;
            xp(axis) += h;
            xm(axis) -= h;
            const double fp = density_at(flow, t, xp) * global_velocity(flow, t, xp)(axis);
            const double fm = density_at(flow, t, xm) * global_velocity(flow, t, xm)(axis);
            div_rho_u += (fp - fm) / (2 * h);
        }
        REQUIRE(std::abs(drho_dt + div_rho_u) < 1e-4);
    }
}
