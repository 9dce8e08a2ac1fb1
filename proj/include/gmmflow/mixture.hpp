#pragma once

// Mixture-level transport: pairwise cost matrices, log-domain Sinkhorn
// coupling of the component weights, the interpolating mixture density, and
// the responsibility-weighted global velocity field.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gmmflow/errors.hpp"
#include "gmmflow/gaussian.hpp"
#include "gmmflow/path.hpp"
#include "gmmflow/spd.hpp"

namespace gmmflow {

// Log-density exponents below this are treated as fully underflowed.
inline constexpr double kLogUnderflowFloor = -745.0;

class Gmm {
public:
    Gmm(VectorXd weights, std::vector<Gaussian> components)
        : weights_(std::move(weights)), components_(std::move(components)) {
        if (components_.empty()) throw ValidationError("Gmm: no components");
        if (weights_.size() != static_cast<Eigen::Index>(components_.size()))
            throw ValidationError("Gmm: weight count does not match component count");
        if (weights_.minCoeff() < 0.0)
            throw ValidationError("Gmm: negative weight");
        if (std::abs(weights_.sum() - 1.0) > 1e-12)
            throw ValidationError("Gmm: weights sum to " + std::to_string(weights_.sum()) +
                                  ", not 1");
        const int d = components_.front().dim();
        for (std::size_t i = 1; i < components_.size(); ++i)
            if (components_[i].dim() != d)
                throw ValidationError("Gmm: component " + std::to_string(i) +
                                      " has dim " + std::to_string(components_[i].dim()) +
                                      ", expected " + std::to_string(d));
    }

    int dim() const { return components_.front().dim(); }
    int size() const { return static_cast<int>(components_.size()); }
    const VectorXd& weights() const { return weights_; }
    const std::vector<Gaussian>& components() const { return components_; }
    const Gaussian& component(int i) const { return components_[static_cast<std::size_t>(i)]; }

    double density(const VectorXd& x) const {
        double total = 0.0;
        for (int i = 0; i < size(); ++i)
            if (weights_(i) > 0.0) total += weights_(i) * gmmflow::density(component(i), x);
        return total;
    }

    // Mixture mean and covariance (moment-matched single Gaussian).
    VectorXd mean() const {
        VectorXd m = VectorXd::Zero(dim());
        for (int i = 0; i < size(); ++i) m += weights_(i) * component(i).mean;
        return m;
    }

    MatrixXd covariance() const {
        const VectorXd m = mean();
        MatrixXd c = MatrixXd::Zero(dim(), dim());
        for (int i = 0; i < size(); ++i) {
            const VectorXd& mu = component(i).mean;
            c += weights_(i) * (component(i).cov.entries() + mu * mu.transpose());
        }
        return c - m * m.transpose();
    }

private:
    VectorXd weights_;
    std::vector<Gaussian> components_;
};

enum class Method { A, B };

inline const char* method_name(Method m) { return m == Method::A ? "A" : "B"; }

// Pairwise transport costs: surrogate (Method A) or exact W2^2 (Method B).
inline MatrixXd cost_matrix(const Gmm& src, const Gmm& dst, Method method) {
    if (src.dim() != dst.dim())
        throw ValidationError("cost_matrix: mixtures have different dims");
    MatrixXd cost(src.size(), dst.size());
    for (int i = 0; i < src.size(); ++i)
        for (int j = 0; j < dst.size(); ++j) {
            try {
                cost(i, j) = method == Method::A
                                 ? surrogate_cost(src.component(i), dst.component(j))
                                 : w2_squared(src.component(i), dst.component(j));
            } catch (const NotSpd& e) {
                throw NotSpd("cost_matrix pair (" + std::to_string(i) + "," +
                             std::to_string(j) + "): " + e.what());
            }
        }
    return cost;
}

struct SinkhornOptions {
    double epsilon = 5e-2;
    int max_iter = 5000;
    double tol = 1e-9; // l1 marginal violation
};

// Entropic OT plan over component pairs, with the cost matrix it was solved
// against.  Row sums match a and column sums match b up to marginal_error.
struct Coupling {
    MatrixXd plan;
    MatrixXd cost;
    double epsilon = 0.0;
    int iterations_used = 0;
    double marginal_error = 0.0;
    double regularized_objective = 0.0; // <plan,cost> + eps * sum plan (log plan - 1)
};

namespace detail {

// log sum_k exp(v_k) over finite entries; -inf entries contribute nothing.
inline double log_sum_exp(const VectorXd& v) {
    const double m = v.maxCoeff();
    if (!std::isfinite(m)) return m; // all -inf (or a stray +inf/NaN)
    double s = 0.0;
    for (Eigen::Index k = 0; k < v.size(); ++k) s += std::exp(v(k) - m);
    return m + std::log(s);
}

} // namespace detail

// Log-domain Sinkhorn.  Potentials are updated through log-sum-exp, so small
// epsilon against large costs does not underflow the scaling vectors.
// Deterministic for fixed inputs; convergence is judged on the l1 marginal
// violation after each sweep.  If max_iter is reached the achieved error is
// reported and the plan is not renormalized.
inline Coupling sinkhorn(const VectorXd& a, const VectorXd& b, const MatrixXd& cost,
                         const SinkhornOptions& opts = {}) {
    const Eigen::Index k0 = a.size(), k1 = b.size();
    if (cost.rows() != k0 || cost.cols() != k1)
        throw ValidationError("sinkhorn: cost matrix shape mismatch");
    if (!(opts.epsilon > 0.0)) throw ValidationError("sinkhorn: epsilon must be positive");
    if (!cost.allFinite()) throw ValidationError("sinkhorn: cost matrix has non-finite entries");
    const double neg_inf = -std::numeric_limits<double>::infinity();
    VectorXd log_a(k0), log_b(k1);
    for (Eigen::Index i = 0; i < k0; ++i) log_a(i) = a(i) > 0.0 ? std::log(a(i)) : neg_inf;
    for (Eigen::Index j = 0; j < k1; ++j) log_b(j) = b(j) > 0.0 ? std::log(b(j)) : neg_inf;

    const double eps = opts.epsilon;
    VectorXd f = VectorXd::Zero(k0), g = VectorXd::Zero(k1);
    Coupling out;
    out.cost = cost;
    out.epsilon = eps;
    auto rebuild_plan = [&]() {
        out.plan.resize(k0, k1);
        for (Eigen::Index i = 0; i < k0; ++i)
            for (Eigen::Index j = 0; j < k1; ++j)
                out.plan(i, j) = std::exp((f(i) + g(j) - cost(i, j)) / eps);
    };

    out.marginal_error = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= opts.max_iter; ++it) {
        for (Eigen::Index i = 0; i < k0; ++i) {
            const VectorXd row = (g - cost.row(i).transpose()) / eps;
            f(i) = log_a(i) == neg_inf ? neg_inf
                                       : eps * (log_a(i) - detail::log_sum_exp(row));
        }
        for (Eigen::Index j = 0; j < k1; ++j) {
            const VectorXd col = (f - cost.col(j)) / eps;
            g(j) = log_b(j) == neg_inf ? neg_inf
                                       : eps * (log_b(j) - detail::log_sum_exp(col));
        }
        if ((log_a.array() != neg_inf && !f.array().isFinite()).any() ||
            (log_b.array() != neg_inf && !g.array().isFinite()).any())
            throw NumericalUnderflow("sinkhorn: potentials degenerated; raise epsilon");
        out.iterations_used = it;
        rebuild_plan();
        const double row_err = (out.plan.rowwise().sum() - a).cwiseAbs().sum();
        const double col_err = (out.plan.colwise().sum().transpose() - b).cwiseAbs().sum();
        out.marginal_error = std::max(row_err, col_err);
        if (out.marginal_error <= opts.tol) break;
    }

    double obj = 0.0;
    for (Eigen::Index i = 0; i < k0; ++i)
        for (Eigen::Index j = 0; j < k1; ++j) {
            const double p = out.plan(i, j);
            obj += p * cost(i, j);
            if (p > 0.0) obj += eps * p * (std::log(p) - 1.0);
        }
    out.regularized_objective = obj;
    return out;
}

// One pair field evaluated and cached at a fixed time: affine field plus the
// Gaussian N(mu_ij(t), Sigma_ij(t)) in log-density-ready form.
struct PairFieldSnapshot {
    double log_weight = 0.0; // log pi_ij, -inf for zero-weight pairs
    AffineField field;
    MatrixXd cov_eigenvectors;
    VectorXd cov_eigenvalues;
    double log_norm_const = 0.0; // -(d log 2pi + log det Sigma)/2

    double log_gaussian(const VectorXd& x) const {
        const VectorXd y = cov_eigenvectors.transpose() * (x - field.center);
        const double q = (y.array().square() / cov_eigenvalues.array()).sum();
        return log_norm_const - 0.5 * q;
    }
};

// All pair fields of a mixture flow frozen at one time t.  The global field
// and density are plain per-point evaluations against this table, which is
// what the particle integrator re-uses across particles at shared stage times.
struct FlowSnapshot {
    double t = 0.0;
    int dim = 0;
    std::vector<PairFieldSnapshot> pairs;

    double density(const VectorXd& x) const {
        double total = 0.0;
        for (const auto& p : pairs)
            if (std::isfinite(p.log_weight)) {
                const double l = p.log_weight + p.log_gaussian(x);
                if (l > kLogUnderflowFloor) total += std::exp(l);
            }
        return total;
    }

    // Responsibility-weighted field value sum_ij gamma_ij v_ij(t,x).
    VectorXd velocity(const VectorXd& x) const {
        const std::size_t n = pairs.size();
        std::vector<double> logs(n);
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < n; ++k) {
            logs[k] = std::isfinite(pairs[k].log_weight)
                          ? pairs[k].log_weight + pairs[k].log_gaussian(x)
                          : -std::numeric_limits<double>::infinity();
            m = std::max(m, logs[k]);
        }
        if (m < kLogUnderflowFloor)
            throw DegenerateDensity("velocity: all pair densities underflow at t = " +
                                    std::to_string(t));
        VectorXd u = VectorXd::Zero(dim);
        double wsum = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double w = std::exp(logs[k] - m);
            if (w > 0.0) {
                u += w * pairs[k].field.value(x);
                wsum += w;
            }
        }
        return u / wsum;
    }

    // gamma_ij(t,x) as a flat vector in pair order (row-major over (i,j)).
    VectorXd responsibilities(const VectorXd& x) const {
        const std::size_t n = pairs.size();
        VectorXd logs(n);
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < n; ++k) {
            logs(static_cast<Eigen::Index>(k)) =
                std::isfinite(pairs[k].log_weight)
                    ? pairs[k].log_weight + pairs[k].log_gaussian(x)
                    : -std::numeric_limits<double>::infinity();
            m = std::max(m, logs(static_cast<Eigen::Index>(k)));
        }
        if (m < kLogUnderflowFloor)
            throw DegenerateDensity("responsibilities: all pair densities underflow");
        VectorXd w = (logs.array() - m).exp();
        for (Eigen::Index k = 0; k < w.size(); ++k)
            if (!std::isfinite(logs(k))) w(k) = 0.0;
        return w / w.sum();
    }
};

// Assembled transport flow: coupling + one Gaussian path per component pair
// (all Linear for Method A, all Geodesic for Method B), row-major over (i,j).
struct MixtureFlow {
    Method method = Method::A;
    int k0 = 0;
    int k1 = 0;
    Coupling coupling;
    std::vector<GaussianPath> pair_paths;

    int dim() const { return pair_paths.front().dim(); }
    const GaussianPath& path(int i, int j) const {
        return pair_paths[static_cast<std::size_t>(i) * static_cast<std::size_t>(k1) +
                          static_cast<std::size_t>(j)];
    }
};

inline FlowSnapshot flow_snapshot(const MixtureFlow& flow, double t) {
    detail::check_time(t, "flow_snapshot");
    FlowSnapshot snap;
    snap.t = t;
    snap.dim = flow.dim();
    snap.pairs.reserve(flow.pair_paths.size());
    for (int i = 0; i < flow.k0; ++i)
        for (int j = 0; j < flow.k1; ++j) {
            const GaussianPath& path = flow.path(i, j);
            PairFieldSnapshot p;
            const double w = flow.coupling.plan(i, j);
            p.log_weight = w > 0.0 ? std::log(w) : -std::numeric_limits<double>::infinity();
            p.field = affine_field_at(path, t);
            const Gaussian g = path_at(path, t);
            p.cov_eigenvectors = g.cov.eigenvectors();
            p.cov_eigenvalues = g.cov.eigenvalues();
            p.log_norm_const = -0.5 * (snap.dim * std::log(2.0 * std::numbers::pi) +
                                       g.cov.log_det());
            snap.pairs.push_back(std::move(p));
        }
    return snap;
}

inline MixtureFlow build_flow(const Gmm& src, const Gmm& dst, Method method,
                              double epsilon = 5e-2,
                              int max_iter = 5000, double tol = 1e-9) {
    MixtureFlow flow;
    flow.method = method;
    flow.k0 = src.size();
    flow.k1 = dst.size();
    const MatrixXd cost = cost_matrix(src, dst, method);
    flow.coupling = sinkhorn(src.weights(), dst.weights(), cost,
                             SinkhornOptions{epsilon, max_iter, tol});
    flow.pair_paths.reserve(static_cast<std::size_t>(src.size()) *
                            static_cast<std::size_t>(dst.size()));
    for (int i = 0; i < src.size(); ++i)
        for (int j = 0; j < dst.size(); ++j)
            flow.pair_paths.push_back(method == Method::A
                                          ? GaussianPath::linear(src.component(i),
                                                                 dst.component(j))
                                          : GaussianPath::geodesic(src.component(i),
                                                                   dst.component(j)));
    return flow;
}

// rho_t(x) = sum_ij pi_ij N(x | mu_ij(t), Sigma_ij(t)).
inline double density_at(const MixtureFlow& flow, double t, const VectorXd& x) {
    return flow_snapshot(flow, t).density(x);
}

// gamma_ij(t,x) as a K0 x K1 matrix on the simplex.
inline MatrixXd responsibilities(const MixtureFlow& flow, double t, const VectorXd& x) {
    const VectorXd flat = flow_snapshot(flow, t).responsibilities(x);
    MatrixXd out(flow.k0, flow.k1);
    for (int i = 0; i < flow.k0; ++i)
        for (int j = 0; j < flow.k1; ++j)
            out(i, j) = flat(static_cast<Eigen::Index>(i) * flow.k1 + j);
    return out;
}

// u(t,x) = sum_ij gamma_ij(t,x) v_ij(t,x).
inline VectorXd global_velocity(const MixtureFlow& flow, double t, const VectorXd& x) {
    return flow_snapshot(flow, t).velocity(x);
}

} // namespace gmmflow
