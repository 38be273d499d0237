#pragma once

// Verification instruments: the stochastic-filter equivalence oracle, window
// gramian diagnostics, and the Lyapunov-value check. Nothing here feeds back
// into the estimation path.

#include <setmem/estimator.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace setmem {

struct KalmanState {
    Vec xi;
    Mat Pbar;
};

// Per-step noise parameters under which a covariance filter reproduces the
// ellipsoidal recursion exactly.
struct NoiseEquivalents {
    double lambda = 1.0;                  // dynamics inflation factor
    Mat A_bar;                            // lambda * A
    Vec w_diag;                           // process variances, one per generator
    Mat F;                                // fused measurement normals (columns)
    Vec v_diag;                           // measurement variances of fused rows
    Vec y_eff;                            // effective measurement values
    std::vector<std::size_t> fused_rows;  // indices into the step's measurement list
    Vec omega;                            // information weights of fused rows
    double sigma_decrement = 0.0;         // sum alpha*beta^2*delta^2
};

// Build the equivalent noise model from one estimator step's trace. Rows
// frozen by a zero gain carry no information and are dropped; a unit gain
// (equality constraint) has no finite-variance counterpart and is rejected.
inline NoiseEquivalents derive_equivalents(const SystemStep& sys, double sigma_pred_in,
                                           const PredictionScratch& pred,
                                           const std::vector<Measurement>& ms,
                                           const std::vector<CorrectionOutcome>& outcomes)
{
    detail::require(ms.size() == outcomes.size(), "derive_equivalents: outcome count mismatch");
    detail::require(sigma_pred_in > 0.0, "derive_equivalents: sigma must be positive");

    NoiseEquivalents eq;
    eq.lambda = pred.mu0 > 0.0 && pred.mu_sum > 0.0 ? std::sqrt(1.0 + pred.mu_sum / pred.mu0) : 1.0;
    eq.A_bar = eq.lambda * sys.A;

    std::vector<double> w;
    for (Eigen::Index j = 0; j < sys.R.cols(); ++j) {
        const double nrm = sys.R.col(j).norm();
        w.push_back(nrm > 0.0 ? (pred.mu_sum + pred.mu0) / (sigma_pred_in * nrm) : 0.0);
    }
    eq.w_diag = Eigen::Map<Vec>(w.data(), static_cast<Eigen::Index>(w.size()));

    std::vector<double> v, y, om;
    std::vector<Eigen::Index> cols;
    for (std::size_t i = 0; i < ms.size(); ++i) {
        const CorrectionOutcome& o = outcomes[i];
        if (!o.updated()) continue;
        if (o.scratch.beta >= 1.0)
            throw std::domain_error("derive_equivalents: unit-gain (equality) update has no noise equivalent");
        const double omega = o.scratch.alpha * o.scratch.beta / (1.0 - o.scratch.beta);
        om.push_back(omega);
        v.push_back(1.0 / omega);
        y.push_back(0.5 * (o.scratch.ybar + o.scratch.ylow));
        cols.push_back(static_cast<Eigen::Index>(i));
        eq.fused_rows.push_back(i);
        eq.sigma_decrement +=
            o.scratch.alpha * o.scratch.beta * o.scratch.beta * o.scratch.delta * o.scratch.delta;
    }
    eq.F.resize(sys.dim(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) eq.F.col(static_cast<Eigen::Index>(j)) = ms[cols[j]].f;
    eq.v_diag = Eigen::Map<Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
    eq.y_eff = Eigen::Map<Vec>(y.data(), static_cast<Eigen::Index>(y.size()));
    eq.omega = Eigen::Map<Vec>(om.data(), static_cast<Eigen::Index>(om.size()));
    return eq;
}

// Covariance-form predict/update in fading-memory style: the inflation
// factor scales the covariance propagation only, the mean follows the true
// dynamics. Measurements are fused one row at a time, mirroring the
// sequential order of the ellipsoidal recursion.
inline KalmanState kalman_step(const KalmanState& s, const Mat& a, double lambda, const Mat& b,
                               const Vec& tau, const Mat& r, const Vec& w_diag, const Mat& f,
                               const Vec& v_diag, const Vec& y_eff)
{
    detail::require(f.cols() == v_diag.size() && f.cols() == y_eff.size(),
                    "kalman_step: measurement size mismatch");
    KalmanState next;
    next.xi = a * s.xi;
    if (b.size() > 0) next.xi += b * tau;
    next.Pbar = detail::symmetrize((lambda * lambda) * a * s.Pbar * a.transpose());
    if (r.size() > 0 && w_diag.size() > 0)
        next.Pbar = detail::symmetrize(next.Pbar + r * w_diag.asDiagonal() * r.transpose());

    for (Eigen::Index i = 0; i < f.cols(); ++i) {
        const Vec fi = f.col(i);
        const Vec pf = next.Pbar * fi;
        const double innovation_var = fi.dot(pf) + v_diag[i];
        if (!(innovation_var > 0.0))
            throw std::runtime_error("kalman_step: singular innovation variance " +
                                     std::to_string(innovation_var));
        const Vec gain = pf / innovation_var;
        next.xi += gain * (y_eff[i] - fi.dot(next.xi));
        next.Pbar = detail::symmetrize(next.Pbar - gain * pf.transpose());
    }
    return next;
}

struct EquivalenceReport {
    double max_state_dev = 0.0;   // max_k |xhat_k - xi_k|
    double max_shape_dev = 0.0;   // max_k |P_k - Pbar_k|_inf
    double max_shape_rel = 0.0;   // max_k |P_k - Pbar_k|_inf / (1 + |P_k|_inf)
    double max_sigma_dev = 0.0;   // scale recursion residual
    double max_info_dev = 0.0;    // information-form identity residual (relative)
    long steps = 0;
};

// Runs the ellipsoidal estimator and the covariance filter side by side on
// the same history and reports the largest deviations. Histories must
// contain no equality constraints; rescaling stays off and the trace
// criterion is used so the two recursions are comparable step by step.
inline EquivalenceReport check_equivalence(const std::vector<SystemStep>& systems,
                                           const std::vector<std::vector<Measurement>>& measurements,
                                           const Vec& xhat0, const Mat& p0, double sigma0)
{
    detail::require(systems.size() == measurements.size(), "check_equivalence: history size mismatch");
    for (const auto& ms : measurements)
        for (const auto& m : ms)
            detail::require(classify(m) != MeasurementKind::Equality,
                            "check_equivalence: equality constraints are not supported by the oracle");

    EstimatorConfig cfg;
    cfg.criterion = PredictionCriterion::trace();
    cfg.ordering = MeasurementOrdering::InputOrder;
    cfg.rescaling = false;

    EstimatorState state = init(xhat0, p0, sigma0);
    KalmanState kalman{xhat0, p0};
    EquivalenceReport report;

    for (std::size_t k = 0; k < systems.size(); ++k) {
        const double sigma_in = state.sigma;
        const Mat p_pred = predict_shape_trace(state.P, state.sigma, systems[k].A, systems[k].R);

        auto [next, rep] = step(state, systems[k], measurements[k], cfg);
        NoiseEquivalents eq =
            derive_equivalents(systems[k], sigma_in, rep.prediction, measurements[k], rep.outcomes);
        kalman = kalman_step(kalman, systems[k].A, eq.lambda, systems[k].B, systems[k].tau,
                             systems[k].R, eq.w_diag, eq.F, eq.v_diag, eq.y_eff);

        report.max_state_dev = std::max(report.max_state_dev, (next.xhat - kalman.xi).norm());
        const double shape_dev = (next.P - kalman.Pbar).cwiseAbs().maxCoeff();
        report.max_shape_dev = std::max(report.max_shape_dev, shape_dev);
        report.max_shape_rel =
            std::max(report.max_shape_rel, shape_dev / (1.0 + next.P.cwiseAbs().maxCoeff()));
        report.max_sigma_dev =
            std::max(report.max_sigma_dev, std::abs(next.sigma - (sigma_in - eq.sigma_decrement)));

        // Information-form identity, checked when the shape is invertible.
        if (eq.F.cols() > 0 && detail::is_spd(next.P) && detail::is_spd(p_pred)) {
            Mat info = p_pred.inverse();
            for (Eigen::Index j = 0; j < eq.F.cols(); ++j)
                info += eq.omega[j] * (eq.F.col(j) * eq.F.col(j).transpose());
            const Mat lhs = next.P.inverse();
            const double rel = (lhs - info).cwiseAbs().maxCoeff() / (1.0 + lhs.cwiseAbs().maxCoeff());
            report.max_info_dev = std::max(report.max_info_dev, rel);
        }

        state = std::move(next);
        ++report.steps;
    }
    return report;
}

// One entry of the history the gramian windows are built from.
struct GramianStep {
    Mat A;        // invertible state matrix
    Mat R;        // process generators (may be empty)
    Vec w_diag;   // process variances, size = R columns
    Mat F;        // fused measurement normals (may be empty)
    Vec v_diag;   // measurement variances, size = F columns
    double lambda = 1.0;
};

struct GramianReport {
    Mat observability;
    Mat controllability;
    int h = 0;
    int kappa = -1;  // variable lookback of the sporadic window; -1 if unavailable
    double obs_min_eig = 0.0, obs_max_eig = 0.0;
    double ctrl_min_eig = 0.0, ctrl_max_eig = 0.0;
    bool uniformly_observable = false;
    bool sporadically_observable = false;
    bool uniformly_controllable = false;
};

namespace detail {

// Observability window over [base, last]: sum of lifted F V^-1 F' terms
// expressed in the window-start coordinates.
inline Mat observability_window(const std::vector<GramianStep>& hist, int base, int last)
{
    const Eigen::Index n = hist[static_cast<std::size_t>(base)].A.rows();
    Mat gram = Mat::Zero(n, n);
    Mat phi = Mat::Identity(n, n);  // state transition from base to i
    double lam = 1.0;
    for (int i = base; i <= last; ++i) {
        const GramianStep& st = hist[static_cast<std::size_t>(i)];
        if (st.F.size() > 0) {
            Mat fvft = Mat::Zero(n, n);
            for (Eigen::Index j = 0; j < st.F.cols(); ++j)
                fvft += (1.0 / st.v_diag[j]) * (st.F.col(j) * st.F.col(j).transpose());
            gram += (lam * lam) * phi.transpose() * fvft * phi;
        }
        if (i < last) {
            phi = st.A * phi;
            lam *= st.lambda;
        }
    }
    return symmetrize(gram);
}

inline Mat controllability_window(const std::vector<GramianStep>& hist, int base, int last)
{
    const Eigen::Index n = hist[static_cast<std::size_t>(base)].A.rows();
    Mat gram = Mat::Zero(n, n);
    Mat phi_fwd = Mat::Identity(n, n);  // transition from base to i+1
    double lam = 1.0;
    for (int i = base; i <= last - 1; ++i) {
        const GramianStep& st = hist[static_cast<std::size_t>(i)];
        Eigen::FullPivLU<Mat> lu(st.A);
        if (!lu.isInvertible())
            throw std::domain_error("gramians: singular state matrix in window");
        const double cond = st.A.cwiseAbs().maxCoeff() * lu.inverse().cwiseAbs().maxCoeff();
        if (cond > 1e12)
            log::warn("gramians: ill-conditioned state matrix, cond ~ " + std::to_string(cond));
        phi_fwd = st.A * phi_fwd;
        lam *= st.lambda;
        if (st.R.size() > 0) {
            Mat back = phi_fwd.fullPivLu().solve(Mat::Identity(n, n));  // base <- i+1
            Mat rwr = st.R * st.w_diag.asDiagonal() * st.R.transpose();
            gram += (1.0 / (lam * lam)) * back * rwr * back.transpose();
        }
    }
    return symmetrize(gram);
}

}  // namespace detail

// Window gramians ending at step k. The fixed window spans [k-h, k]; the
// sporadic window stretches back until it covers h measurement instants.
inline GramianReport gramians(const std::vector<GramianStep>& hist, int k, int h,
                              double eig_floor = 1e-9)
{
    detail::require(!hist.empty() && k >= 0 && k < static_cast<int>(hist.size()),
                    "gramians: step index out of range");
    detail::require(h >= 1, "gramians: window length must be positive");

    GramianReport rep;
    rep.h = h;
    const int base_fixed = std::max(0, k - h);

    rep.observability = detail::observability_window(hist, base_fixed, k);
    rep.controllability = detail::controllability_window(hist, base_fixed, k);

    Eigen::SelfAdjointEigenSolver<Mat> eo(rep.observability);
    Eigen::SelfAdjointEigenSolver<Mat> ec(rep.controllability);
    rep.obs_min_eig = eo.eigenvalues().minCoeff();
    rep.obs_max_eig = eo.eigenvalues().maxCoeff();
    rep.ctrl_min_eig = ec.eigenvalues().minCoeff();
    rep.ctrl_max_eig = ec.eigenvalues().maxCoeff();
    rep.uniformly_observable = k - h >= 0 && rep.obs_min_eig > eig_floor;
    rep.uniformly_controllable = k - h >= 0 && rep.ctrl_min_eig > eig_floor;

    // Variable lookback: the smallest window [k-kappa, k] holding h
    // measurement instants.
    int count = 0;
    for (int i = k; i >= 0; --i) {
        if (hist[static_cast<std::size_t>(i)].F.size() > 0) ++count;
        if (count == h) {
            rep.kappa = k - i;
            break;
        }
    }
    if (rep.kappa >= 0) {
        Mat obs = detail::observability_window(hist, k - rep.kappa, k);
        Eigen::SelfAdjointEigenSolver<Mat> es(obs);
        rep.sporadically_observable = es.eigenvalues().minCoeff() > eig_floor;
    }
    return rep;
}

// Quadratic form (x - c)' P^+ (x - c), the value the scale parameter bounds
// over the feasible set. Positive infinity flags a point with a component
// outside the shape's range space.
inline double lyapunov_value(const Ellipsoid& e, const Vec& x, double kernel_tol = 1e-7,
                             double eps_rank = 1e-12)
{
    detail::require(x.size() == e.dim(), "lyapunov_value: dimension mismatch");
    detail::PsdEigen eig(e.P, eps_rank);
    double kernel_norm = 0.0, form = 0.0;
    eig.pseudo_quadform(x - e.c, kernel_norm, form);
    if (kernel_norm > kernel_tol) return std::numeric_limits<double>::infinity();
    return form;
}

}  // namespace setmem
