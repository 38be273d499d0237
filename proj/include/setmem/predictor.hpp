#pragma once

// Time-update stage: propagate the state ellipsoid through the dynamics and
// outer-bound its Minkowski sum with the process-noise zonotope.

#include <setmem/geometry.hpp>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace setmem {

// One step of x_k = A x_{k-1} + B tau + R nu, |nu|_inf <= 1.
struct SystemStep {
    Mat A;    // n x n
    Mat B;    // n x l
    Mat R;    // n x m disturbance generators
    Vec tau;  // l

    SystemStep() = default;
    SystemStep(Mat a, Mat b, Mat r, Vec t)
        : A(std::move(a)), B(std::move(b)), R(std::move(r)), tau(std::move(t))
    {
        detail::require(A.rows() == A.cols(), "system step: A must be square");
        detail::require(B.size() == 0 || B.rows() == A.rows(), "system step: B row mismatch");
        detail::require(B.cols() == tau.size(), "system step: tau dimension mismatch");
        detail::require(R.size() == 0 || R.rows() == A.rows(), "system step: R row mismatch");
        detail::require(A.allFinite() && B.allFinite() && R.allFinite() && tau.allFinite(),
                        "system step: entries must be finite");
    }

    Eigen::Index dim() const { return A.rows(); }
};

// Size criterion minimized by the noise-inflation parameters.
struct PredictionCriterion {
    enum class Kind { Trace, Volume, WeightedTrace };

    Kind kind = Kind::Trace;
    Mat weight;  // used by WeightedTrace only

    static PredictionCriterion trace() { return {Kind::Trace, {}}; }
    static PredictionCriterion volume() { return {Kind::Volume, {}}; }
    static PredictionCriterion weighted_trace(Mat c)
    {
        detail::require(c.allFinite() && c.size() > 0, "weighted criterion: invalid weight");
        return {Kind::WeightedTrace, std::move(c)};
    }
};

// Intermediate quantities of the trace-optimal direct formula; exposed for
// diagnostics and for the stochastic-filter analogy.
struct PredictionScratch {
    double mu0 = 0.0;           // sqrt(sigma * tr(A P A'))
    double mu_sum = 0.0;        // sum of generator norms
    Mat R_bar;                  // sum |r_i|^-1 r_i r_i'
    std::vector<double> mu_i;   // per-generator blend parameter (sequential modes)
    std::vector<double> h_i;    // per-generator r' P^-1 r (volume mode)
};

inline Vec predict_center(const Vec& xhat, const SystemStep& step)
{
    detail::require(xhat.size() == step.dim(), "predict_center: dimension mismatch");
    Vec out = step.A * xhat;
    if (step.B.size() > 0) out += step.B * step.tau;
    return out;
}

namespace detail {

// Columns of R that violate the nonzero-generator assumption are dropped;
// they contribute nothing to the sum.
inline std::vector<Eigen::Index> nonzero_columns(const Mat& r)
{
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < r.cols(); ++j) {
        if (r.col(j).norm() > 0.0)
            cols.push_back(j);
        else
            log::warn("dropping zero generator column " + std::to_string(j));
    }
    return cols;
}

// One blend of the running shape with a rank-one generator term:
// P <- (1+mu) P + (1+mu)/(mu*sigma) r r'.
inline Mat blend_generator(const Mat& p, const Vec& r, double mu, double sigma)
{
    return (1.0 + mu) * p + ((1.0 + mu) / (mu * sigma)) * (r * r.transpose());
}

}  // namespace detail

// Direct minimum-trace bound of A E (+) Z(0, R). Valid for rank-deficient
// A P A'; the shape matrix is never inverted.
inline Mat predict_shape_trace(const Mat& p, double sigma, const Mat& a, const Mat& r,
                               PredictionScratch* scratch = nullptr)
{
    detail::require(sigma > 0.0, "predict_shape_trace: sigma must be positive");
    Mat p0 = detail::symmetrize(a * p * a.transpose());
    const auto cols = detail::nonzero_columns(r);
    if (cols.empty()) {
        if (scratch) *scratch = PredictionScratch{std::sqrt(sigma * std::max(0.0, p0.trace())), 0.0,
                                                  Mat::Zero(p0.rows(), p0.cols()), {}, {}};
        return p0;
    }

    double mu_sum = 0.0;
    Mat r_bar = Mat::Zero(p0.rows(), p0.cols());
    for (Eigen::Index j : cols) {
        const Vec rj = r.col(j);
        const double nrm = rj.norm();
        mu_sum += nrm;
        r_bar += (rj * rj.transpose()) / nrm;
    }

    const double tr0 = std::max(0.0, p0.trace());
    Mat out;
    double mu0 = 0.0;
    if (tr0 <= 0.0) {
        // Point state plus noise: the limit of the direct formula is the
        // exact minimum-trace bound of the zonotope alone.
        out = (mu_sum / sigma) * r_bar;
    } else {
        mu0 = std::sqrt(sigma * tr0);
        out = (1.0 + mu_sum / mu0) * (p0 + (mu0 / sigma) * r_bar);
    }
    if (scratch) *scratch = PredictionScratch{mu0, mu_sum, std::move(r_bar), {}, {}};
    return detail::symmetrize(out);
}

// Sequential minimum-volume bound. Requires an SPD propagated shape since
// each blend parameter involves the inverse of the running shape.
inline Mat predict_shape_volume(const Mat& p, double sigma, const Mat& a, const Mat& r,
                                PredictionScratch* scratch = nullptr)
{
    detail::require(sigma > 0.0, "predict_shape_volume: sigma must be positive");
    Mat pk = detail::symmetrize(a * p * a.transpose());
    const auto cols = detail::nonzero_columns(r);
    if (scratch) *scratch = PredictionScratch{};
    if (cols.empty()) return pk;

    Eigen::LLT<Mat> llt(pk);
    if (llt.info() != Eigen::Success)
        throw std::domain_error(
            "predict_shape_volume: propagated shape is not positive definite; use the trace criterion");

    const double n = static_cast<double>(pk.rows());
    for (Eigen::Index j : cols) {
        const Vec rj = r.col(j);
        llt.compute(pk);
        if (llt.info() != Eigen::Success)
            throw std::domain_error(
                "predict_shape_volume: shape lost definiteness; use the trace criterion");
        const double h = rj.dot(llt.solve(rj)) / sigma;
        const double mu =
            std::sqrt((n - 1.0) * (n - 1.0) * h * h + 4.0 * n * h) / (2.0 * n) - (n - 1.0) * h / (2.0 * n);
        if (scratch) {
            scratch->h_i.push_back(h);
            scratch->mu_i.push_back(mu);
        }
        pk = detail::symmetrize(detail::blend_generator(pk, rj, mu, sigma));
    }
    return pk;
}

// Sequential bound minimizing tr(C P C'). Generators invisible to the weight
// fall back to the unweighted blend parameter so the containment guarantee
// is preserved.
inline Mat predict_shape_weighted(const Mat& p, double sigma, const Mat& a, const Mat& r,
                                  const Mat& c, PredictionScratch* scratch = nullptr)
{
    detail::require(sigma > 0.0, "predict_shape_weighted: sigma must be positive");
    detail::require(c.cols() == a.rows(), "predict_shape_weighted: weight column mismatch");
    detail::require(c.allFinite(), "predict_shape_weighted: weight must be finite");
    Mat pk = detail::symmetrize(a * p * a.transpose());
    const auto cols = detail::nonzero_columns(r);
    if (scratch) *scratch = PredictionScratch{};
    if (cols.empty()) return pk;

    for (Eigen::Index j : cols) {
        const Vec rj = r.col(j);
        const double wnum = (c * rj).squaredNorm();
        const double wden = sigma * (c * pk * c.transpose()).trace();
        double mu = 0.0;
        if (wnum > 0.0 && wden > 0.0) {
            mu = std::sqrt(wnum / wden);
        } else {
            const double tr = pk.trace();
            if (tr > 0.0) {
                mu = std::sqrt(rj.squaredNorm() / (sigma * tr));
            } else {
                // Point state: add the segment exactly.
                pk = detail::symmetrize(pk + (rj * rj.transpose()) / sigma);
                if (scratch) scratch->mu_i.push_back(std::numeric_limits<double>::infinity());
                continue;
            }
        }
        if (scratch) scratch->mu_i.push_back(mu);
        pk = detail::symmetrize(detail::blend_generator(pk, rj, mu, sigma));
    }
    return pk;
}

// Full time update: E(A xhat + B tau, sigma, P_pred) containing
// A E (+) {B tau} (+) Z(0, R). The scale is untouched by prediction.
inline Ellipsoid time_update(const Ellipsoid& e, const SystemStep& step,
                             const PredictionCriterion& crit = PredictionCriterion::trace(),
                             PredictionScratch* scratch = nullptr)
{
    detail::require(e.dim() == step.dim(), "time_update: dimension mismatch");
    Vec c = predict_center(e.c, step);
    Mat p;
    switch (crit.kind) {
        case PredictionCriterion::Kind::Trace:
            p = predict_shape_trace(e.P, e.sigma, step.A, step.R, scratch);
            break;
        case PredictionCriterion::Kind::Volume:
            p = predict_shape_volume(e.P, e.sigma, step.A, step.R, scratch);
            break;
        case PredictionCriterion::Kind::WeightedTrace:
            p = predict_shape_weighted(e.P, e.sigma, step.A, step.R, crit.weight, scratch);
            break;
    }
    return Ellipsoid(std::move(c), std::move(p), e.sigma);
}

}  // namespace setmem
