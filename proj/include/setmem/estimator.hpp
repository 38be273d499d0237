#pragma once

// User-facing state machine: time update, then measurement update, then
// optional rescaling, with per-step diagnostics.

#include <setmem/corrector.hpp>
#include <setmem/predictor.hpp>

#include <utility>
#include <vector>

namespace setmem {

struct EstimatorState {
    Vec xhat;
    Mat P;
    double sigma = 1.0;
    double sigma_bar = 1.0;  // scale an unrescaled run would carry
    double sigma0 = 1.0;     // initial scale, rescaling target
    long k = 0;

    Ellipsoid ellipsoid() const { return Ellipsoid(xhat, P, sigma); }
};

struct EstimatorConfig {
    PredictionCriterion criterion = PredictionCriterion::trace();
    MeasurementOrdering ordering = MeasurementOrdering::InputOrder;
    bool rescaling = true;
    AberrantPolicy policy = AberrantPolicy::Lenient;
    Tolerances tol;

    CorrectionSettings correction_settings(double sigma0) const
    {
        CorrectionSettings s;
        s.policy = policy;
        s.ordering = ordering;
        s.eps_theta = tol.eps_theta;
        s.eps_case = tol.eps_case;
        s.eps_sigma = tol.eps_sigma * sigma0;
        return s;
    }
};

struct StepReport {
    std::vector<CorrectionOutcome> outcomes;
    double sigma_before = 0.0;
    double sigma_after = 0.0;   // post-correction, pre-rescale
    double trace_product = 0.0; // tr(sigma * P) after the step
    Eigen::Index rank = 0;      // numerical rank of P after the step
    int skipped = 0;
    int aberrant = 0;
    PredictionScratch prediction;
};

inline EstimatorState init(const Vec& xhat0, const Mat& p0, double sigma0)
{
    detail::require(sigma0 > 0.0, "init: sigma0 must be positive");
    detail::require(xhat0.allFinite() && p0.allFinite(), "init: entries must be finite");
    detail::require(p0.rows() == p0.cols() && p0.rows() == xhat0.size(), "init: dimension mismatch");
    if (!detail::is_spd(p0)) throw std::invalid_argument("init: P0 must be symmetric positive definite");
    return EstimatorState{xhat0, detail::symmetrize(p0), sigma0, sigma0, sigma0, 0};
}

// One full step: predict, correct, optionally rescale. The input state is
// untouched; the returned state carries k+1.
inline std::pair<EstimatorState, StepReport> step(const EstimatorState& s, const SystemStep& sys,
                                                  const std::vector<Measurement>& ms,
                                                  const EstimatorConfig& cfg = {})
{
    StepReport report;
    report.sigma_before = s.sigma;

    Ellipsoid predicted = time_update(s.ellipsoid(), sys, cfg.criterion, &report.prediction);
    auto [corrected, outcomes] = correct_all(predicted, ms, cfg.correction_settings(s.sigma0));
    report.outcomes = std::move(outcomes);
    report.sigma_after = corrected.sigma;
    for (const auto& o : report.outcomes) {
        if (o.kind == CorrectionOutcome::Kind::SkippedUninformative) ++report.skipped;
        if (o.kind == CorrectionOutcome::Kind::SkippedAberrant) ++report.aberrant;
    }

    EstimatorState next;
    next.sigma0 = s.sigma0;
    next.k = s.k + 1;
    next.sigma_bar = s.sigma == 0.0 ? 0.0 : s.sigma_bar * (corrected.sigma / s.sigma);
    if (cfg.rescaling && corrected.sigma > 0.0) {
        auto [rescaled, _] = rescale(corrected, s.sigma0, s.sigma_bar);
        next.xhat = std::move(rescaled.c);
        next.P = std::move(rescaled.P);
        next.sigma = rescaled.sigma;
    } else {
        next.xhat = std::move(corrected.c);
        next.P = std::move(corrected.P);
        next.sigma = corrected.sigma;
    }

    report.trace_product = next.sigma * next.P.trace();
    report.rank = detail::numerical_rank(next.P, cfg.tol.eps_rank);
    return {std::move(next), std::move(report)};
}

struct StateMetrics {
    double trace_product = 0.0;  // sigma * tr(P)
    Vec semiaxes;                // sqrt of eigenvalues of sigma * P, descending
    Eigen::Index rank = 0;
};

inline StateMetrics metrics(const EstimatorState& s, double eps_rank = 1e-12)
{
    StateMetrics m;
    m.trace_product = s.sigma * s.P.trace();
    detail::PsdEigen eig(s.P, eps_rank);
    Vec vals = (s.sigma * eig.es.eigenvalues()).cwiseMax(0.0).cwiseSqrt();
    m.semiaxes = vals.reverse();
    m.rank = eig.rank();
    return m;
}

}  // namespace setmem
