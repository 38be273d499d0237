#pragma once

// Scenario generation, truth simulation, metrics and persistence around the
// estimator, mirroring the randomized simulation protocol at desk scale.

#include <setmem/analysis.hpp>
#include <setmem/estimator.hpp>
#include <setmem/rng.hpp>
#include <setmem/sampling.hpp>

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace setmem::harness {

enum class ScheduleKind { EveryStep, RandomSteps, Never };
enum class StabilityMode { Stable, Marginal };

struct ScenarioConfig {
    int n = 2;
    int m = 2;
    int l = 1;
    int horizon = 50;
    std::uint64_t seed = 1;
    ScheduleKind schedule = ScheduleKind::EveryStep;
    double schedule_prob = 0.5;
    int strips = 1;
    int halfspaces = 0;
    int equalities = 0;
    double half_width = 1.0;
    StabilityMode stability = StabilityMode::Stable;
    double p0_scale = 100.0;
    double sigma0 = 1.0;
    EstimatorConfig estimator;

    void validate() const
    {
        detail::require(n >= 1 && m >= 0 && l >= 0, "config: dimensions must be positive");
        detail::require(horizon >= 0, "config: horizon must be nonnegative");
        detail::require(schedule_prob >= 0.0 && schedule_prob <= 1.0, "config: prob must be in [0,1]");
        detail::require(strips >= 0 && halfspaces >= 0 && equalities >= 0,
                        "config: measurement counts must be nonnegative");
        detail::require(half_width > 0.0, "config: half_width must be positive");
        detail::require(p0_scale > 0.0 && sigma0 > 0.0, "config: init scales must be positive");
    }
};

struct Scenario {
    std::vector<SystemStep> steps;  // one per time step
    Vec xhat0;
    Mat P0;
    double sigma0 = 1.0;
    Vec x0;  // true initial state, inside E0
};

struct Truth {
    std::vector<Vec> x;                              // size horizon + 1
    std::vector<std::vector<Measurement>> measured;  // size horizon
};

// Random system with the requested spectral radius, sinusoidal inputs and
// nonzero disturbance generators. Deterministic in (cfg, rng state).
inline Scenario generate_scenario(const ScenarioConfig& cfg, Rng& rng)
{
    cfg.validate();
    Scenario sc;
    const Eigen::Index n = cfg.n, m = cfg.m, l = cfg.l;

    Mat a = rng.normal_mat(n, n);
    const double radius = a.eigenvalues().cwiseAbs().maxCoeff();
    const double target = cfg.stability == StabilityMode::Stable ? 0.95 : 1.0;
    if (radius > 0.0) a *= target / radius;

    Mat b = rng.normal_mat(n, l);
    Mat r = rng.normal_mat(n, m);
    for (Eigen::Index j = 0; j < m; ++j)
        while (r.col(j).norm() < 1e-9) r.col(j) = rng.normal_vec(n);

    Vec amp(l), freq(l), phase(l);
    for (Eigen::Index i = 0; i < l; ++i) {
        amp[i] = rng.uniform(0.1, 2.0);
        freq[i] = rng.uniform(0.05, 1.0);
        phase[i] = rng.uniform(0.0, 2.0 * M_PI);
    }

    sc.steps.reserve(static_cast<std::size_t>(cfg.horizon));
    for (int k = 0; k < cfg.horizon; ++k) {
        Vec tau(l);
        for (Eigen::Index i = 0; i < l; ++i) tau[i] = amp[i] * std::sin(freq[i] * k + phase[i]);
        sc.steps.emplace_back(a, b, r, tau);
    }

    sc.xhat0 = Vec::Zero(n);
    sc.P0 = cfg.p0_scale * Mat::Identity(n, n);
    sc.sigma0 = cfg.sigma0;
    sc.x0 = sc.xhat0 + std::sqrt(cfg.sigma0 * cfg.p0_scale) * rng.in_unit_ball(n);
    return sc;
}

namespace detail_harness {

inline Vec nonzero_normal(Rng& rng, Eigen::Index n)
{
    Vec f = rng.normal_vec(n);
    while (f.norm() < 1e-6) f = rng.normal_vec(n);
    return f;
}

}  // namespace detail_harness

// Forward-simulates the truth and builds measurements around it, so every
// generated constraint is satisfied by the true state.
inline Truth simulate_truth(const Scenario& sc, const ScenarioConfig& cfg, Rng& rng)
{
    Truth truth;
    truth.x.push_back(sc.x0);
    truth.measured.resize(sc.steps.size());

    for (std::size_t k = 0; k < sc.steps.size(); ++k) {
        const SystemStep& st = sc.steps[k];
        Vec nu(st.R.cols());
        for (Eigen::Index i = 0; i < nu.size(); ++i) nu[i] = rng.uniform(-1.0, 1.0);
        Vec x = st.A * truth.x.back();
        if (st.B.size() > 0) x += st.B * st.tau;
        if (st.R.size() > 0) x += st.R * nu;
        truth.x.push_back(x);

        bool measured = cfg.schedule == ScheduleKind::EveryStep ||
                        (cfg.schedule == ScheduleKind::RandomSteps && rng.uniform() < cfg.schedule_prob);
        if (!measured) continue;

        auto& ms = truth.measured[k];
        for (int i = 0; i < cfg.strips; ++i) {
            Vec f = detail_harness::nonzero_normal(rng, x.size());
            const double v = f.dot(x);
            ms.push_back(Measurement::two_sided(std::move(f), v - cfg.half_width * rng.uniform_pos(),
                                                v + cfg.half_width * rng.uniform_pos()));
        }
        for (int i = 0; i < cfg.halfspaces; ++i) {
            Vec f = detail_harness::nonzero_normal(rng, x.size());
            const double v = f.dot(x);
            if (rng.uniform() < 0.5)
                ms.push_back(Measurement::upper_bound(std::move(f), v + cfg.half_width * rng.uniform_pos()));
            else
                ms.push_back(Measurement::lower_bound(std::move(f), v - cfg.half_width * rng.uniform_pos()));
        }
        for (int i = 0; i < cfg.equalities; ++i) {
            Vec f = detail_harness::nonzero_normal(rng, x.size());
            const double v = f.dot(x);
            ms.push_back(Measurement::equality(std::move(f), v));
        }
    }
    return truth;
}

struct TrajectoryPoint {
    long k = 0;
    double err_norm = 0.0;
    double sigma = 0.0;
    double sigma_bar = 0.0;
    double trace_product = 0.0;
    Eigen::Index rank = 0;
    int skipped = 0;
    int aberrant = 0;
};

struct TrajectoryRecord {
    std::vector<TrajectoryPoint> points;  // k = 0 .. horizon
    std::vector<Vec> xhat;
    std::vector<Vec> x_true;
    std::vector<Mat> P;
    std::vector<double> sigma;
};

// Unrescaled per-step pair (sigma, tr P). The stored product sigma*tr(P) is
// invariant under rescaling, so only sigma_bar is needed to split it.
struct MetricsSummary {
    double mean_trace_product = 0.0;  // mean over k of sigma_k tr(P_k)
    double mean_err_norm = 0.0;
    double shrink_ratio = 0.0;  // sigma0 tr(P_N) / (sigma_N tr(P0)) on unrescaled values
    double err_ratio = 0.0;     // |x~_N| / |x~_0|
    double wall_ms = 0.0;
};

struct RunResult {
    TrajectoryRecord trajectory;
    MetricsSummary summary;
};

inline RunResult run_scenario_with(const Scenario& sc, const Truth& truth, const ScenarioConfig& cfg)
{
    const auto t0 = std::chrono::steady_clock::now();
    RunResult out;
    EstimatorState state = init(sc.xhat0, sc.P0, sc.sigma0);

    auto record = [&](const EstimatorState& s, const Vec& x, int skipped, int aberrant) {
        TrajectoryPoint pt;
        pt.k = s.k;
        pt.err_norm = (x - s.xhat).norm();
        pt.sigma = s.sigma;
        pt.sigma_bar = s.sigma_bar;
        pt.trace_product = s.sigma * s.P.trace();
        pt.rank = setmem::detail::numerical_rank(s.P, cfg.estimator.tol.eps_rank);
        pt.skipped = skipped;
        pt.aberrant = aberrant;
        out.trajectory.points.push_back(pt);
        out.trajectory.xhat.push_back(s.xhat);
        out.trajectory.x_true.push_back(x);
        out.trajectory.P.push_back(s.P);
        out.trajectory.sigma.push_back(s.sigma);
    };

    record(state, truth.x[0], 0, 0);
    for (std::size_t k = 0; k < sc.steps.size(); ++k) {
        auto [next, report] = step(state, sc.steps[k], truth.measured[k], cfg.estimator);
        state = std::move(next);
        record(state, truth.x[k + 1], report.skipped, report.aberrant);
    }

    const auto& pts = out.trajectory.points;
    double sum_trace = 0.0, sum_err = 0.0;
    std::size_t first = pts.size() > 1 ? 1 : 0;
    for (std::size_t k = first; k < pts.size(); ++k) {
        sum_trace += pts[k].trace_product;
        sum_err += pts[k].err_norm;
    }
    const double count = static_cast<double>(pts.size() - first);
    out.summary.mean_trace_product = sum_trace / count;
    out.summary.mean_err_norm = sum_err / count;

    const TrajectoryPoint& last = pts.back();
    const double tr_p0 = sc.P0.trace();
    // Unrescaled final pair: sigma_bar and trace_product / sigma_bar.
    const double tr_pn_unrescaled = last.sigma_bar > 0.0 ? last.trace_product / last.sigma_bar
                                                         : last.trace_product;
    out.summary.shrink_ratio =
        sc.sigma0 * tr_pn_unrescaled / (std::max(last.sigma_bar, 1e-300) * tr_p0);
    out.summary.err_ratio = pts.front().err_norm > 0.0 ? last.err_norm / pts.front().err_norm : 0.0;
    out.summary.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

inline RunResult run_scenario(const ScenarioConfig& cfg)
{
    Rng rng(cfg.seed);
    Scenario sc = generate_scenario(cfg, rng);
    Truth truth = simulate_truth(sc, cfg, rng);
    return run_scenario_with(sc, truth, cfg);
}

// ---------------------------------------------------------------------------
// Persistence

inline std::string format_g(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

inline std::string trajectory_csv(const TrajectoryRecord& rec)
{
    std::ostringstream os;
    os << "k,err_norm,sigma,sigma_bar,trace,rank,skipped,aberrant\n";
    for (const auto& p : rec.points) {
        os << p.k << ',' << format_g(p.err_norm) << ',' << format_g(p.sigma) << ','
           << format_g(p.sigma_bar) << ',' << format_g(p.trace_product) << ',' << p.rank << ','
           << p.skipped << ',' << p.aberrant << '\n';
    }
    return os.str();
}

// One JSON object per step: {k, c, P, sigma}.
inline std::string ellipsoid_jsonl(const TrajectoryRecord& rec)
{
    std::ostringstream os;
    for (std::size_t k = 0; k < rec.points.size(); ++k) {
        nlohmann::json obj;
        obj["k"] = rec.points[k].k;
        obj["c"] = std::vector<double>(rec.xhat[k].data(), rec.xhat[k].data() + rec.xhat[k].size());
        std::vector<std::vector<double>> p;
        for (Eigen::Index i = 0; i < rec.P[k].rows(); ++i) {
            p.emplace_back(rec.P[k].row(i).begin(), rec.P[k].row(i).end());
        }
        obj["P"] = p;
        obj["sigma"] = rec.sigma[k];
        os << obj.dump() << '\n';
    }
    return os.str();
}

inline nlohmann::json summary_json(const MetricsSummary& s, bool include_wall_ms = true)
{
    nlohmann::json j;
    j["mean_trace_product"] = s.mean_trace_product;
    j["mean_err_norm"] = s.mean_err_norm;
    j["shrink_ratio"] = s.shrink_ratio;
    j["err_ratio"] = s.err_ratio;
    if (include_wall_ms) j["wall_ms"] = s.wall_ms;
    return j;
}

// ---------------------------------------------------------------------------
// Strict JSON config parsing: unknown keys are rejected at every level.

namespace detail_harness {

inline void reject_unknown(const nlohmann::json& obj, std::initializer_list<const char*> known,
                           const char* where)
{
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : known)
            if (it.key() == k) ok = true;
        if (!ok) throw std::invalid_argument(std::string("config: unknown key '") + it.key() + "' in " + where);
    }
}

}  // namespace detail_harness

inline ScenarioConfig parse_scenario_config(const nlohmann::json& j)
{
    using detail_harness::reject_unknown;
    ScenarioConfig cfg;
    reject_unknown(j, {"dimensions", "horizon", "seed", "schedule", "measurements", "stability",
                       "init", "estimator"},
                   "top level");

    if (j.contains("dimensions")) {
        const auto& d = j.at("dimensions");
        reject_unknown(d, {"n", "m", "l"}, "dimensions");
        cfg.n = d.value("n", cfg.n);
        cfg.m = d.value("m", cfg.m);
        cfg.l = d.value("l", cfg.l);
    }
    cfg.horizon = j.value("horizon", cfg.horizon);
    cfg.seed = j.value("seed", cfg.seed);

    if (j.contains("schedule")) {
        const auto& s = j.at("schedule");
        reject_unknown(s, {"kind", "prob"}, "schedule");
        const std::string kind = s.value("kind", "every_step");
        if (kind == "every_step")
            cfg.schedule = ScheduleKind::EveryStep;
        else if (kind == "random_steps")
            cfg.schedule = ScheduleKind::RandomSteps;
        else if (kind == "never")
            cfg.schedule = ScheduleKind::Never;
        else
            throw std::invalid_argument("config: unknown schedule kind '" + kind + "'");
        cfg.schedule_prob = s.value("prob", cfg.schedule_prob);
    }

    if (j.contains("measurements")) {
        const auto& m = j.at("measurements");
        reject_unknown(m, {"strips", "halfspaces", "equalities", "half_width"}, "measurements");
        cfg.strips = m.value("strips", cfg.strips);
        cfg.halfspaces = m.value("halfspaces", cfg.halfspaces);
        cfg.equalities = m.value("equalities", cfg.equalities);
        cfg.half_width = m.value("half_width", cfg.half_width);
    }

    if (j.contains("stability")) {
        const std::string s = j.at("stability").get<std::string>();
        if (s == "stable")
            cfg.stability = StabilityMode::Stable;
        else if (s == "marginal")
            cfg.stability = StabilityMode::Marginal;
        else
            throw std::invalid_argument("config: unknown stability mode '" + s + "'");
    }

    if (j.contains("init")) {
        const auto& i = j.at("init");
        reject_unknown(i, {"p0_scale", "sigma0"}, "init");
        cfg.p0_scale = i.value("p0_scale", cfg.p0_scale);
        cfg.sigma0 = i.value("sigma0", cfg.sigma0);
    }

    if (j.contains("estimator")) {
        const auto& e = j.at("estimator");
        reject_unknown(e, {"criterion", "ordering", "rescaling", "policy", "weight"}, "estimator");
        const std::string crit = e.value("criterion", "trace");
        if (crit == "trace")
            cfg.estimator.criterion = PredictionCriterion::trace();
        else if (crit == "volume")
            cfg.estimator.criterion = PredictionCriterion::volume();
        else if (crit == "weighted") {
            if (!e.contains("weight"))
                throw std::invalid_argument("config: weighted criterion requires a weight matrix");
            const auto rows = e.at("weight").get<std::vector<std::vector<double>>>();
            detail::require(!rows.empty(), "config: weight matrix must be nonempty");
            Mat w(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
            for (std::size_t i = 0; i < rows.size(); ++i) {
                detail::require(rows[i].size() == rows[0].size(), "config: ragged weight matrix");
                for (std::size_t jc = 0; jc < rows[i].size(); ++jc)
                    w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(jc)) = rows[i][jc];
            }
            cfg.estimator.criterion = PredictionCriterion::weighted_trace(std::move(w));
        } else {
            throw std::invalid_argument("config: unknown criterion '" + crit + "'");
        }
        const std::string ord = e.value("ordering", "input");
        if (ord == "input")
            cfg.estimator.ordering = MeasurementOrdering::InputOrder;
        else if (ord == "grouped")
            cfg.estimator.ordering = MeasurementOrdering::Grouped;
        else
            throw std::invalid_argument("config: unknown ordering '" + ord + "'");
        cfg.estimator.rescaling = e.value("rescaling", cfg.estimator.rescaling);
        const std::string pol = e.value("policy", "lenient");
        if (pol == "lenient")
            cfg.estimator.policy = AberrantPolicy::Lenient;
        else if (pol == "strict")
            cfg.estimator.policy = AberrantPolicy::Strict;
        else
            throw std::invalid_argument("config: unknown policy '" + pol + "'");
    }

    cfg.validate();
    return cfg;
}

inline ScenarioConfig load_scenario_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return parse_scenario_config(j);
}

// ---------------------------------------------------------------------------
// Benchmark sweep: averages the summary metrics over independent trials with
// derived per-trial seeds, for each (dimension, schedule case) pair.

struct BenchCell {
    int n = 0;
    int case_id = 0;  // 1 every step, 2 random steps, 3 never
    MetricsSummary mean;
};

struct BenchReport {
    std::vector<BenchCell> cells;
    int trials = 0;
};

inline ScenarioConfig bench_config(int n, int case_id, std::uint64_t seed)
{
    ScenarioConfig cfg;
    cfg.n = n;
    cfg.m = n;
    cfg.l = std::max(1, n / 5);
    cfg.horizon = 100;
    cfg.seed = seed;
    cfg.strips = std::max(1, n / 2);
    cfg.halfspaces = std::max(1, n / 2);
    cfg.equalities = 0;
    cfg.half_width = 1.0;
    cfg.p0_scale = 100.0;
    cfg.sigma0 = 1.0;
    cfg.schedule = case_id == 1 ? ScheduleKind::EveryStep
                                : (case_id == 2 ? ScheduleKind::RandomSteps : ScheduleKind::Never);
    cfg.schedule_prob = 0.5;
    return cfg;
}

inline BenchReport bench(const std::vector<int>& dims, const std::vector<int>& cases, int trials,
                         std::uint64_t seed)
{
    BenchReport report;
    report.trials = trials;
    for (int n : dims) {
        for (int c : cases) {
            BenchCell cell;
            cell.n = n;
            cell.case_id = c;
            for (int t = 0; t < trials; ++t) {
                const std::uint64_t trial_seed =
                    splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(t) * 1315423911u +
                                                 static_cast<std::uint64_t>(n) * 2654435761u +
                                                 static_cast<std::uint64_t>(c)));
                RunResult r = run_scenario(bench_config(n, c, trial_seed));
                cell.mean.mean_trace_product += r.summary.mean_trace_product;
                cell.mean.mean_err_norm += r.summary.mean_err_norm;
                cell.mean.shrink_ratio += r.summary.shrink_ratio;
                cell.mean.err_ratio += r.summary.err_ratio;
                cell.mean.wall_ms += r.summary.wall_ms;
            }
            const double d = static_cast<double>(trials);
            cell.mean.mean_trace_product /= d;
            cell.mean.mean_err_norm /= d;
            cell.mean.shrink_ratio /= d;
            cell.mean.err_ratio /= d;
            cell.mean.wall_ms /= d;
            report.cells.push_back(cell);
        }
    }
    return report;
}

// Deterministic report body: the timing column is deliberately left out so
// that identical (config, seed) produce byte-identical files.
inline nlohmann::json bench_report_json(const BenchReport& r)
{
    nlohmann::json out;
    out["trials"] = r.trials;
    out["cells"] = nlohmann::json::array();
    for (const auto& c : r.cells) {
        nlohmann::json cell = summary_json(c.mean, /*include_wall_ms=*/false);
        cell["n"] = c.n;
        cell["case"] = c.case_id;
        out["cells"].push_back(cell);
    }
    return out;
}

inline std::string bench_report_table(const BenchReport& r, bool with_timing)
{
    std::ostringstream os;
    os << "n    case  shrink_ratio   mean_trace     err_ratio      mean_err";
    if (with_timing) os << "       T(ms)";
    os << '\n';
    for (const auto& c : r.cells) {
        char line[256];
        if (with_timing)
            std::snprintf(line, sizeof line, "%-4d %-5d %-14.6g %-14.6g %-14.6g %-14.6g %-10.3g\n", c.n,
                          c.case_id, c.mean.shrink_ratio, c.mean.mean_trace_product, c.mean.err_ratio,
                          c.mean.mean_err_norm, c.mean.wall_ms);
        else
            std::snprintf(line, sizeof line, "%-4d %-5d %-14.6g %-14.6g %-14.6g %-14.6g\n", c.n,
                          c.case_id, c.mean.shrink_ratio, c.mean.mean_trace_product, c.mean.err_ratio,
                          c.mean.mean_err_norm);
        os << line;
    }
    return os.str();
}

}  // namespace setmem::harness
