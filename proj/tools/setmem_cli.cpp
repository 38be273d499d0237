// Command-line front end: scenario runs, benchmark sweeps, property checks
// and per-step ellipsoid dumps for external plotting.

#include <setmem/setmem.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

int write_file(const std::string& path, const std::string& contents)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        std::cerr << "error: cannot write " << path << '\n';
        return 1;
    }
    out << contents;
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_path,
            const std::string& summary_path)
{
    setmem::harness::ScenarioConfig cfg = setmem::harness::load_scenario_config(config_path);
    setmem::harness::RunResult result = setmem::harness::run_scenario(cfg);
    if (!out_path.empty())
        if (int rc = write_file(out_path, setmem::harness::trajectory_csv(result.trajectory))) return rc;
    if (!summary_path.empty())
        if (int rc = write_file(summary_path, setmem::harness::summary_json(result.summary).dump(2) + "\n"))
            return rc;
    if (out_path.empty() && summary_path.empty())
        std::cout << setmem::harness::summary_json(result.summary).dump(2) << '\n';
    return 0;
}

int cmd_dump(const std::string& config_path, const std::string& out_path)
{
    setmem::harness::ScenarioConfig cfg = setmem::harness::load_scenario_config(config_path);
    setmem::harness::RunResult result = setmem::harness::run_scenario(cfg);
    const std::string body = setmem::harness::ellipsoid_jsonl(result.trajectory);
    if (out_path.empty()) {
        std::cout << body;
        return 0;
    }
    return write_file(out_path, body);
}

int cmd_bench(const std::vector<int>& dims, const std::vector<int>& cases, int trials,
              std::uint64_t seed, const std::string& out_path, bool timing)
{
    setmem::harness::BenchReport report = setmem::harness::bench(dims, cases, trials, seed);
    std::cout << setmem::harness::bench_report_table(report, timing);
    if (!out_path.empty())
        return write_file(out_path, setmem::harness::bench_report_json(report).dump(2) + "\n");
    return 0;
}

int cmd_check(const std::string& suite, int trials, std::uint64_t seed)
{
    setmem::checks::CheckResult res;
    if (suite == "containment") {
        res = setmem::checks::containment_monte_carlo(trials, {2, 3, 6}, 50, 1e-6, seed);
    } else if (suite == "oracle") {
        res = setmem::checks::oracle_equivalence(trials, {2, 3, 5}, 50, seed);
    } else if (suite == "beta-grid") {
        res = setmem::checks::beta_grid_optimality(trials, seed);
    } else if (suite == "geometry") {
        res = setmem::checks::geometry_oracles(trials, 10000, 1e-7, seed);
    } else {
        std::cerr << "error: unknown suite '" << suite << "'\n";
        return 1;
    }
    std::cout << (res.pass ? "PASS" : "FAIL") << " " << suite << ": " << res.detail << '\n';
    return res.pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Ellipsoidal set-membership state estimation toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_path, summary_path, suite = "containment";
    std::vector<int> dims{10};
    std::vector<int> cases{1, 2, 3};
    int trials = 25;
    std::uint64_t seed = 1;
    bool timing = false;

    auto* run = app.add_subcommand("run", "Run one scenario from a JSON config");
    run->add_option("--config", config_path, "Scenario config file")->required();
    run->add_option("--out", out_path, "Trajectory CSV output path");
    run->add_option("--summary", summary_path, "Summary JSON output path");

    auto* bench = app.add_subcommand("bench", "Benchmark sweep over cases and dimensions");
    bench->add_option("--dims", dims, "State dimensions")->delimiter(',');
    bench->add_option("--cases", cases, "Schedule cases (1 every step, 2 random, 3 never)")
        ->delimiter(',');
    bench->add_option("--trials", trials, "Trials per cell");
    bench->add_option("--seed", seed, "Base seed");
    bench->add_option("--out", out_path, "Report JSON output path (timing excluded)");
    bench->add_flag("--timing", timing, "Show wall-clock column in the console table");

    auto* check = app.add_subcommand("check", "Property suites");
    check->add_option("--suite", suite, "containment | oracle | beta-grid | geometry")->required();
    check->add_option("--trials", trials, "Trial / instance count");
    check->add_option("--seed", seed, "Base seed");

    auto* dump = app.add_subcommand("dump-ellipsoids", "Per-step ellipsoid dump (JSON lines)");
    dump->add_option("--config", config_path, "Scenario config file")->required();
    dump->add_option("--out", out_path, "Output path (stdout when omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, out_path, summary_path);
        if (bench->parsed()) return cmd_bench(dims, cases, trials, seed, out_path, timing);
        if (check->parsed()) return cmd_check(suite, trials, seed);
        if (dump->parsed()) return cmd_dump(config_path, out_path);
    } catch (const std::invalid_argument& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 1;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 2;
    }
    return 1;
}
