#include "aesurv/cli.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "aesurv/cox.hpp"
#include "aesurv/data.hpp"
#include "aesurv/estimand.hpp"
#include "aesurv/estimators.hpp"
#include "aesurv/meta.hpp"
#include "aesurv/plot.hpp"
#include "aesurv/simulate.hpp"

namespace aesurv::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct GlobalConfig {
    std::string out_dir = ".";
    std::string format = "csv";
    std::uint64_t seed = 20260825ULL;
};

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::io_error, "cannot open '" + path.string() + "' for writing");
    out << content;
    if (!out) fail(ErrorCode::io_error, "failed writing '" + path.string() + "'");
}

fs::path prepare_out_dir(const GlobalConfig& g) {
    fs::path dir(g.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorCode::io_error, "cannot create output directory '" + g.out_dir + "'");
    return dir;
}

json curve_to_json(const CurveEstimate& curve) {
    json j;
    j["kind"] = curve_kind_name(curve.kind);
    j["label"] = curve.label;
    j["max_observed_time"] = curve.max_observed_time;
    j["points"] = json::array();
    for (const CurvePoint& p : curve.points) {
        j["points"].push_back({{"time", p.time}, {"value", p.value}, {"variance", p.variance}});
    }
    return j;
}

json rate_to_json(const IncidenceRate& r) {
    json j;
    j["events"] = r.events;
    j["person_time"] = r.person_time;
    j["rate"] = r.rate;
    j["ci95"] = r.ci_defined ? json{r.ci_lo, r.ci_hi} : json{nullptr, nullptr};
    j["ci_defined"] = r.ci_defined;
    return j;
}

json outcome_to_json(const FitOutcome& outcome) {
    if (outcome.ok()) return json::parse(outcome.fit->to_json());
    json j;
    j["error"] = outcome.error ? to_string(*outcome.error) : "Unknown";
    j["message"] = outcome.error_message;
    return j;
}

/// Loads, validates (hard failure on violations) and recodes the input.
struct PreparedInput {
    Dataset data;
    AnalysisPlan plan;
    ValidationReport report;
};

PreparedInput prepare_input(const std::string& input, EstimandStrategy strategy,
                            bool ae_collected_after_disc) {
    Dataset raw = parse_csv_file(input);
    // The CSV schema carries no study metadata, so whether adverse events kept
    // being collected after treatment discontinuation is asserted on the
    // command line; it gates the treatment-policy recoding.
    raw.meta.ae_collection_after_discontinuation = ae_collected_after_disc;
    PreparedInput out;
    out.report = validate(raw);
    if (!out.report.valid()) {
        fail(ErrorCode::invalid_argument,
             "input failed validation:\n" + out.report.to_text());
    }
    auto [recoded, plan] = apply_strategy(raw, strategy);
    out.data = std::move(recoded);
    out.plan = plan;
    return out;
}

void surface_warnings(const AnalysisPlan& plan) {
    for (const std::string& w : plan.warnings) std::cerr << "warning: " << w << "\n";
}

std::vector<int> groups_present(const Dataset& ds) {
    std::vector<int> groups;
    for (int g : {0, 1}) {
        if (ds.group_size(g) > 0) groups.push_back(g);
    }
    return groups;
}

double group_max_time(const Dataset& ds, int group) {
    double max_time = 0.0;
    for (const SubjectRecord& r : ds.records) {
        if (r.group == group) max_time = std::max(max_time, r.time);
    }
    return max_time;
}

/// The parametric curve plugs the two cause-specific incidence rates into the
/// closed-form constant-hazard CIF.
CurveEstimate parametric_from_rates(const Dataset& ds, int group, const AnalysisPlan& plan) {
    double person_time = 0.0;
    double ae_events = 0.0;
    double ce_events = 0.0;
    for (const SubjectRecord& r : ds.records) {
        if (r.group != group) continue;
        person_time += r.time;
        if (plan.target.contains(r.event)) ++ae_events;
        if (plan.competing.contains(r.event)) ++ce_events;
    }
    if (!(person_time > 0.0)) {
        fail(ErrorCode::zero_person_time, "group " + std::to_string(group) + " has zero person-time");
    }
    HazardPair h{ae_events / person_time, ce_events / person_time};
    const double horizon = group_max_time(ds, group);
    std::vector<double> grid;
    for (int i = 0; i <= 100; ++i) grid.push_back(horizon * static_cast<double>(i) / 100.0);
    CurveEstimate curve = parametric_cif_curve(h, grid);
    curve.label = "parametric_cif";
    return curve;
}

CurveEstimate run_curve_estimator(const std::string& estimator, const Dataset& ds, int group,
                                  const AnalysisPlan& plan) {
    if (estimator == "km") return kaplan_meier(ds, group, plan.target);
    if (estimator == "nelson-aalen") return nelson_aalen(ds, group, EventCode::adverse_event);
    if (estimator == "aalen-johansen") {
        return aalen_johansen(ds, group, EventCode::adverse_event, plan.competing);
    }
    if (estimator == "incidence-proportion") {
        return incidence_proportion_curve(ds, group, EventCode::adverse_event);
    }
    if (estimator == "parametric") return parametric_from_rates(ds, group, plan);
    fail(ErrorCode::usage_error, "unknown estimator '" + estimator + "'");
}

int cmd_validate(const GlobalConfig& g, const std::string& input) {
    Dataset ds = parse_csv_file(input);
    ValidationReport report = validate(ds);
    const fs::path dir = prepare_out_dir(g);
    write_file(dir / "validation.json", report.to_json() + "\n");
    std::cout << report.to_text();
    std::cout << "wrote " << (dir / "validation.json").string() << "\n";
    return report.valid() ? 0 : 1;
}

int cmd_estimate(const GlobalConfig& g, const std::string& input, EstimandStrategy strategy,
                 const std::string& estimator, bool plot, bool exposure_adjusted,
                 bool ae_collected_after_disc) {
    PreparedInput prepared = prepare_input(input, strategy, ae_collected_after_disc);
    surface_warnings(prepared.plan);
    const fs::path dir = prepare_out_dir(g);

    json report;
    report["subcommand"] = "estimate";
    report["input"] = input;
    report["estimand"] = strategy_name(strategy);
    report["estimator"] = estimator;
    report["plan"] = json::parse(prepared.plan.to_json());
    report["warnings"] = prepared.plan.warnings;
    report["groups"] = json::object();
    json artifacts = json::array();

    const bool scalar = estimator == "crude-rate" || estimator == "incidence-rate";
    std::vector<CurveSeries> series;
    for (int group : groups_present(prepared.data)) {
        const std::string key = std::to_string(group);
        if (estimator == "crude-rate") {
            report["groups"][key]["crude_rate"] =
                crude_rate(prepared.data, group, EventCode::adverse_event);
        } else if (estimator == "incidence-rate") {
            const IncidenceRate rate = incidence_rate(prepared.data, group,
                                                      EventCode::adverse_event, exposure_adjusted);
            report["groups"][key]["incidence_rate"] = rate_to_json(rate);
            report["groups"][key]["exposure_adjusted"] = exposure_adjusted;
        } else {
            CurveEstimate curve = run_curve_estimator(estimator, prepared.data, group,
                                                      prepared.plan);
            if (g.format == "json") {
                report["groups"][key]["curve"] = curve_to_json(curve);
            } else {
                const fs::path path = dir / (estimator + "_group" + key + ".csv");
                write_file(path, curve.to_csv());
                artifacts.push_back(path.string());
                report["groups"][key]["curve_csv"] = path.string();
            }
            series.push_back({"group " + key, std::move(curve), false});
        }
    }

    if (plot && !scalar) {
        CurvePlotOptions options;
        options.title = estimator + " (" + std::string(strategy_name(strategy)) + ")";
        options.y_label = series.front().curve.kind == CurveKind::cumulative_hazard
                              ? "cumulative hazard"
                              : "probability";
        const fs::path path = dir / "curves.svg";
        write_file(path, svg_curves(series, options));
        artifacts.push_back(path.string());
    }

    report["artifacts"] = artifacts;
    write_file(dir / "report.json", report.dump(2) + "\n");
    std::cout << "wrote " << (dir / "report.json").string() << "\n";
    return 0;
}

int cmd_compare(const GlobalConfig& g, const std::string& input, EstimandStrategy strategy,
                bool per_group_weights, bool ae_collected_after_disc) {
    PreparedInput prepared = prepare_input(input, strategy, ae_collected_after_disc);
    surface_warnings(prepared.plan);
    const fs::path dir = prepare_out_dir(g);

    json report;
    report["subcommand"] = "compare";
    report["input"] = input;
    report["estimand"] = strategy_name(strategy);
    report["plan"] = json::parse(prepared.plan.to_json());
    report["warnings"] = prepared.plan.warnings;

    report["rate_ratio"] =
        json::parse(rate_ratio(prepared.data, EventCode::adverse_event).to_json());

    const CauseSpecificFits fits = cox_both_causes(prepared.data, prepared.plan.competing);
    report["cox_ae"] = outcome_to_json(fits.ae);
    report["cox_competing"] = outcome_to_json(fits.competing);

    FitOutcome fg;
    try {
        FineGrayOptions options;
        options.competing = prepared.plan.competing;
        options.per_group_censoring_weights = per_group_weights;
        fg.fit = fine_gray(prepared.data, EventCode::adverse_event, options);
    } catch (const Error& e) {
        fg.error = e.code();
        fg.error_message = e.what();
    }
    report["fine_gray"] = outcome_to_json(fg);

    write_file(dir / "compare.json", report.dump(2) + "\n");
    std::cout << "wrote " << (dir / "compare.json").string() << "\n";
    return 0;
}

int cmd_simulate(const GlobalConfig& g, double alpha_ae0, double alpha_ce0, double hr_ae,
                 double hr_ce, std::size_t n, double censor, const std::string& censor_mode,
                 std::string out_path) {
    Scenario scenario;
    scenario.group0 = {alpha_ae0, alpha_ce0};
    scenario.group1 = {alpha_ae0 * hr_ae, alpha_ce0 * hr_ce};
    scenario.n_per_arm = n;
    scenario.seed = g.seed;
    if (censor_mode == "uniform") {
        scenario.censor_mode = CensorMode::uniform;
    } else if (censor_mode == "fixed") {
        scenario.censor_mode = CensorMode::fixed;
    } else if (censor_mode == "none") {
        scenario.censor_mode = CensorMode::none;
    } else if (censor_mode == "auto") {
        scenario.censor_mode = censor > 0.0 ? CensorMode::fixed : CensorMode::none;
    } else {
        fail(ErrorCode::usage_error, "unknown censor mode '" + censor_mode + "'");
    }
    scenario.censor_time = censor;

    Dataset ds = simulate(scenario);
    const fs::path dir = prepare_out_dir(g);
    fs::path path = out_path.empty() ? dir / "data.csv" : fs::path(out_path);
    write_csv_file(ds, path.string());
    std::cout << "wrote " << path.string() << " (" << ds.records.size() << " records, rng "
              << ds.meta.rng << ")\n";
    return 0;
}

int cmd_bias(const GlobalConfig& g, double alpha_ae0, double alpha_ce0, std::size_t n,
             double censor, const std::string& censor_mode, double t_eval, std::size_t reps) {
    Scenario scenario;
    scenario.group0 = {alpha_ae0, alpha_ce0};
    scenario.group1 = scenario.group0;
    scenario.n_per_arm = n;
    scenario.seed = g.seed;
    scenario.censor_time = censor;
    if (censor_mode == "uniform") {
        scenario.censor_mode = CensorMode::uniform;
    } else if (censor_mode == "fixed") {
        scenario.censor_mode = CensorMode::fixed;
    } else if (censor_mode == "none") {
        scenario.censor_mode = CensorMode::none;
    } else {
        fail(ErrorCode::usage_error, "unknown censor mode '" + censor_mode + "'");
    }

    const BiasTable table = bias_experiment(scenario, t_eval, reps);
    const fs::path dir = prepare_out_dir(g);
    write_file(dir / "bias.csv", table.to_csv());
    std::cout << table.to_csv();
    std::cout << "wrote " << (dir / "bias.csv").string() << "\n";
    return 0;
}

int cmd_meta(const GlobalConfig& g, const std::string& input, const std::string& method,
             double prior_scale, bool plot) {
    const std::vector<StudyEffect> studies = parse_studies_csv_file(input);
    if (studies.empty()) fail(ErrorCode::empty_input, "no studies in '" + input + "'");

    std::vector<MetaResult> results;
    if (method == "fixed") {
        results.push_back(fixed_effect(studies));
    } else if (method == "mkh") {
        results.push_back(knapp_hartung_modified(studies));
    } else if (method == "bayes") {
        results.push_back(bayes_half_normal(studies, prior_scale));
    } else if (method == "all") {
        results.push_back(fixed_effect(studies));
        results.push_back(knapp_hartung_modified(studies));
        results.push_back(bayes_half_normal(studies, 0.5));
        results.push_back(bayes_half_normal(studies, 1.0));
    } else {
        fail(ErrorCode::usage_error, "unknown meta method '" + method + "'");
    }

    const ForestTable table = forest_data(studies, results);
    const fs::path dir = prepare_out_dir(g);

    json report;
    report["subcommand"] = "meta";
    report["input"] = input;
    report["method"] = method;
    report["results"] = json::array();
    for (const MetaResult& r : results) report["results"].push_back(json::parse(r.to_json()));
    write_file(dir / "meta.json", report.dump(2) + "\n");
    write_file(dir / "forest.csv", table.to_csv());
    std::cout << "wrote " << (dir / "meta.json").string() << "\n";
    if (plot) {
        const fs::path path = dir / "forest.svg";
        write_file(path, svg_forest(table, "combined hazard ratios"));
        std::cout << "wrote " << path.string() << "\n";
    }
    return 0;
}

} // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"time-to-first-adverse-event analysis under competing risks"};
    app.require_subcommand(1);

    GlobalConfig g;
    app.add_option("--out-dir", g.out_dir, "directory for output artifacts")
        ->capture_default_str();
    app.add_option("--format", g.format, "artifact format for curve results")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    app.add_option("--seed", g.seed, "random seed for simulate/bias")->capture_default_str();

    // validate
    auto* validate_cmd = app.add_subcommand("validate", "check a dataset and report violations");
    std::string validate_input;
    validate_cmd->add_option("--input", validate_input, "subject-level CSV")->required();

    // estimate
    auto* estimate_cmd = app.add_subcommand("estimate", "one-sample estimators per group");
    std::string estimate_input;
    std::string estimand = "on-treatment";
    std::string estimator = "aalen-johansen";
    bool plot = false;
    bool exposure_adjusted = false;
    bool estimate_ae_collected = false;
    estimate_cmd->add_option("--input", estimate_input, "subject-level CSV")->required();
    estimate_cmd->add_option("--estimand", estimand, "intercurrent-event strategy")
        ->check(CLI::IsMember({"policy", "on-treatment", "composite", "hypothetical"}))
        ->capture_default_str();
    estimate_cmd->add_option("--estimator", estimator, "which estimator to run")
        ->check(CLI::IsMember({"km", "nelson-aalen", "aalen-johansen", "incidence-proportion",
                               "crude-rate", "incidence-rate", "parametric"}))
        ->capture_default_str();
    estimate_cmd->add_flag("--plot", plot, "emit an SVG overlay of the group curves");
    estimate_cmd->add_flag("--exposure-adjusted", exposure_adjusted,
                           "use exposure time in incidence-rate denominators");
    estimate_cmd->add_flag("--ae-collected-after-disc", estimate_ae_collected,
                           "assert that AEs were collected past treatment discontinuation "
                           "(required for --estimand policy)");

    // compare
    auto* compare_cmd = app.add_subcommand("compare", "two-group effect estimators");
    std::string compare_input;
    std::string compare_estimand = "on-treatment";
    bool per_group_weights = false;
    bool compare_ae_collected = false;
    compare_cmd->add_option("--input", compare_input, "subject-level CSV")->required();
    compare_cmd->add_option("--estimand", compare_estimand, "intercurrent-event strategy")
        ->check(CLI::IsMember({"policy", "on-treatment", "composite", "hypothetical"}))
        ->capture_default_str();
    compare_cmd->add_flag("--per-group-weights", per_group_weights,
                          "estimate Fine-Gray censoring weights per group instead of pooled");
    compare_cmd->add_flag("--ae-collected-after-disc", compare_ae_collected,
                          "assert that AEs were collected past treatment discontinuation "
                          "(required for --estimand policy)");

    // simulate
    auto* simulate_cmd = app.add_subcommand("simulate", "constant-hazard competing-risks data");
    double alpha_ae0 = 0.0;
    double alpha_ce0 = 0.0;
    double hr_ae = 1.0;
    double hr_ce = 1.0;
    std::size_t n_per_arm = 0;
    double censor = 0.0;
    std::string censor_mode = "auto";
    std::string sim_out;
    simulate_cmd->add_option("--alpha-ae0", alpha_ae0, "arm-0 AE hazard per day")->required();
    simulate_cmd->add_option("--alpha-ce0", alpha_ce0, "arm-0 competing hazard per day")
        ->required();
    simulate_cmd->add_option("--hr-ae", hr_ae, "AE hazard ratio arm 1 vs arm 0")
        ->capture_default_str();
    simulate_cmd->add_option("--hr-ce", hr_ce, "competing hazard ratio arm 1 vs arm 0")
        ->capture_default_str();
    simulate_cmd->add_option("--n", n_per_arm, "subjects per arm")->required();
    simulate_cmd->add_option("--censor", censor, "administrative censoring time (0 = none)")
        ->capture_default_str();
    simulate_cmd->add_option("--censor-mode", censor_mode, "none|fixed|uniform|auto")
        ->check(CLI::IsMember({"none", "fixed", "uniform", "auto"}))
        ->capture_default_str();
    simulate_cmd->add_option("--out", sim_out, "output CSV path (default <out-dir>/data.csv)");

    // bias
    auto* bias_cmd = app.add_subcommand("bias", "replicated estimator-bias experiment (arm 0)");
    double bias_alpha_ae0 = 0.02;
    double bias_alpha_ce0 = 0.02;
    std::size_t bias_n = 1000;
    double bias_censor = 40.0;
    std::string bias_censor_mode = "uniform";
    double t_eval = 40.0;
    std::size_t reps = 500;
    bias_cmd->add_option("--alpha-ae0", bias_alpha_ae0, "AE hazard per day")
        ->capture_default_str();
    bias_cmd->add_option("--alpha-ce0", bias_alpha_ce0, "competing hazard per day")
        ->capture_default_str();
    bias_cmd->add_option("--n", bias_n, "subjects per replication")->capture_default_str();
    bias_cmd->add_option("--censor", bias_censor, "censoring time bound")->capture_default_str();
    bias_cmd->add_option("--censor-mode", bias_censor_mode, "none|fixed|uniform")
        ->check(CLI::IsMember({"none", "fixed", "uniform"}))
        ->capture_default_str();
    bias_cmd->add_option("--t-eval", t_eval, "evaluation time")->capture_default_str();
    bias_cmd->add_option("--reps", reps, "number of replications")->capture_default_str();

    // meta
    auto* meta_cmd = app.add_subcommand("meta", "combine per-study log effects");
    std::string meta_input;
    std::string meta_method = "all";
    double prior_scale = 0.5;
    bool meta_plot = false;
    meta_cmd->add_option("--input", meta_input, "CSV with label,log_effect,se")->required();
    meta_cmd->add_option("--method", meta_method, "fixed|mkh|bayes|all")
        ->check(CLI::IsMember({"fixed", "mkh", "bayes", "all"}))
        ->capture_default_str();
    meta_cmd->add_option("--prior-scale", prior_scale, "half-normal scale for --method bayes")
        ->capture_default_str();
    meta_cmd->add_flag("--plot", meta_plot, "emit a forest-plot SVG");

    for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

    std::vector<std::string> argv_storage;
    argv_storage.push_back("aesurv");
    for (const std::string& a : args) argv_storage.push_back(a);
    std::vector<const char*> argv;
    for (const std::string& a : argv_storage) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (validate_cmd->parsed()) return cmd_validate(g, validate_input);
        if (estimate_cmd->parsed()) {
            const auto strategy = parse_strategy(estimand);
            return cmd_estimate(g, estimate_input, *strategy, estimator, plot, exposure_adjusted,
                                estimate_ae_collected);
        }
        if (compare_cmd->parsed()) {
            const auto strategy = parse_strategy(compare_estimand);
            return cmd_compare(g, compare_input, *strategy, per_group_weights,
                               compare_ae_collected);
        }
        if (simulate_cmd->parsed()) {
            return cmd_simulate(g, alpha_ae0, alpha_ce0, hr_ae, hr_ce, n_per_arm, censor,
                                censor_mode, sim_out);
        }
        if (bias_cmd->parsed()) {
            return cmd_bias(g, bias_alpha_ae0, bias_alpha_ce0, bias_n, bias_censor,
                            bias_censor_mode, t_eval, reps);
        }
        if (meta_cmd->parsed()) {
            return cmd_meta(g, meta_input, meta_method, prior_scale, meta_plot);
        }
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
        return e.code() == ErrorCode::usage_error ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2; // no subcommand matched (require_subcommand should prevent this)
}

} // namespace aesurv::cli
