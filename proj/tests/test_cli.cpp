#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <unistd.h>

#include "aesurv/cli.hpp"
#include "aesurv/data.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

/// Runs the CLI in-process with captured stdout/stderr.
CliResult run_cli(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    std::streambuf* old_out = std::cout.rdbuf(out.rdbuf());
    std::streambuf* old_err = std::cerr.rdbuf(err.rdbuf());
    CliResult result;
    try {
        result.code = aesurv::cli::run(args);
    } catch (...) {
        std::cout.rdbuf(old_out);
        std::cerr.rdbuf(old_err);
        throw;
    }
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    result.out = out.str();
    result.err = err.str();
    return result;
}

struct TempDir {
    fs::path path;
    TempDir() {
        static std::atomic<unsigned> counter{0};
        path = fs::temp_directory_path() /
               ("aesurv_cli_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter.fetch_add(1)));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    std::string str(const std::string& name = "") const {
        return (name.empty() ? path : path / name).string();
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), "cannot open " << p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    REQUIRE(out.good());
    out << content;
}

json load_json(const fs::path& p) { return json::parse(slurp(p)); }

const char* kMixedCsv =
    "subject_id,group,time,event\n"
    "a,0,3,1\n"
    "b,0,5,2\n"
    "c,0,4,3\n"
    "d,0,6,0\n"
    "e,1,2,1\n"
    "f,1,7,3\n"
    "g,1,8,0\n"
    "h,1,5,2\n";

} // namespace

TEST_CASE("cli: --help exits 0 and names the subcommands") {
    const CliResult r = run_cli({"--help"});
    CHECK(r.code == 0);
    for (const char* name : {"validate", "estimate", "compare", "simulate", "bias", "meta"}) {
        CHECK(r.out.find(name) != std::string::npos);
    }
}

TEST_CASE("cli: usage errors exit 2") {
    CHECK(run_cli({}).code == 2);                        // a subcommand is required
    CHECK(run_cli({"frobnicate"}).code == 2);            // unknown subcommand
    CHECK(run_cli({"estimate"}).code == 2);              // missing --input
    CHECK(run_cli({"validate", "--input", "x.csv", "--bogus"}).code == 2);
    CHECK(run_cli({"estimate", "--input", "x.csv", "--estimator", "bogus"}).code == 2);
    CHECK(run_cli({"estimate", "--input", "x.csv", "--estimand", "bogus"}).code == 2);
    CHECK(run_cli({"simulate", "--alpha-ae0", "0.1", "--alpha-ce0", "0.1", "--n", "10",
                   "--censor-mode", "bogus"})
              .code == 2);
}

TEST_CASE("cli: validate reports a clean file and writes validation.json") {
    TempDir dir;
    spit(dir.path / "data.csv", kMixedCsv);
    const CliResult r =
        run_cli({"--out-dir", dir.str(), "validate", "--input", dir.str("data.csv")});
    CHECK(r.code == 0);
    const json v = load_json(dir.path / "validation.json");
    CHECK(v.at("valid").get<bool>());
    CHECK(v.at("violations").empty());
    CHECK(v.at("group_counts").contains("0"));
    CHECK(v.at("group_counts").contains("1"));
}

TEST_CASE("cli: validate flags an empty dataset with exit 1") {
    TempDir dir;
    spit(dir.path / "empty.csv", "# only a comment line\n");
    const CliResult r =
        run_cli({"--out-dir", dir.str(), "validate", "--input", dir.str("empty.csv")});
    CHECK(r.code == 1);
    const json v = load_json(dir.path / "validation.json");
    CHECK_FALSE(v.at("valid").get<bool>());
    CHECK(!v.at("violations").empty());
}

TEST_CASE("cli: unreadable input exits 1 with an io error") {
    TempDir dir;
    const CliResult r =
        run_cli({"--out-dir", dir.str(), "validate", "--input", dir.str("missing.csv")});
    CHECK(r.code == 1);
    CHECK(r.err.find("io_error") != std::string::npos);
}

TEST_CASE("cli: malformed rows exit 1 with a row-numbered message") {
    TempDir dir;
    spit(dir.path / "bad.csv", "a,0,5,1\nb,0,-2,1\n");
    const CliResult r =
        run_cli({"--out-dir", dir.str(), "validate", "--input", dir.str("bad.csv")});
    CHECK(r.code == 1);
    CHECK(r.err.find("row 2") != std::string::npos);
}

TEST_CASE("cli: simulate is deterministic at the file level") {
    TempDir a;
    TempDir b;
    const std::vector<std::string> common = {"simulate", "--alpha-ae0", "0.03",
                                             "--alpha-ce0", "0.01", "--n", "50",
                                             "--censor", "30"};
    auto with_prefix = [](const TempDir& d, std::vector<std::string> args,
                          const std::string& seed) {
        std::vector<std::string> full = {"--out-dir", d.str(), "--seed", seed};
        full.insert(full.end(), args.begin(), args.end());
        return full;
    };
    CHECK(run_cli(with_prefix(a, common, "42")).code == 0);
    CHECK(run_cli(with_prefix(b, common, "42")).code == 0);
    const std::string bytes_a = slurp(a.path / "data.csv");
    CHECK(bytes_a == slurp(b.path / "data.csv"));

    TempDir c;
    CHECK(run_cli(with_prefix(c, common, "43")).code == 0);
    CHECK(bytes_a != slurp(c.path / "data.csv"));
}

TEST_CASE("cli: censor-mode auto picks none for censor 0 and fixed otherwise") {
    TempDir dir;
    CHECK(run_cli({"--out-dir", dir.str(), "--seed", "7", "simulate", "--alpha-ae0", "0.05",
                   "--alpha-ce0", "0.02", "--n", "80", "--censor", "0", "--out",
                   dir.str("none.csv")})
              .code == 0);
    const aesurv::Dataset none = aesurv::parse_csv_file(dir.str("none.csv"));
    for (const aesurv::SubjectRecord& rec : none.records) {
        CHECK(rec.event != aesurv::EventCode::censored);
    }

    CHECK(run_cli({"--out-dir", dir.str(), "--seed", "7", "simulate", "--alpha-ae0", "0.05",
                   "--alpha-ce0", "0.02", "--n", "80", "--censor", "30", "--out",
                   dir.str("fixed.csv")})
              .code == 0);
    const aesurv::Dataset fixed = aesurv::parse_csv_file(dir.str("fixed.csv"));
    bool saw_censored = false;
    for (const aesurv::SubjectRecord& rec : fixed.records) {
        CHECK(rec.time <= 30.0);
        if (rec.event == aesurv::EventCode::censored) {
            saw_censored = true;
            CHECK(rec.time == 30.0);
        }
    }
    CHECK(saw_censored);
}

TEST_CASE("cli: simulate then estimate km composite writes per-group curves") {
    TempDir dir;
    REQUIRE(run_cli({"--out-dir", dir.str(), "simulate", "--alpha-ae0", "0.02", "--alpha-ce0",
                     "0.015", "--hr-ae", "0.5", "--n", "200", "--censor", "120"})
                .code == 0);
    const CliResult r = run_cli({"--out-dir", dir.str(), "estimate", "--input",
                                 dir.str("data.csv"), "--estimand", "composite", "--estimator",
                                 "km", "--plot"});
    CHECK(r.code == 0);
    CHECK(fs::exists(dir.path / "km_group0.csv"));
    CHECK(fs::exists(dir.path / "km_group1.csv"));
    CHECK(fs::exists(dir.path / "curves.svg"));
    CHECK(slurp(dir.path / "km_group0.csv").rfind("time,value,variance\n", 0) == 0);
    CHECK(slurp(dir.path / "curves.svg").rfind("<svg", 0) == 0);

    const json report = load_json(dir.path / "report.json");
    CHECK(report.at("estimand") == "composite");
    CHECK(report.at("estimator") == "km");
    CHECK(report.at("plan").at("strategy") == "composite");
    CHECK(report.at("groups").at("0").contains("curve_csv"));
    CHECK(report.at("artifacts").size() == 3);
}

TEST_CASE("cli: json format embeds curve points instead of CSV artifacts") {
    TempDir dir;
    spit(dir.path / "data.csv", kMixedCsv);
    const CliResult r =
        run_cli({"--out-dir", dir.str(), "--format", "json", "estimate", "--input",
                 dir.str("data.csv"), "--estimator", "aalen-johansen"});
    CHECK(r.code == 0);
    CHECK_FALSE(fs::exists(dir.path / "aalen-johansen_group0.csv"));
    const json report = load_json(dir.path / "report.json");
    const json& curve = report.at("groups").at("0").at("curve");
    CHECK(curve.at("kind") == "cumulative_incidence");
    CHECK(!curve.at("points").empty());
    for (const json& p : curve.at("points")) {
        CHECK(p.contains("time"));
        CHECK(p.contains("value"));
        CHECK(p.contains("variance"));
    }
}

TEST_CASE("cli: the hypothetical caveat reaches stderr and the report") {
    TempDir dir;
    spit(dir.path / "data.csv", kMixedCsv);
    const CliResult r = run_cli({"--out-dir", dir.str(), "estimate", "--input",
                                 dir.str("data.csv"), "--estimand", "hypothetical",
                                 "--estimator", "km"});
    CHECK(r.code == 0);
    CHECK(r.err.find("assumption-laden") != std::string::npos);
    const json report = load_json(dir.path / "report.json");
    REQUIRE(!report.at("warnings").empty());
    const std::string w = report.at("warnings")[0].get<std::string>();
    CHECK(w.find("sensitivity analyses") != std::string::npos);
}

TEST_CASE("cli: treatment-policy is refused without the collection flag") {
    TempDir dir;
    spit(dir.path / "data.csv", kMixedCsv);
    const CliResult refused = run_cli({"--out-dir", dir.str(), "estimate", "--input",
                                       dir.str("data.csv"), "--estimand", "policy",
                                       "--estimator", "km"});
    CHECK(refused.code == 1);
    CHECK(refused.err.find("treatment-policy") != std::string::npos);

    const CliResult ok = run_cli({"--out-dir", dir.str(), "estimate", "--input",
                                  dir.str("data.csv"), "--estimand", "policy", "--estimator",
                                  "km", "--ae-collected-after-disc"});
    CHECK(ok.code == 0);
    const json report = load_json(dir.path / "report.json");
    CHECK(report.at("estimand") == "treatment_policy");
}

TEST_CASE("cli: exposure-adjusted incidence rate through the report") {
    TempDir dir;
    spit(dir.path / "data.csv",
         "subject_id,group,time,event,exposure_time\n"
         "a,0,8,1,8\n"
         "b,0,10,1,4\n"
         "c,0,10,0,\n");
    const CliResult r = run_cli({"--out-dir", dir.str(), "estimate", "--input",
                                 dir.str("data.csv"), "--estimator", "incidence-rate",
                                 "--exposure-adjusted"});
    CHECK(r.code == 0);
    const json report = load_json(dir.path / "report.json");
    const json& g0 = report.at("groups").at("0");
    CHECK(g0.at("exposure_adjusted").get<bool>());
    CHECK(g0.at("incidence_rate").at("events").get<int>() == 1);
    CHECK(g0.at("incidence_rate").at("person_time").get<double>() ==
          doctest::Approx(22.0));
    CHECK(g0.at("incidence_rate").at("rate").get<double>() == doctest::Approx(1.0 / 22.0));
}

TEST_CASE("cli: compare emits all four effect measures") {
    TempDir dir;
    REQUIRE(run_cli({"--out-dir", dir.str(), "simulate", "--alpha-ae0", "0.02", "--alpha-ce0",
                     "0.015", "--hr-ae", "0.5", "--n", "400", "--censor", "100"})
                .code == 0);
    const CliResult r = run_cli({"--out-dir", dir.str(), "compare", "--input",
                                 dir.str("data.csv"), "--per-group-weights"});
    CHECK(r.code == 0);
    const json report = load_json(dir.path / "compare.json");
    CHECK(report.at("rate_ratio").contains("ratio"));
    CHECK(report.at("cox_ae").contains("hr"));
    CHECK(report.at("cox_competing").contains("hr"));
    CHECK(report.at("fine_gray").contains("hr"));
    CHECK(report.at("cox_ae").at("hr").get<double>() > 0.0);
    CHECK(report.at("cox_ae").at("hr").get<double>() < 1.0);
}

TEST_CASE("cli: meta --method all writes four results plus forest artifacts") {
    TempDir dir;
    spit(dir.path / "studies.csv",
         "label,log_effect,se\n"
         "trial_a,0.9162,0.15\n"
         "trial_b,0.1662,0.22\n");
    const CliResult r = run_cli({"--out-dir", dir.str(), "meta", "--input",
                                 dir.str("studies.csv"), "--method", "all", "--plot"});
    CHECK(r.code == 0);
    const json report = load_json(dir.path / "meta.json");
    REQUIRE(report.at("results").size() == 4);
    CHECK(report.at("results")[0].at("method") == "fixed");
    CHECK(report.at("results")[1].at("method") == "mkh");
    CHECK(report.at("results")[2].at("method") == "bayes_hn(0.5)");
    CHECK(report.at("results")[3].at("method") == "bayes_hn(1)");

    const std::string forest = slurp(dir.path / "forest.csv");
    // header + 2 studies + 4 pooled results
    CHECK(std::count(forest.begin(), forest.end(), '\n') == 7);
    CHECK(slurp(dir.path / "forest.svg").rfind("<svg", 0) == 0);
}

TEST_CASE("cli: meta single method honours the prior scale") {
    TempDir dir;
    spit(dir.path / "studies.csv", "trial_a,0.9162,0.15\ntrial_b,0.1662,0.22\n");
    const CliResult r = run_cli({"--out-dir", dir.str(), "meta", "--input",
                                 dir.str("studies.csv"), "--method", "bayes", "--prior-scale",
                                 "1.5"});
    CHECK(r.code == 0);
    const json report = load_json(dir.path / "meta.json");
    REQUIRE(report.at("results").size() == 1);
    CHECK(report.at("results")[0].at("method") == "bayes_hn(1.5)");
    CHECK(report.at("results")[0].at("prior_scale").get<double>() ==
          doctest::Approx(1.5));
}

TEST_CASE("cli: bias writes the three-estimator table") {
    TempDir dir;
    const CliResult r = run_cli({"--out-dir", dir.str(), "--seed", "11", "bias", "--n", "60",
                                 "--reps", "10", "--censor", "40", "--censor-mode", "uniform",
                                 "--t-eval", "40"});
    CHECK(r.code == 0);
    const std::string table = slurp(dir.path / "bias.csv");
    CHECK(table.rfind("estimator,mean_estimate,truth,bias\n", 0) == 0);
    CHECK(table.find("incidence_proportion,") != std::string::npos);
    CHECK(table.find("one_minus_km_ae_censored,") != std::string::npos);
    CHECK(table.find("aalen_johansen,") != std::string::npos);
    CHECK(std::count(table.begin(), table.end(), '\n') == 4);
}

TEST_CASE("cli: repeated runs produce byte-identical artifacts") {
    TempDir dir;
    spit(dir.path / "data.csv", kMixedCsv);
    spit(dir.path / "studies.csv", "trial_a,0.9162,0.15\ntrial_b,0.1662,0.22\n");

    TempDir out_a;
    TempDir out_b;
    for (const TempDir* out : {&out_a, &out_b}) {
        REQUIRE(run_cli({"--out-dir", out->str(), "estimate", "--input", dir.str("data.csv"),
                         "--estimator", "aalen-johansen", "--plot"})
                    .code == 0);
        REQUIRE(run_cli({"--out-dir", out->str(), "meta", "--input", dir.str("studies.csv"),
                         "--plot"})
                    .code == 0);
    }
    for (const char* name :
         {"aalen-johansen_group0.csv", "aalen-johansen_group1.csv", "curves.svg", "forest.csv",
          "forest.svg", "meta.json"}) {
        CHECK_MESSAGE(slurp(out_a.path / name) == slurp(out_b.path / name), name);
    }
}
