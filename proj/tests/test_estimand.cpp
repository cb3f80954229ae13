#include <doctest.h>

#include <string>
#include <vector>

#include "aesurv/data.hpp"
#include "aesurv/estimand.hpp"
#include "aesurv/estimators.hpp"
#include "test_support.hpp"

using namespace aesurv;
using test_support::expect_error;

namespace {

Dataset mixed_dataset(bool collected_after_discontinuation) {
    Dataset ds = parse_csv_string("a,0,3,1\n"  // AE
                                  "b,0,5,2\n"  // death
                                  "c,1,7,3\n"  // discontinuation
                                  "d,1,9,0\n"  // administrative censoring
                                  "e,0,4,3\n"  // discontinuation
                                  "f,1,2,1\n");
    ds.meta.ae_collection_after_discontinuation = collected_after_discontinuation;
    return ds;
}

const CodeSet kAllCodes{EventCode::censored, EventCode::adverse_event, EventCode::death,
                        EventCode::discontinuation};

void check_partition(const AnalysisPlan& plan) {
    CHECK_FALSE(plan.target.intersects(plan.competing));
    CHECK_FALSE(plan.target.intersects(plan.censoring));
    CHECK_FALSE(plan.competing.intersects(plan.censoring));
    CHECK(plan.target.size() + plan.competing.size() + plan.censoring.size() == kAllCodes.size());
}

void check_frame_unchanged(const Dataset& before, const Dataset& after) {
    REQUIRE(before.records.size() == after.records.size());
    for (std::size_t i = 0; i < before.records.size(); ++i) {
        CHECK(before.records[i].subject_id == after.records[i].subject_id);
        CHECK(before.records[i].group == after.records[i].group);
        CHECK(before.records[i].time == after.records[i].time);
    }
}

} // namespace

TEST_CASE("strategy names parse in all the CLI spellings") {
    CHECK(parse_strategy("policy") == EstimandStrategy::treatment_policy);
    CHECK(parse_strategy("treatment-policy") == EstimandStrategy::treatment_policy);
    CHECK(parse_strategy("Treatment_Policy") == EstimandStrategy::treatment_policy);
    CHECK(parse_strategy("on-treatment") == EstimandStrategy::while_on_treatment);
    CHECK(parse_strategy("while-on-treatment") == EstimandStrategy::while_on_treatment);
    CHECK(parse_strategy("COMPOSITE") == EstimandStrategy::composite);
    CHECK(parse_strategy("hypothetical") == EstimandStrategy::hypothetical);
    CHECK_FALSE(parse_strategy("per-protocol").has_value());
    CHECK_FALSE(parse_strategy("").has_value());
}

TEST_CASE("while-on-treatment leaves the data untouched and competes both intercurrents") {
    const Dataset ds = mixed_dataset(false);
    const auto [recoded, plan] = apply_strategy(ds, EstimandStrategy::while_on_treatment);
    CHECK(recoded.records == ds.records);
    CHECK(plan.target == CodeSet{EventCode::adverse_event});
    CHECK(plan.competing == CodeSet{EventCode::death, EventCode::discontinuation});
    CHECK(plan.censoring == CodeSet{EventCode::censored});
    CHECK(plan.warnings.empty());
    check_partition(plan);

    // the plan feeds straight into the estimator with no further mapping
    const CurveEstimate direct = aalen_johansen(ds, 0, EventCode::adverse_event,
                                                CodeSet{EventCode::death, EventCode::discontinuation});
    const CurveEstimate via_plan = aalen_johansen(recoded, 0, EventCode::adverse_event, plan.competing);
    REQUIRE(direct.points.size() == via_plan.points.size());
    for (std::size_t i = 0; i < direct.points.size(); ++i) {
        CHECK(direct.points[i].value == via_plan.points[i].value);
    }
}

TEST_CASE("composite merges every intercurrent event into the target") {
    const Dataset ds = mixed_dataset(false);
    const auto [recoded, plan] = apply_strategy(ds, EstimandStrategy::composite);
    check_frame_unchanged(ds, recoded);
    // AE@3 stays, death@5 -> AE, disc@7 -> AE, censored@9 stays
    CHECK(recoded.records[0].event == EventCode::adverse_event);
    CHECK(recoded.records[1].event == EventCode::adverse_event);
    CHECK(recoded.records[2].event == EventCode::adverse_event);
    CHECK(recoded.records[3].event == EventCode::censored);
    CHECK(recoded.records[4].event == EventCode::adverse_event);
    CHECK(plan.target ==
          CodeSet{EventCode::adverse_event, EventCode::death, EventCode::discontinuation});
    CHECK(plan.competing.empty());
    check_partition(plan);

    // with an empty competing set, 1-KM and Aalen-Johansen are the same curve
    const CurveEstimate km = kaplan_meier(recoded, 0, CodeSet{EventCode::adverse_event});
    const CurveEstimate aj = aalen_johansen(recoded, 0, EventCode::adverse_event, plan.competing);
    REQUIRE(km.points.size() == aj.points.size());
    for (std::size_t i = 0; i < km.points.size(); ++i) {
        CHECK(aj.points[i].value == doctest::Approx(1.0 - km.points[i].value).epsilon(1e-14));
    }
}

TEST_CASE("hypothetical censors discontinuation and is loudly flagged") {
    const Dataset ds = mixed_dataset(false);
    const auto [recoded, plan] = apply_strategy(ds, EstimandStrategy::hypothetical);
    check_frame_unchanged(ds, recoded);
    CHECK(recoded.records[2].event == EventCode::censored); // disc@7
    CHECK(recoded.records[4].event == EventCode::censored); // disc@4
    CHECK(recoded.records[1].event == EventCode::death);    // death remains a competing risk
    CHECK(plan.competing == CodeSet{EventCode::death});
    check_partition(plan);
    REQUIRE(plan.warnings.size() == 1);
    CHECK(plan.warnings[0].find("assumption-laden") != std::string::npos);
    CHECK(plan.warnings[0].find("sensitivity analyses") != std::string::npos);
    // the warning travels into the serialized plan
    CHECK(plan.to_json().find("assumption-laden") != std::string::npos);
}

TEST_CASE("treatment policy needs post-discontinuation AE collection") {
    const std::string msg =
        expect_error([] { apply_strategy(mixed_dataset(false), EstimandStrategy::treatment_policy); },
                     ErrorCode::strategy_data_mismatch);
    CHECK(msg.find("treatment-policy") != std::string::npos);

    const auto [recoded, plan] = apply_strategy(mixed_dataset(true), EstimandStrategy::treatment_policy);
    CHECK(recoded.records[2].event == EventCode::censored);
    CHECK(recoded.records[1].event == EventCode::death);
    CHECK(plan.competing == CodeSet{EventCode::death});
    CHECK(plan.warnings.empty());
    check_partition(plan);
}

TEST_CASE("applying a strategy twice is a no-op the second time") {
    for (EstimandStrategy s : {EstimandStrategy::while_on_treatment, EstimandStrategy::composite,
                               EstimandStrategy::hypothetical}) {
        const Dataset ds = mixed_dataset(false);
        const auto [once, plan1] = apply_strategy(ds, s);
        const auto [twice, plan2] = apply_strategy(once, s);
        CHECK(twice.records == once.records);
        CHECK(plan1.target == plan2.target);
        CHECK(plan1.competing == plan2.competing);
    }
    const Dataset ds = mixed_dataset(true);
    const auto [once, plan1] = apply_strategy(ds, EstimandStrategy::treatment_policy);
    const auto [twice, plan2] = apply_strategy(once, EstimandStrategy::treatment_policy);
    CHECK(twice.records == once.records);
}

TEST_CASE("strategies only relabel events, never rows, times or groups") {
    for (EstimandStrategy s : {EstimandStrategy::while_on_treatment, EstimandStrategy::composite,
                               EstimandStrategy::hypothetical}) {
        const Dataset ds = mixed_dataset(false);
        const auto [recoded, plan] = apply_strategy(ds, s);
        check_frame_unchanged(ds, recoded);
        CHECK(recoded.size() == ds.size());
        CHECK(recoded.group_size(0) == ds.group_size(0));
        CHECK(recoded.group_size(1) == ds.group_size(1));
    }
}

TEST_CASE("plan JSON names the strategy") {
    const auto [recoded, plan] = apply_strategy(mixed_dataset(false), EstimandStrategy::composite);
    const std::string j = plan.to_json();
    CHECK(j.find("\"strategy\": \"composite\"") != std::string::npos);
    CHECK(j.find("\"target\"") != std::string::npos);
    CHECK(j.find("\"competing\"") != std::string::npos);
    CHECK(j.find("\"warnings\"") != std::string::npos);
}
