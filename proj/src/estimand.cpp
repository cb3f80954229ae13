#include "aesurv/estimand.hpp"

#include <algorithm>
#include <cctype>

#include <nlohmann/json.hpp>

namespace aesurv {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

constexpr const char* kHypotheticalWarning =
    "hypothetical estimand: assumption-laden recoding in effect. Treating treatment "
    "discontinuation as independent censoring rests on an untestable and rather strong "
    "assumption; sensitivity analyses are a minimum requirement.";

} // namespace

const char* strategy_name(EstimandStrategy s) {
    switch (s) {
        case EstimandStrategy::treatment_policy: return "treatment_policy";
        case EstimandStrategy::while_on_treatment: return "while_on_treatment";
        case EstimandStrategy::composite: return "composite";
        case EstimandStrategy::hypothetical: return "hypothetical";
    }
    return "unknown";
}

std::optional<EstimandStrategy> parse_strategy(std::string_view token) {
    const std::string name = lower(token);
    if (name == "policy" || name == "treatment-policy" || name == "treatment_policy") {
        return EstimandStrategy::treatment_policy;
    }
    if (name == "on-treatment" || name == "on_treatment" || name == "while-on-treatment" ||
        name == "while_on_treatment") {
        return EstimandStrategy::while_on_treatment;
    }
    if (name == "composite") return EstimandStrategy::composite;
    if (name == "hypothetical") return EstimandStrategy::hypothetical;
    return std::nullopt;
}

std::string AnalysisPlan::to_json() const {
    nlohmann::json j;
    j["strategy"] = strategy_name(strategy);
    j["target"] = target.to_string();
    j["competing"] = competing.to_string();
    j["censoring"] = censoring.to_string();
    j["warnings"] = warnings;
    return j.dump(2);
}

std::pair<Dataset, AnalysisPlan> apply_strategy(const Dataset& ds, EstimandStrategy s) {
    Dataset out = ds;
    AnalysisPlan plan;
    plan.strategy = s;
    plan.target = CodeSet{EventCode::adverse_event};

    switch (s) {
        case EstimandStrategy::treatment_policy:
            if (!ds.meta.ae_collection_after_discontinuation) {
                fail(ErrorCode::strategy_data_mismatch,
                     "these data do not support a treatment-policy estimand: adverse-event "
                     "collection stopped at treatment discontinuation");
            }
            for (SubjectRecord& r : out.records) {
                if (r.event == EventCode::discontinuation) r.event = EventCode::censored;
            }
            plan.competing = CodeSet{EventCode::death};
            plan.censoring = CodeSet{EventCode::censored, EventCode::discontinuation};
            break;
        case EstimandStrategy::while_on_treatment:
            plan.competing = CodeSet{EventCode::death, EventCode::discontinuation};
            plan.censoring = CodeSet{EventCode::censored};
            break;
        case EstimandStrategy::composite:
            for (SubjectRecord& r : out.records) {
                if (r.event == EventCode::death || r.event == EventCode::discontinuation) {
                    r.event = EventCode::adverse_event;
                }
            }
            plan.target =
                CodeSet{EventCode::adverse_event, EventCode::death, EventCode::discontinuation};
            plan.competing = CodeSet{};
            plan.censoring = CodeSet{EventCode::censored};
            break;
        case EstimandStrategy::hypothetical:
            for (SubjectRecord& r : out.records) {
                if (r.event == EventCode::discontinuation) r.event = EventCode::censored;
            }
            plan.competing = CodeSet{EventCode::death};
            plan.censoring = CodeSet{EventCode::censored, EventCode::discontinuation};
            plan.warnings.push_back(kHypotheticalWarning);
            break;
    }
    return {std::move(out), plan};
}

} // namespace aesurv
