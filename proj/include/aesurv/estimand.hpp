#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aesurv/data.hpp"

namespace aesurv {

/// How intercurrent events (death, treatment discontinuation) enter the
/// analysis. Each strategy is a deterministic recoding of the raw dataset.
enum class EstimandStrategy {
    treatment_policy,
    while_on_treatment,
    composite,
    hypothetical,
};

const char* strategy_name(EstimandStrategy s);

/// Accepts the CLI spellings: policy, on-treatment, composite, hypothetical
/// (plus the underscore variants), case-insensitively.
std::optional<EstimandStrategy> parse_strategy(std::string_view token);

/// What the recoded dataset means to the estimators: which codes are the
/// target event, which compete, and which merely censor. The three sets are
/// disjoint and together with the target cover all codes.
struct AnalysisPlan {
    EstimandStrategy strategy = EstimandStrategy::while_on_treatment;
    CodeSet target;
    CodeSet competing;
    CodeSet censoring;
    std::vector<std::string> warnings;

    std::string to_json() const;
};

/// Recodes event codes only; times, groups, ordering and record count are
/// untouched. Applying the same strategy twice is a no-op the second time.
///
///  - treatment_policy: discontinuation becomes censoring (only valid when
///    the dataset collected AEs after discontinuation; otherwise
///    StrategyDataMismatch), death competes.
///  - while_on_treatment: no recoding; death and discontinuation compete.
///  - composite: AE, death and discontinuation merge into one composite
///    event; nothing competes, so 1-KM is a valid probability estimator.
///  - hypothetical: discontinuation becomes censoring, death competes; the
///    plan carries a mandatory warning because assuming discontinuation
///    censors independently is untestable and rather strong.
std::pair<Dataset, AnalysisPlan> apply_strategy(const Dataset& ds, EstimandStrategy s);

} // namespace aesurv
