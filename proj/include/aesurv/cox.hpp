#pragma once

#include <optional>
#include <string>

#include "aesurv/data.hpp"
#include "aesurv/estimators.hpp"

namespace aesurv {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Result of a partial-likelihood fit of the single binary group covariate.
struct CoxFit {
    double beta = 0.0;
    double se = 0.0;
    double hr = 1.0;
    Interval ci95;       // exp(beta +- 1.96 se)
    int iterations = 0;
    bool converged = false;
    /// All events fell in one group: the likelihood is monotone in beta and
    /// the estimate diverges. beta/se/hr are NaN and converged is false.
    bool monotone_likelihood = false;
    CodeSet target;              // which codes counted as the event
    bool subdistribution = false;

    std::string cause_label() const;
    std::string to_json() const;
};

/// Ratio of group-1 to group-0 incidence rates with log-normal CI.
struct RateRatio {
    double ratio = 0.0;
    Interval ci95;
    /// False when either arm has zero events; no continuity correction is
    /// applied, the interval is simply undefined.
    bool ci_defined = false;
    IncidenceRate group1; // numerator
    IncidenceRate group0; // denominator

    std::string to_json() const;
};

/// rate1/rate0 for the target cause; CI exp(log ratio +- 1.96 sqrt(1/a1+1/a0)).
RateRatio rate_ratio(const Dataset& ds, EventCode target = EventCode::adverse_event);

/// Cause-specific Cox fit: codes in `target` are events, every other code
/// censors. Newton-Raphson on the Breslow-tie partial likelihood starting at
/// beta=0 (|score| < 1e-9 or |step| < 1e-10, max 50 iterations, step-halving
/// on likelihood decrease). SE from the observed information.
CoxFit cox_cause_specific(const Dataset& ds, CodeSet target);
CoxFit cox_cause_specific(const Dataset& ds, EventCode target);

/// One cause's fit, or the reason it could not be produced.
struct FitOutcome {
    std::optional<CoxFit> fit;
    std::optional<ErrorCode> error;
    std::string error_message;

    bool ok() const { return fit.has_value(); }
};

struct CauseSpecificFits {
    FitOutcome ae;        // target = adverse event, competing codes censor
    FitOutcome competing; // target = combined competing codes, AE censors
};

/// Fits both cause-specific hazards; failures propagate per cause.
CauseSpecificFits cox_both_causes(const Dataset& ds, CodeSet competing);

struct FineGrayOptions {
    /// Codes kept in the risk set after their event. Unset means "every real
    /// event code except the target"; an explicitly empty set means no
    /// competing events (the fit then coincides with cox_cause_specific).
    std::optional<CodeSet> competing;
    /// The censoring distribution for the inverse-probability weights is
    /// estimated pooled across groups by default; per-group is available.
    bool per_group_censoring_weights = false;
};

/// Fine-Gray subdistribution-hazard fit: subjects with competing events stay
/// in the risk set after their event, down-weighted by Kaplan-Meier censoring
/// weights G(t-)/G(v-). Returns the subdistribution HR with a robust
/// (sandwich) SE treating the estimated weights as fixed.
CoxFit fine_gray(const Dataset& ds, EventCode target = EventCode::adverse_event,
                 FineGrayOptions options = {});

} // namespace aesurv
