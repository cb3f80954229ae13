#pragma once

#include <string>
#include <vector>

#include "aesurv/data.hpp"

namespace aesurv {

/// Aggregated event counts at one distinct observed time u. Risk sets are
/// left-continuous: n_at_risk counts subjects with observed time >= u ("just
/// prior to u"), so censorings at u are still at risk at u.
struct RiskSetPoint {
    double time = 0.0;
    std::size_t n_at_risk = 0;
    std::size_t d_ae = 0;   // target events at this time (a_u)
    std::size_t d_ce = 0;   // competing events at this time
    std::size_t d_cens = 0; // everything else ending at this time
};

enum class CurveKind {
    survival,             // value(0)=1, nonincreasing
    cumulative_hazard,    // value(0)=0, nondecreasing, unbounded
    cumulative_incidence, // value(0)=0, nondecreasing, <=1
};

const char* curve_kind_name(CurveKind kind);

struct CurvePoint {
    double time = 0.0;
    double value = 0.0;
    double variance = 0.0;
};

struct CurveEvaluation {
    double value = 0.0;
    double variance = 0.0;
    bool extrapolated = false; // query time beyond the last observed time
};

/// Right-continuous step function with pointwise variance. Points sit at the
/// times where the value changes; before the first point the curve is at its
/// kind-specific initial value (1 for survival, 0 otherwise).
struct CurveEstimate {
    CurveKind kind = CurveKind::survival;
    std::string label;
    std::vector<CurvePoint> points;
    double max_observed_time = 0.0; // largest follow-up time in the data

    double initial_value() const { return kind == CurveKind::survival ? 1.0 : 0.0; }
    CurveEvaluation at(double t) const;
    double value_at(double t) const { return at(t).value; }
    std::string to_csv() const; // header: time,value,variance
};

/// Distinct-time event/censoring counts for one group. `target` and
/// `competing` must be disjoint; codes in neither set count as censorings.
std::vector<RiskSetPoint> risk_table(const Dataset& ds, int group, CodeSet target,
                                     CodeSet competing);

/// Subjects with a target event at any time, divided by group size. A
/// proportion despite the traditional name.
double crude_rate(const Dataset& ds, int group,
                  EventCode target = EventCode::adverse_event);

/// Subjects with a target event by time t, divided by group size.
double incidence_proportion(const Dataset& ds, int group, double t,
                            EventCode target = EventCode::adverse_event);

/// Step curve of incidence_proportion over the target event times, with
/// binomial variance p(1-p)/n.
CurveEstimate incidence_proportion_curve(const Dataset& ds, int group,
                                         EventCode target = EventCode::adverse_event);

/// Product-limit survival treating every code in event_set as an event and
/// everything else as censoring; Greenwood pointwise variance.
CurveEstimate kaplan_meier(const Dataset& ds, int group, CodeSet event_set);

/// Cumulative cause-specific hazard: sum of a_u/n_u over target events, with
/// all other codes contributing follow-up only. Variance sum of a_u/n_u^2.
CurveEstimate nelson_aalen(const Dataset& ds, int group,
                           EventCode target = EventCode::adverse_event);

/// Cumulative incidence of the target cause in the presence of the competing
/// causes: sum of KM(u-) * a_u/n_u where KM is taken over target+competing
/// events. Pointwise variance by the standard delta-method (Aalen-type)
/// estimator for competing-risks cumulative incidence.
CurveEstimate aalen_johansen(const Dataset& ds, int group, EventCode target,
                             CodeSet competing);

/// Constant cause-specific hazards for one arm (per unit time).
struct HazardPair {
    double alpha_ae = 0.0;
    double alpha_ce = 0.0;
    double total() const { return alpha_ae + alpha_ce; }
};

/// Events per person-time; a hazard estimate, not a probability (rate is not
/// bounded by 1, and rescaling the time unit rescales it).
struct IncidenceRate {
    std::size_t events = 0;
    double person_time = 0.0;
    double rate = 0.0;
    /// Poisson log-scale 95% CI exp(log rate +- 1.96/sqrt(events));
    /// undefined (ci_defined=false) when events == 0.
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    bool ci_defined = false;
};

/// Numerator: target events (exposure-adjusted mode counts only events with
/// time <= exposure_time, i.e. events that happened while exposed; events
/// after exposure ended are excluded — a convention this library fixes since
/// the definition is otherwise ambiguous). Denominator: every subject's
/// follow-up time (or exposure time), regardless of event code.
IncidenceRate incidence_rate(const Dataset& ds, int group, EventCode target,
                             bool exposure_adjusted = false);

/// Closed-form cumulative incidence under constant hazards:
///   CIF_AE(t) = alpha_ae/(alpha_ae+alpha_ce) * (1 - exp(-(alpha_ae+alpha_ce) t)).
/// Nondecreasing in t, bounded by alpha_ae/(alpha_ae+alpha_ce).
double parametric_cif(HazardPair h, double t);

/// parametric_cif evaluated over a strictly increasing grid; variances zero.
CurveEstimate parametric_cif_curve(HazardPair h, const std::vector<double>& grid);

} // namespace aesurv
