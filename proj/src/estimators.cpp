#include "aesurv/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "aesurv/numeric.hpp"

namespace aesurv {

namespace {

void require_group_nonempty(const Dataset& ds, int group) {
    if (ds.records.empty()) fail(ErrorCode::empty_dataset, "dataset contains no records");
    if (ds.group_size(group) == 0) {
        fail(ErrorCode::empty_group, "group " + std::to_string(group) + " has no records");
    }
}

} // namespace

const char* curve_kind_name(CurveKind kind) {
    switch (kind) {
        case CurveKind::survival: return "survival";
        case CurveKind::cumulative_hazard: return "cumulative_hazard";
        case CurveKind::cumulative_incidence: return "cumulative_incidence";
    }
    return "unknown";
}

CurveEvaluation CurveEstimate::at(double t) const {
    CurveEvaluation out;
    out.extrapolated = t > max_observed_time;
    // Right-continuous step lookup: last point with time <= t.
    auto it = std::upper_bound(points.begin(), points.end(), t,
                               [](double q, const CurvePoint& p) { return q < p.time; });
    if (it == points.begin()) {
        out.value = initial_value();
        out.variance = 0.0;
    } else {
        const CurvePoint& p = *(it - 1);
        out.value = p.value;
        out.variance = p.variance;
    }
    return out;
}

std::string CurveEstimate::to_csv() const {
    std::string out = "time,value,variance\n";
    for (const CurvePoint& p : points) {
        out += format_double(p.time);
        out += ',';
        out += format_double(p.value);
        out += ',';
        out += format_double(p.variance);
        out += '\n';
    }
    return out;
}

std::vector<RiskSetPoint> risk_table(const Dataset& ds, int group, CodeSet target,
                                     CodeSet competing) {
    if (target.intersects(competing)) {
        fail(ErrorCode::target_in_competing_set,
             "target codes " + target.to_string() + " overlap competing codes " +
                 competing.to_string());
    }
    require_group_nonempty(ds, group);

    struct TimedCode {
        double time;
        EventCode event;
    };
    std::vector<TimedCode> obs;
    obs.reserve(ds.records.size());
    for (const SubjectRecord& r : ds.records) {
        if (r.group == group) obs.push_back({r.time, r.event});
    }
    std::sort(obs.begin(), obs.end(),
              [](const TimedCode& a, const TimedCode& b) { return a.time < b.time; });

    std::vector<RiskSetPoint> table;
    std::size_t at_risk = obs.size();
    std::size_t i = 0;
    while (i < obs.size()) {
        RiskSetPoint pt;
        pt.time = obs[i].time;
        pt.n_at_risk = at_risk;
        std::size_t j = i;
        while (j < obs.size() && obs[j].time == pt.time) {
            if (target.contains(obs[j].event)) {
                ++pt.d_ae;
            } else if (competing.contains(obs[j].event)) {
                ++pt.d_ce;
            } else {
                ++pt.d_cens;
            }
            ++j;
        }
        at_risk -= j - i;
        i = j;
        table.push_back(pt);
    }
    return table;
}

double crude_rate(const Dataset& ds, int group, EventCode target) {
    require_group_nonempty(ds, group);
    const double n = static_cast<double>(ds.group_size(group));
    return static_cast<double>(ds.count_events(group, CodeSet{target})) / n;
}

double incidence_proportion(const Dataset& ds, int group, double t, EventCode target) {
    if (!(t > 0.0)) fail(ErrorCode::invalid_argument, "incidence_proportion requires t > 0");
    require_group_nonempty(ds, group);
    std::size_t hits = 0;
    std::size_t n = 0;
    for (const SubjectRecord& r : ds.records) {
        if (r.group != group) continue;
        ++n;
        if (r.event == target && r.time <= t) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(n);
}

CurveEstimate incidence_proportion_curve(const Dataset& ds, int group, EventCode target) {
    require_group_nonempty(ds, group);
    CurveEstimate curve;
    curve.kind = CurveKind::cumulative_incidence;
    curve.label = std::string("incidence_proportion_") + event_name(target);
    const double n = static_cast<double>(ds.group_size(group));
    auto table = risk_table(ds, group, CodeSet{target}, CodeSet{});
    std::size_t cum = 0;
    for (const RiskSetPoint& pt : table) {
        curve.max_observed_time = pt.time;
        if (pt.d_ae == 0) continue;
        cum += pt.d_ae;
        const double p = static_cast<double>(cum) / n;
        curve.points.push_back({pt.time, p, p * (1.0 - p) / n});
    }
    return curve;
}

CurveEstimate kaplan_meier(const Dataset& ds, int group, CodeSet event_set) {
    if (event_set.empty()) {
        fail(ErrorCode::invalid_argument, "kaplan_meier requires a nonempty event set");
    }
    CurveEstimate curve;
    curve.kind = CurveKind::survival;
    curve.label = "kaplan_meier_" + event_set.to_string();
    auto table = risk_table(ds, group, event_set, CodeSet{});
    double survival = 1.0;
    KahanSum greenwood; // sum of d / (n (n - d))
    for (const RiskSetPoint& pt : table) {
        curve.max_observed_time = pt.time;
        if (pt.d_ae == 0) continue;
        const double n = static_cast<double>(pt.n_at_risk);
        const double d = static_cast<double>(pt.d_ae);
        survival *= 1.0 - d / n;
        if (pt.n_at_risk > pt.d_ae) greenwood.add(d / (n * (n - d)));
        const double variance = survival > 0.0 ? survival * survival * greenwood.value() : 0.0;
        curve.points.push_back({pt.time, survival, variance});
    }
    return curve;
}

CurveEstimate nelson_aalen(const Dataset& ds, int group, EventCode target) {
    CurveEstimate curve;
    curve.kind = CurveKind::cumulative_hazard;
    curve.label = std::string("nelson_aalen_") + event_name(target);
    // Non-target events only shape the risk sets (they act as censorings for
    // the cause-specific hazard), so the target/competing split is irrelevant
    // here beyond excluding the target itself.
    auto table = risk_table(ds, group, CodeSet{target}, CodeSet{});
    KahanSum hazard;
    KahanSum variance;
    for (const RiskSetPoint& pt : table) {
        curve.max_observed_time = pt.time;
        if (pt.d_ae == 0) continue;
        const double n = static_cast<double>(pt.n_at_risk);
        const double d = static_cast<double>(pt.d_ae);
        hazard.add(d / n);
        variance.add(d / (n * n));
        curve.points.push_back({pt.time, hazard.value(), variance.value()});
    }
    return curve;
}

CurveEstimate aalen_johansen(const Dataset& ds, int group, EventCode target, CodeSet competing) {
    CurveEstimate curve;
    curve.kind = CurveKind::cumulative_incidence;
    curve.label = std::string("aalen_johansen_") + event_name(target);
    auto table = risk_table(ds, group, CodeSet{target}, competing);

    // One pass: CIF(t) = sum KM(u-) a_u / n_u with KM over target+competing
    // events. The pointwise variance is the delta-method estimator
    //   V(t) = sum_j (CIF(t)-CIF(t_j))^2 d_j/(n_j(n_j-d_j))
    //        + sum_j S(t_j-)^2 (n_j-a_j)/n_j * a_j/n_j^2
    //        - 2 sum_j (CIF(t)-CIF(t_j)) S(t_j-) a_j/n_j^2
    // over all event times t_j <= t (d_j = all events, a_j = target events).
    // Expanding (CIF(t)-CIF(t_j)) makes every term a running sum, so the
    // whole curve costs O(K).
    KahanSum cif_sum;
    double survival_before = 1.0; // KM(u-)
    KahanSum sum_c;               // d/(n(n-d))
    KahanSum sum_cif_c;           // CIF_j * c_j
    KahanSum sum_cif2_c;          // CIF_j^2 * c_j
    KahanSum sum_g;               // S(t_j-)^2 (n-a)/n * a/n^2
    KahanSum sum_e;               // S(t_j-) a/n^2
    KahanSum sum_cif_e;           // CIF_j * e_j
    for (const RiskSetPoint& pt : table) {
        curve.max_observed_time = pt.time;
        const std::size_t d_all = pt.d_ae + pt.d_ce;
        if (d_all == 0) continue;
        const double n = static_cast<double>(pt.n_at_risk);
        const double d = static_cast<double>(d_all);
        const double a = static_cast<double>(pt.d_ae);
        cif_sum.add(survival_before * a / n);
        const double cif_here = cif_sum.value();
        if (pt.n_at_risk > d_all) {
            const double c = d / (n * (n - d));
            sum_c.add(c);
            sum_cif_c.add(cif_here * c);
            sum_cif2_c.add(cif_here * cif_here * c);
        }
        if (pt.d_ae > 0) {
            const double e = survival_before * a / (n * n);
            sum_g.add(survival_before * survival_before * ((n - a) / n) * (a / (n * n)));
            sum_e.add(e);
            sum_cif_e.add(cif_here * e);
        }
        survival_before *= 1.0 - d / n;
        if (pt.d_ae > 0) {
            const double variance = cif_here * cif_here * sum_c.value() -
                                    2.0 * cif_here * sum_cif_c.value() + sum_cif2_c.value() +
                                    sum_g.value() - 2.0 * cif_here * sum_e.value() +
                                    2.0 * sum_cif_e.value();
            curve.points.push_back({pt.time, cif_here, std::max(variance, 0.0)});
        }
    }
    return curve;
}

IncidenceRate incidence_rate(const Dataset& ds, int group, EventCode target,
                             bool exposure_adjusted) {
    require_group_nonempty(ds, group);
    IncidenceRate out;
    KahanSum person_time;
    for (const SubjectRecord& r : ds.records) {
        if (r.group != group) continue;
        const double follow_up = exposure_adjusted ? r.effective_exposure() : r.time;
        person_time.add(follow_up);
        if (r.event == target && (!exposure_adjusted || r.time <= r.effective_exposure())) {
            ++out.events;
        }
    }
    out.person_time = person_time.value();
    if (!(out.person_time > 0.0)) {
        fail(ErrorCode::zero_person_time,
             "group " + std::to_string(group) + " has zero person-time");
    }
    out.rate = static_cast<double>(out.events) / out.person_time;
    if (out.events > 0) {
        const double half_width = 1.96 / std::sqrt(static_cast<double>(out.events));
        out.ci_lo = out.rate * std::exp(-half_width);
        out.ci_hi = out.rate * std::exp(half_width);
        out.ci_defined = true;
    }
    return out;
}

double parametric_cif(HazardPair h, double t) {
    if (h.alpha_ae < 0.0 || h.alpha_ce < 0.0) {
        fail(ErrorCode::invalid_argument, "hazards must be nonnegative");
    }
    if (h.total() == 0.0) {
        fail(ErrorCode::both_hazards_zero, "both cause-specific hazards are zero");
    }
    if (t < 0.0) fail(ErrorCode::invalid_argument, "parametric_cif requires t >= 0");
    // -expm1 keeps precision for small total*t where 1-exp(..) cancels.
    return (h.alpha_ae / h.total()) * (-std::expm1(-h.total() * t));
}

CurveEstimate parametric_cif_curve(HazardPair h, const std::vector<double>& grid) {
    if (grid.empty()) fail(ErrorCode::invalid_argument, "empty evaluation grid");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] < 0.0 || (i > 0 && grid[i] <= grid[i - 1])) {
            fail(ErrorCode::invalid_argument, "grid must be strictly increasing and nonnegative");
        }
    }
    CurveEstimate curve;
    curve.kind = CurveKind::cumulative_incidence;
    curve.label = "parametric_cif";
    curve.max_observed_time = grid.back();
    for (double t : grid) curve.points.push_back({t, parametric_cif(h, t), 0.0});
    return curve;
}

} // namespace aesurv
