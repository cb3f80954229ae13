#include "aesurv/cox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "aesurv/numeric.hpp"

namespace aesurv {

namespace {

constexpr double kScoreTol = 1e-9;
constexpr double kStepTol = 1e-10;
constexpr int kMaxIterations = 50;

double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }

nlohmann::json json_number(double x) {
    // JSON has no NaN/inf literals; emit null for undefined quantities.
    if (!std::isfinite(x)) return nullptr;
    return x;
}

void require_both_groups(const Dataset& ds) {
    if (ds.records.empty()) fail(ErrorCode::empty_dataset, "dataset contains no records");
    if (ds.group_size(0) == 0) fail(ErrorCode::empty_group, "group 0 has no records");
    if (ds.group_size(1) == 0) fail(ErrorCode::empty_group, "group 1 has no records");
}

/// Per-event-time sufficient statistics of the (possibly weighted) partial
/// likelihood: risk mass r0/r1 by group, d events, s events in group 1.
struct EventBlock {
    double r0 = 0.0;
    double r1 = 0.0;
    double d = 0.0;
    double s = 0.0;
};

double log_likelihood(const std::vector<EventBlock>& blocks, double beta) {
    const double eb = std::exp(beta);
    double ll = 0.0;
    for (const EventBlock& b : blocks) ll += beta * b.s - b.d * std::log(b.r0 + b.r1 * eb);
    return ll;
}

struct ScoreInfo {
    double score = 0.0;
    double info = 0.0;
};

ScoreInfo score_and_information(const std::vector<EventBlock>& blocks, double beta) {
    const double eb = std::exp(beta);
    ScoreInfo out;
    for (const EventBlock& b : blocks) {
        const double p = b.r1 * eb / (b.r0 + b.r1 * eb);
        out.score += b.s - b.d * p;
        out.info += b.d * p * (1.0 - p);
    }
    return out;
}

/// Scalar Newton-Raphson shared by the cause-specific and Fine-Gray fits.
/// Fills beta/iterations/converged/monotone_likelihood, leaves se to callers.
CoxFit solve_partial_likelihood(const std::vector<EventBlock>& blocks) {
    CoxFit fit;
    double total_d = 0.0;
    double total_s = 0.0;
    for (const EventBlock& b : blocks) {
        total_d += b.d;
        total_s += b.s;
    }
    if (total_d == 0.0) fail(ErrorCode::no_target_events, "no events of the target cause");
    if (total_s == 0.0 || total_s == total_d) {
        // Every event in one group: likelihood is monotone, estimate diverges.
        fit.monotone_likelihood = true;
        fit.converged = false;
        fit.beta = nan_value();
        fit.se = nan_value();
        fit.hr = nan_value();
        fit.ci95 = {nan_value(), nan_value()};
        return fit;
    }

    double beta = 0.0;
    double ll = log_likelihood(blocks, beta);
    double last_step = 0.0;
    for (int iter = 1; iter <= kMaxIterations; ++iter) {
        fit.iterations = iter;
        const ScoreInfo si = score_and_information(blocks, beta);
        if (std::abs(si.score) < kScoreTol) {
            fit.converged = true;
            break;
        }
        if (!(si.info > 0.0)) {
            // One group carries no risk mass at any event time: flat or
            // one-sided likelihood, nothing to estimate.
            fit.monotone_likelihood = true;
            fit.converged = false;
            fit.beta = nan_value();
            fit.se = nan_value();
            fit.hr = nan_value();
            fit.ci95 = {nan_value(), nan_value()};
            return fit;
        }
        double step = si.score / si.info;
        double candidate = beta + step;
        double candidate_ll = log_likelihood(blocks, candidate);
        int halvings = 0;
        while (candidate_ll < ll && halvings < 40) {
            step *= 0.5;
            candidate = beta + step;
            candidate_ll = log_likelihood(blocks, candidate);
            ++halvings;
        }
        beta = candidate;
        ll = candidate_ll;
        last_step = step;
        if (std::abs(step) < kStepTol) {
            fit.converged = true;
            break;
        }
    }
    if (!fit.converged) {
        fail(ErrorCode::non_convergence,
             "Newton-Raphson did not converge in " + std::to_string(kMaxIterations) +
                 " iterations (last step " + format_double(last_step) + ")");
    }
    fit.beta = beta;
    return fit;
}

void finish_fit(CoxFit& fit, double se) {
    fit.se = se;
    fit.hr = std::exp(fit.beta);
    fit.ci95 = {std::exp(fit.beta - 1.96 * se), std::exp(fit.beta + 1.96 * se)};
}

/// Kaplan-Meier estimate of the censoring survivor function G(t) = P(C > t),
/// with left-limit queries. Real events act as censorings of C.
class CensoringKm {
  public:
    CensoringKm(const std::vector<double>& times, const std::vector<bool>& is_censoring_event) {
        struct Obs {
            double time;
            bool cens;
        };
        std::vector<Obs> obs;
        obs.reserve(times.size());
        for (std::size_t i = 0; i < times.size(); ++i) obs.push_back({times[i], is_censoring_event[i]});
        std::sort(obs.begin(), obs.end(), [](const Obs& a, const Obs& b) { return a.time < b.time; });
        double g = 1.0;
        std::size_t at_risk = obs.size();
        std::size_t i = 0;
        while (i < obs.size()) {
            const double t = obs[i].time;
            std::size_t d = 0;
            std::size_t block = 0;
            while (i + block < obs.size() && obs[i + block].time == t) {
                if (obs[i + block].cens) ++d;
                ++block;
            }
            if (d > 0) {
                g *= 1.0 - static_cast<double>(d) / static_cast<double>(at_risk);
                times_.push_back(t);
                values_.push_back(g);
            }
            at_risk -= block;
            i += block;
        }
    }

    /// G(t-): product over censoring times strictly before t.
    double at_minus(double t) const {
        auto it = std::lower_bound(times_.begin(), times_.end(), t);
        if (it == times_.begin()) return 1.0;
        return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
    }

  private:
    std::vector<double> times_;
    std::vector<double> values_;
};

} // namespace

std::string CoxFit::cause_label() const {
    std::string label = target.to_string();
    if (subdistribution) return "subdistribution" + label;
    return "cause_specific" + label;
}

std::string CoxFit::to_json() const {
    nlohmann::json j;
    j["beta"] = json_number(beta);
    j["se"] = json_number(se);
    j["hr"] = json_number(hr);
    j["ci95"] = {json_number(ci95.lo), json_number(ci95.hi)};
    j["iterations"] = iterations;
    j["converged"] = converged;
    j["monotone_likelihood"] = monotone_likelihood;
    j["cause"] = cause_label();
    return j.dump(2);
}

std::string RateRatio::to_json() const {
    nlohmann::json j;
    j["ratio"] = json_number(ratio);
    j["ci95"] = ci_defined ? nlohmann::json{json_number(ci95.lo), json_number(ci95.hi)}
                           : nlohmann::json{nullptr, nullptr};
    j["ci_defined"] = ci_defined;
    j["rate1"] = group1.rate;
    j["rate0"] = group0.rate;
    j["events1"] = group1.events;
    j["events0"] = group0.events;
    j["person_time1"] = group1.person_time;
    j["person_time0"] = group0.person_time;
    return j.dump(2);
}

RateRatio rate_ratio(const Dataset& ds, EventCode target) {
    require_both_groups(ds);
    RateRatio out;
    out.group0 = incidence_rate(ds, 0, target, false);
    out.group1 = incidence_rate(ds, 1, target, false);
    out.ratio = out.group1.rate / out.group0.rate; // inf when reference has no events
    if (out.group0.events > 0 && out.group1.events > 0) {
        const double log_se = std::sqrt(1.0 / static_cast<double>(out.group1.events) +
                                        1.0 / static_cast<double>(out.group0.events));
        const double log_ratio = std::log(out.ratio);
        out.ci95 = {std::exp(log_ratio - 1.96 * log_se), std::exp(log_ratio + 1.96 * log_se)};
        out.ci_defined = true;
    } else {
        out.ci95 = {nan_value(), nan_value()};
        out.ci_defined = false;
    }
    return out;
}

CoxFit cox_cause_specific(const Dataset& ds, CodeSet target) {
    if (target.empty()) fail(ErrorCode::invalid_argument, "empty target code set");
    require_both_groups(ds);

    // Aggregate the standard (unweighted) risk sets per distinct event time.
    // Competing events and end of follow-up both just censor here.
    struct Obs {
        double time;
        int group;
        bool event;
    };
    std::vector<Obs> obs;
    obs.reserve(ds.records.size());
    for (const SubjectRecord& r : ds.records) {
        obs.push_back({r.time, r.group, target.contains(r.event)});
    }
    std::sort(obs.begin(), obs.end(), [](const Obs& a, const Obs& b) { return a.time < b.time; });

    std::vector<EventBlock> blocks;
    std::size_t at_risk0 = ds.group_size(0);
    std::size_t at_risk1 = ds.group_size(1);
    std::size_t i = 0;
    while (i < obs.size()) {
        const double t = obs[i].time;
        EventBlock b;
        b.r0 = static_cast<double>(at_risk0);
        b.r1 = static_cast<double>(at_risk1);
        std::size_t leave0 = 0;
        std::size_t leave1 = 0;
        while (i < obs.size() && obs[i].time == t) {
            if (obs[i].event) {
                b.d += 1.0;
                if (obs[i].group == 1) b.s += 1.0;
            }
            (obs[i].group == 1 ? leave1 : leave0) += 1;
            ++i;
        }
        at_risk0 -= leave0;
        at_risk1 -= leave1;
        if (b.d > 0.0) blocks.push_back(b);
    }

    CoxFit fit = solve_partial_likelihood(blocks);
    fit.target = target;
    if (!fit.monotone_likelihood) {
        const ScoreInfo si = score_and_information(blocks, fit.beta);
        finish_fit(fit, 1.0 / std::sqrt(si.info));
    }
    return fit;
}

CoxFit cox_cause_specific(const Dataset& ds, EventCode target) {
    return cox_cause_specific(ds, CodeSet{target});
}

CauseSpecificFits cox_both_causes(const Dataset& ds, CodeSet competing) {
    auto attempt = [&](CodeSet target) {
        FitOutcome out;
        try {
            out.fit = cox_cause_specific(ds, target);
        } catch (const Error& e) {
            out.error = e.code();
            out.error_message = e.what();
        }
        return out;
    };
    CauseSpecificFits fits;
    fits.ae = attempt(CodeSet{EventCode::adverse_event});
    if (competing.empty()) {
        fits.competing.error = ErrorCode::no_target_events;
        fits.competing.error_message = "no competing codes designated";
    } else {
        fits.competing = attempt(competing);
    }
    return fits;
}

CoxFit fine_gray(const Dataset& ds, EventCode target, FineGrayOptions options) {
    require_both_groups(ds);
    CodeSet competing;
    if (options.competing) {
        competing = *options.competing;
    } else {
        for (EventCode c : kAllEventCodes) {
            if (c != EventCode::censored && c != target) competing.insert(c);
        }
    }
    if (competing.contains(target)) {
        fail(ErrorCode::target_in_competing_set, "target cause listed as competing");
    }

    const std::size_t n = ds.records.size();
    // status: 1 target event, 2 competing event, 0 censoring (including any
    // code in neither set, which censors just as in the cause-specific fit).
    std::vector<double> time(n);
    std::vector<int> group(n);
    std::vector<int> status(n);
    std::vector<bool> is_cens(n);
    for (std::size_t j = 0; j < n; ++j) {
        const SubjectRecord& r = ds.records[j];
        time[j] = r.time;
        group[j] = r.group;
        status[j] = r.event == target ? 1 : (competing.contains(r.event) ? 2 : 0);
        is_cens[j] = status[j] == 0;
    }

    // Censoring-distribution KM, pooled or per group.
    std::vector<const CensoringKm*> g_of(2, nullptr);
    std::optional<CensoringKm> pooled;
    std::optional<CensoringKm> per_group[2];
    if (options.per_group_censoring_weights) {
        for (int z = 0; z < 2; ++z) {
            std::vector<double> t_z;
            std::vector<bool> c_z;
            for (std::size_t j = 0; j < n; ++j) {
                if (group[j] != z) continue;
                t_z.push_back(time[j]);
                c_z.push_back(is_cens[j]);
            }
            per_group[z].emplace(t_z, c_z);
            g_of[z] = &*per_group[z];
        }
    } else {
        pooled.emplace(time, is_cens);
        g_of[0] = g_of[1] = &*pooled;
    }

    // Distinct target event times with d (count) and s (count in group 1).
    std::vector<std::size_t> order(n);
    for (std::size_t j = 0; j < n; ++j) order[j] = j;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return time[a] < time[b]; });

    std::vector<double> event_times;
    std::vector<double> d_k;
    std::vector<double> s_k;
    for (std::size_t idx : order) {
        if (status[idx] != 1) continue;
        if (event_times.empty() || event_times.back() != time[idx]) {
            event_times.push_back(time[idx]);
            d_k.push_back(0.0);
            s_k.push_back(0.0);
        }
        d_k.back() += 1.0;
        if (group[idx] == 1) s_k.back() += 1.0;
    }
    if (event_times.empty()) fail(ErrorCode::no_target_events, "no events of the target cause");
    const std::size_t n_times = event_times.size();

    // Weighted risk mass per group at each event time t_k:
    //   R_z(t_k) = #{j in z : v_j >= t_k}
    //            + G_z(t_k-) * sum_{j in z, competing, v_j < t_k} 1/G_z(v_j-).
    // Both pieces come from one sweep over subjects sorted by time.
    std::vector<EventBlock> blocks(n_times);
    std::vector<double> g_minus_at_event[2];
    for (int z = 0; z < 2; ++z) {
        g_minus_at_event[z].resize(n_times);
        for (std::size_t k = 0; k < n_times; ++k) {
            g_minus_at_event[z][k] = g_of[z]->at_minus(event_times[k]);
        }
    }
    {
        std::vector<double> still_at_risk = {0.0, 0.0};
        for (std::size_t j = 0; j < n; ++j) still_at_risk[static_cast<std::size_t>(group[j])] += 1.0;
        std::vector<double> competing_mass = {0.0, 0.0}; // sum of 1/G_z(v_j-)
        std::size_t next = 0;                            // subjects with v_j < t_k processed so far
        for (std::size_t k = 0; k < n_times; ++k) {
            const double t = event_times[k];
            while (next < n && time[order[next]] < t) {
                const std::size_t j = order[next];
                const auto z = static_cast<std::size_t>(group[j]);
                still_at_risk[z] -= 1.0;
                if (status[j] == 2) {
                    const double g = g_of[group[j]]->at_minus(time[j]);
                    competing_mass[z] += 1.0 / g;
                }
                ++next;
            }
            blocks[k].r0 = still_at_risk[0] + g_minus_at_event[0][k] * competing_mass[0];
            blocks[k].r1 = still_at_risk[1] + g_minus_at_event[1][k] * competing_mass[1];
            blocks[k].d = d_k[k];
            blocks[k].s = s_k[k];
        }
    }

    CoxFit fit = solve_partial_likelihood(blocks);
    fit.target = CodeSet{target};
    fit.subdistribution = true;
    if (fit.monotone_likelihood) return fit;

    // Robust sandwich SE: sqrt(sum_j U_j^2) / information, with per-subject
    // score residuals
    //   U_j = 1{target}(z_j - p_k(j))
    //       - e^{beta z_j} [ A_z(v_j) + 1{competing} B_z(v_j)/G_z(v_j-) ]
    // where h_k = d_k/D_k, A_z(t) = sum_{t_k <= t} (z - p_k) h_k and
    // B_z(t) = sum_{t_k > t} G_z(t_k-)(z - p_k) h_k. The estimated censoring
    // weights are treated as fixed.
    const double eb = std::exp(fit.beta);
    std::vector<double> p(n_times);
    std::vector<double> h(n_times);
    for (std::size_t k = 0; k < n_times; ++k) {
        const double denom = blocks[k].r0 + blocks[k].r1 * eb;
        p[k] = blocks[k].r1 * eb / denom;
        h[k] = blocks[k].d / denom;
    }
    // prefix[z][k]: A_z over event times [0..k]; suffix[z][k]: B_z over (k..end).
    std::vector<double> prefix[2];
    std::vector<double> suffix[2];
    for (int z = 0; z < 2; ++z) {
        prefix[z].assign(n_times, 0.0);
        suffix[z].assign(n_times + 1, 0.0);
        double acc = 0.0;
        for (std::size_t k = 0; k < n_times; ++k) {
            acc += (static_cast<double>(z) - p[k]) * h[k];
            prefix[z][k] = acc;
        }
        for (std::size_t k = n_times; k-- > 0;) {
            suffix[z][k] =
                suffix[z][k + 1] + g_minus_at_event[z][k] * (static_cast<double>(z) - p[k]) * h[k];
        }
    }
    auto last_event_index_leq = [&](double t) -> std::ptrdiff_t {
        auto it = std::upper_bound(event_times.begin(), event_times.end(), t);
        return (it - event_times.begin()) - 1;
    };
    double sum_u2 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const int z = group[j];
        const std::ptrdiff_t k_le = last_event_index_leq(time[j]);
        double u = 0.0;
        if (status[j] == 1) {
            // The subject's own event time is always an event time.
            const std::ptrdiff_t k_own = k_le;
            u += static_cast<double>(z) - p[static_cast<std::size_t>(k_own)];
        }
        double risk_term = k_le >= 0 ? prefix[z][static_cast<std::size_t>(k_le)] : 0.0;
        if (status[j] == 2) {
            const double g_v = g_of[z]->at_minus(time[j]);
            risk_term += suffix[z][static_cast<std::size_t>(k_le + 1)] / g_v;
        }
        u -= (z == 1 ? eb : 1.0) * risk_term;
        sum_u2 += u * u;
    }
    const ScoreInfo si = score_and_information(blocks, fit.beta);
    finish_fit(fit, std::sqrt(sum_u2) / si.info);
    return fit;
}

} // namespace aesurv
