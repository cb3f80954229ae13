#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "aesurv/error.hpp"

namespace aesurv {

/// One study's log effect measure (e.g. log hazard ratio) and its SE.
struct StudyEffect {
    std::string label;
    double y = 0.0;
    double se = 0.0;
};

enum class MetaMethod {
    fixed_effect,
    modified_knapp_hartung,
    bayes_half_normal,
};

struct MetaResult {
    MetaMethod method = MetaMethod::fixed_effect;
    double mu_hat = 0.0; // combined log effect (posterior median for Bayes)
    double lo = 0.0;     // 95% interval on the log scale
    double hi = 0.0;
    double tau = 0.0;        // heterogeneity SD estimate / posterior median
    double se = 0.0;         // frequentist SE of mu_hat (NaN for Bayes)
    double prior_scale = 0.0; // half-normal scale (Bayes only)
    std::size_t df = 0;       // t degrees of freedom (mKH only)
    double quad_error = 0.0;  // interval shift under grid halving (Bayes only)

    double width() const { return hi - lo; }
    std::string method_label() const;
    std::string to_json() const;
};

/// Inverse-variance fixed effect with a 95% normal interval.
MetaResult fixed_effect(const std::vector<StudyEffect>& studies);

/// DerSimonian-Laird heterogeneity SD:
///   tau^2 = max(0, (Q - (k-1)) / (sum w - sum w^2 / sum w)),  w_i = 1/se_i^2.
double tau_dl(const std::vector<StudyEffect>& studies);

/// Random-effects combination with the modified Knapp-Hartung adjustment:
/// weights 1/(se_i^2 + tau^2), variance q/sum(w*) with
/// q = max(1, sum w*_i (y_i - mu)^2 / (k-1)), and a t interval on k-1 df.
MetaResult knapp_hartung_modified(const std::vector<StudyEffect>& studies);

/// Bayesian normal-normal hierarchical model: y_i | theta_i ~ N(theta_i,
/// se_i^2), theta_i ~ N(mu, tau^2), flat prior on mu, tau ~ HalfNormal(
/// prior_scale). The tau dimension is integrated by deterministic quadrature
/// (512 points on [0, 8*prior_scale], log-spaced near zero); mu given tau is
/// normal in closed form, so the mu posterior is a normal mixture. Returns
/// the posterior median and the central 95% credible interval.
MetaResult bayes_half_normal(const std::vector<StudyEffect>& studies, double prior_scale);

/// One line of a forest plot: a study or a combined estimate, kept on both
/// the log and the exp scale.
struct ForestRow {
    std::string label;
    double log_effect = 0.0;
    double log_lo = 0.0;
    double log_hi = 0.0;
    double hr = 1.0;
    double hr_lo = 1.0;
    double hr_hi = 1.0;
    bool combined = false;
};

struct ForestTable {
    std::vector<ForestRow> rows;

    std::string to_csv() const; // label,log_effect,log_lo,log_hi,hr,hr_lo,hr_hi,combined
};

/// Per-study rows (95% normal CIs) followed by one row per combined result.
ForestTable forest_data(const std::vector<StudyEffect>& studies,
                        const std::vector<MetaResult>& results);

/// Parses `label,log_effect,se` CSV (header optional).
std::vector<StudyEffect> parse_studies_csv(std::istream& in);
std::vector<StudyEffect> parse_studies_csv_file(const std::string& path);

} // namespace aesurv
