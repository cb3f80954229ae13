#include "aesurv/meta.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

#include "aesurv/numeric.hpp"

namespace aesurv {

namespace {

constexpr double kZ95 = 1.96;

void check_studies(const std::vector<StudyEffect>& studies, std::size_t min_count) {
    if (studies.empty()) fail(ErrorCode::empty_input, "no studies supplied");
    if (studies.size() < min_count) {
        fail(ErrorCode::fewer_than_two_studies,
             "method needs at least " + std::to_string(min_count) + " studies, got " +
                 std::to_string(studies.size()));
    }
    for (const StudyEffect& s : studies) {
        if (!(s.se > 0.0) || !std::isfinite(s.se) || !std::isfinite(s.y)) {
            fail(ErrorCode::invalid_argument,
                 "study '" + s.label + "' needs finite y and se > 0");
        }
    }
}

struct Pooled {
    double mu = 0.0;     // inverse-variance weighted mean
    double sum_w = 0.0;  // sum of weights
    double q = 0.0;      // sum of w_i (y_i - mu)^2
    double sum_w2 = 0.0; // sum of squared weights
    double sum_log_w = 0.0;
};

/// Inverse-variance pooling with per-study variance se_i^2 + tau^2.
Pooled pool(const std::vector<StudyEffect>& studies, double tau2) {
    Pooled p;
    double sum_wy = 0.0;
    for (const StudyEffect& s : studies) {
        const double w = 1.0 / (s.se * s.se + tau2);
        p.sum_w += w;
        p.sum_w2 += w * w;
        p.sum_log_w += std::log(w);
        sum_wy += w * s.y;
    }
    p.mu = sum_wy / p.sum_w;
    for (const StudyEffect& s : studies) {
        const double w = 1.0 / (s.se * s.se + tau2);
        const double dev = s.y - p.mu;
        p.q += w * dev * dev;
    }
    return p;
}

struct TauGrid {
    std::vector<double> tau;
    std::vector<double> lambda; // normalized posterior mass per node
    std::vector<double> mu;     // conditional posterior mean of mu
    std::vector<double> sd;     // conditional posterior SD of mu
};

/// Posterior over the tau grid; the mu posterior is the lambda-mixture of
/// N(mu_j, sd_j^2).
TauGrid posterior_grid(const std::vector<StudyEffect>& studies, double prior_scale,
                       const std::vector<double>& nodes) {
    TauGrid g;
    g.tau = nodes;
    const std::size_t n = nodes.size();
    g.mu.resize(n);
    g.sd.resize(n);
    std::vector<double> log_w(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double tau = nodes[j];
        const Pooled p = pool(studies, tau * tau);
        g.mu[j] = p.mu;
        g.sd[j] = std::sqrt(1.0 / p.sum_w);
        log_w[j] = -tau * tau / (2.0 * prior_scale * prior_scale) + 0.5 * p.sum_log_w -
                   0.5 * std::log(p.sum_w) - 0.5 * p.q;
    }
    double max_lw = -std::numeric_limits<double>::infinity();
    for (double lw : log_w) max_lw = std::max(max_lw, lw);
    if (!std::isfinite(max_lw)) {
        fail(ErrorCode::quadrature_underflow, "all quadrature weights vanished");
    }
    g.lambda.resize(n);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        // Trapezoid widths on the nonuniform grid; half-width at endpoints.
        const double left = j == 0 ? nodes[0] : nodes[j - 1];
        const double right = j + 1 == n ? nodes[n - 1] : nodes[j + 1];
        const double width = 0.5 * (right - left);
        g.lambda[j] = std::exp(log_w[j] - max_lw) * width;
        total += g.lambda[j];
    }
    if (!(total > 0.0)) {
        fail(ErrorCode::quadrature_underflow, "all quadrature weights vanished");
    }
    for (double& l : g.lambda) l /= total;
    return g;
}

double mixture_cdf(const TauGrid& g, double m) {
    double acc = 0.0;
    for (std::size_t j = 0; j < g.tau.size(); ++j) {
        acc += g.lambda[j] * norm_cdf((m - g.mu[j]) / g.sd[j]);
    }
    return acc;
}

double mixture_quantile(const TauGrid& g, double prob) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < g.tau.size(); ++j) {
        lo = std::min(lo, g.mu[j] - 12.0 * g.sd[j]);
        hi = std::max(hi, g.mu[j] + 12.0 * g.sd[j]);
    }
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        (mixture_cdf(g, mid) < prob ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double tau_posterior_median(const TauGrid& g) {
    double acc = 0.0;
    for (std::size_t j = 0; j < g.tau.size(); ++j) {
        const double next = acc + g.lambda[j];
        if (next >= 0.5) {
            // Linear interpolation inside this node's mass.
            const double frac = g.lambda[j] > 0.0 ? (0.5 - acc) / g.lambda[j] : 0.0;
            const double left = j == 0 ? g.tau[0] : 0.5 * (g.tau[j - 1] + g.tau[j]);
            const double right = j + 1 == g.tau.size() ? g.tau.back()
                                                       : 0.5 * (g.tau[j] + g.tau[j + 1]);
            return left + frac * (right - left);
        }
        acc = next;
    }
    return g.tau.back();
}

std::vector<double> make_nodes(double prior_scale, std::size_t count) {
    // [0, 8*scale], log-spaced near zero: tau_j = span (e^{k u} - 1)/(e^k - 1).
    const double span = 8.0 * prior_scale;
    const double kappa = 6.0;
    std::vector<double> nodes(count);
    for (std::size_t j = 0; j < count; ++j) {
        const double u = static_cast<double>(j) / static_cast<double>(count - 1);
        nodes[j] = span * std::expm1(kappa * u) / std::expm1(kappa);
    }
    return nodes;
}

nlohmann::json json_number(double x) {
    if (!std::isfinite(x)) return nullptr;
    return x;
}

} // namespace

std::string MetaResult::method_label() const {
    switch (method) {
        case MetaMethod::fixed_effect: return "fixed";
        case MetaMethod::modified_knapp_hartung: return "mkh";
        case MetaMethod::bayes_half_normal:
            return "bayes_hn(" + format_double(prior_scale) + ")";
    }
    return "unknown";
}

std::string MetaResult::to_json() const {
    nlohmann::json j;
    j["method"] = method_label();
    j["mu_hat"] = json_number(mu_hat);
    j["ci95"] = {json_number(lo), json_number(hi)};
    j["hr"] = json_number(std::exp(mu_hat));
    j["hr_ci95"] = {json_number(std::exp(lo)), json_number(std::exp(hi))};
    j["tau"] = json_number(tau);
    switch (method) {
        case MetaMethod::fixed_effect: j["se"] = json_number(se); break;
        case MetaMethod::modified_knapp_hartung:
            j["se"] = json_number(se);
            j["df"] = df;
            break;
        case MetaMethod::bayes_half_normal:
            j["prior_scale"] = json_number(prior_scale);
            j["quad_error"] = json_number(quad_error);
            break;
    }
    return j.dump(2);
}

MetaResult fixed_effect(const std::vector<StudyEffect>& studies) {
    check_studies(studies, 1);
    const Pooled p = pool(studies, 0.0);
    MetaResult r;
    r.method = MetaMethod::fixed_effect;
    r.mu_hat = p.mu;
    r.se = std::sqrt(1.0 / p.sum_w);
    r.lo = p.mu - kZ95 * r.se;
    r.hi = p.mu + kZ95 * r.se;
    r.tau = 0.0;
    return r;
}

double tau_dl(const std::vector<StudyEffect>& studies) {
    check_studies(studies, 2);
    const Pooled p = pool(studies, 0.0);
    const double k = static_cast<double>(studies.size());
    const double denom = p.sum_w - p.sum_w2 / p.sum_w;
    if (!(denom > 0.0)) return 0.0; // cannot happen for k >= 2; defensive
    const double tau2 = std::max(0.0, (p.q - (k - 1.0)) / denom);
    return std::sqrt(tau2);
}

MetaResult knapp_hartung_modified(const std::vector<StudyEffect>& studies) {
    check_studies(studies, 2);
    const double tau = tau_dl(studies);
    const Pooled p = pool(studies, tau * tau);
    const double k = static_cast<double>(studies.size());
    const double q = std::max(1.0, p.q / (k - 1.0)); // the "modified" floor
    const double variance = q / p.sum_w;
    const boost::math::students_t_distribution<double> t_dist(k - 1.0);
    const double t975 = boost::math::quantile(t_dist, 0.975);

    MetaResult r;
    r.method = MetaMethod::modified_knapp_hartung;
    r.mu_hat = p.mu;
    r.se = std::sqrt(variance);
    r.lo = p.mu - t975 * r.se;
    r.hi = p.mu + t975 * r.se;
    r.tau = tau;
    r.df = studies.size() - 1;
    return r;
}

MetaResult bayes_half_normal(const std::vector<StudyEffect>& studies, double prior_scale) {
    check_studies(studies, 1);
    if (!(prior_scale > 0.0)) fail(ErrorCode::invalid_argument, "prior_scale must be positive");

    const std::vector<double> nodes = make_nodes(prior_scale, 512);
    const TauGrid grid = posterior_grid(studies, prior_scale, nodes);

    MetaResult r;
    r.method = MetaMethod::bayes_half_normal;
    r.prior_scale = prior_scale;
    r.mu_hat = mixture_quantile(grid, 0.5);
    r.lo = mixture_quantile(grid, 0.025);
    r.hi = mixture_quantile(grid, 0.975);
    r.tau = tau_posterior_median(grid);
    r.se = std::numeric_limits<double>::quiet_NaN();

    // Diagnostic: redo the quadrature on every other node and report the
    // largest shift across the three reported quantiles.
    std::vector<double> coarse;
    for (std::size_t j = 0; j < nodes.size(); j += 2) coarse.push_back(nodes[j]);
    if (coarse.back() != nodes.back()) coarse.push_back(nodes.back());
    const TauGrid half = posterior_grid(studies, prior_scale, coarse);
    r.quad_error = std::max({std::abs(mixture_quantile(half, 0.5) - r.mu_hat),
                             std::abs(mixture_quantile(half, 0.025) - r.lo),
                             std::abs(mixture_quantile(half, 0.975) - r.hi)});
    return r;
}

std::string ForestTable::to_csv() const {
    std::string out = "label,log_effect,log_lo,log_hi,hr,hr_lo,hr_hi,combined\n";
    for (const ForestRow& row : rows) {
        out += row.label;
        out += ',';
        out += format_double(row.log_effect);
        out += ',';
        out += format_double(row.log_lo);
        out += ',';
        out += format_double(row.log_hi);
        out += ',';
        out += format_double(row.hr);
        out += ',';
        out += format_double(row.hr_lo);
        out += ',';
        out += format_double(row.hr_hi);
        out += ',';
        out += row.combined ? '1' : '0';
        out += '\n';
    }
    return out;
}

ForestTable forest_data(const std::vector<StudyEffect>& studies,
                        const std::vector<MetaResult>& results) {
    check_studies(studies, 1);
    ForestTable table;
    for (const StudyEffect& s : studies) {
        ForestRow row;
        row.label = s.label;
        row.log_effect = s.y;
        row.log_lo = s.y - kZ95 * s.se;
        row.log_hi = s.y + kZ95 * s.se;
        row.hr = std::exp(row.log_effect);
        row.hr_lo = std::exp(row.log_lo);
        row.hr_hi = std::exp(row.log_hi);
        row.combined = false;
        table.rows.push_back(row);
    }
    for (const MetaResult& r : results) {
        ForestRow row;
        row.label = r.method_label();
        row.log_effect = r.mu_hat;
        row.log_lo = r.lo;
        row.log_hi = r.hi;
        row.hr = std::exp(row.log_effect);
        row.hr_lo = std::exp(row.log_lo);
        row.hr_hi = std::exp(row.log_hi);
        row.combined = true;
        table.rows.push_back(row);
    }
    return table;
}

std::vector<StudyEffect> parse_studies_csv(std::istream& in) {
    std::vector<StudyEffect> studies;
    std::string line;
    long row = 0;
    bool first_content_line = true;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        // Trim and skip blanks/comments.
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t");
        const std::string body = line.substr(first, last - first + 1);
        if (body.empty() || body[0] == '#') continue;

        std::istringstream fields(body);
        std::string label, y_text, se_text;
        if (!std::getline(fields, label, ',') || !std::getline(fields, y_text, ',') ||
            !std::getline(fields, se_text)) {
            fail(ErrorCode::malformed_row,
                 "row " + std::to_string(row) + ": expected label,log_effect,se");
        }
        StudyEffect s;
        s.label = label;
        try {
            s.y = std::stod(y_text);
            s.se = std::stod(se_text);
        } catch (const std::exception&) {
            if (first_content_line) {
                // An unparseable first line with textual fields is a header.
                first_content_line = false;
                continue;
            }
            fail(ErrorCode::malformed_row,
                 "row " + std::to_string(row) + ": unparseable number");
        }
        first_content_line = false;
        if (!(s.se > 0.0)) {
            fail(ErrorCode::malformed_row, "row " + std::to_string(row) + ": se must be > 0");
        }
        studies.push_back(std::move(s));
    }
    return studies;
}

std::vector<StudyEffect> parse_studies_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io_error, "cannot open '" + path + "' for reading");
    return parse_studies_csv(in);
}

} // namespace aesurv
