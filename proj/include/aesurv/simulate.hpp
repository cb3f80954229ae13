#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aesurv/data.hpp"
#include "aesurv/estimators.hpp"

namespace aesurv {

enum class CensorMode {
    none,    // follow every subject to their event
    fixed,   // administrative cutoff at censor_time ("end of follow-up")
    uniform, // censoring time uniform on (0, censor_time); models staggered
             // entry with one analysis cutoff, used by the bias experiments
};

const char* censor_mode_name(CensorMode mode);

/// Two-arm constant-hazard competing-risks generating model.
struct Scenario {
    HazardPair group0;
    HazardPair group1;
    std::size_t n_per_arm = 0;
    CensorMode censor_mode = CensorMode::none;
    double censor_time = 0.0; // cutoff (fixed) or upper bound (uniform)
    std::uint64_t seed = 0;
};

/// Latent time T ~ Exponential(alpha_ae + alpha_ce); the cause is AE with
/// probability alpha_ae/(alpha_ae+alpha_ce), else death; censoring applied
/// per censor_mode. Identical Scenario => byte-identical Dataset (arm 0 then
/// arm 1, one derived generator stream per arm).
Dataset simulate(const Scenario& s);

/// Exact CIF curve via parametric_cif over the grid; variances zero.
CurveEstimate theoretical_cif(HazardPair h, const std::vector<double>& grid);

struct BiasRow {
    std::string estimator;
    double mean_estimate = 0.0;
    double truth = 0.0;
    double bias = 0.0; // mean_estimate - truth
};

struct BiasTable {
    double t_eval = 0.0;
    std::size_t replications = 0;
    std::vector<BiasRow> rows;

    std::string to_csv() const; // header: estimator,mean_estimate,truth,bias
};

/// Replicated single-arm (arm 0) experiment: means of the incidence
/// proportion, 1-KM with AE censored at competing events, and Aalen-Johansen
/// at t_eval against the closed-form truth. Replication r uses the derived
/// seed mix_seed(s.seed, r).
BiasTable bias_experiment(const Scenario& s, double t_eval, std::size_t replications);

} // namespace aesurv
