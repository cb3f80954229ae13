#pragma once

#include <string>
#include <vector>

#include "aesurv/estimators.hpp"
#include "aesurv/meta.hpp"

namespace aesurv {

/// One curve in an overlay plot. Estimated curves render as solid step
/// functions; theoretical overlays are usually drawn dashed.
struct CurveSeries {
    std::string name;
    CurveEstimate curve;
    bool dashed = false;
};

struct CurvePlotOptions {
    std::string title;
    std::string x_label = "time";
    std::string y_label = "probability";
    double x_max = 0.0; // 0 = span of the data
    double y_max = 0.0; // 0 = max value (at least 1 for probabilities)
};

/// Deterministic fixed-canvas step plot: identical input gives byte-identical
/// SVG. Throws EmptyTable when no series are given.
std::string svg_curves(const std::vector<CurveSeries>& series, const CurvePlotOptions& options);

/// Point-and-whisker forest plot on a log-scaled hazard-ratio axis; study
/// rows draw squares, combined rows diamonds. Throws EmptyTable when the
/// table has no rows.
std::string svg_forest(const ForestTable& table, const std::string& title);

} // namespace aesurv
