#pragma once

#include <string>
#include <utility>
#include <vector>

namespace levyk::report {

/// Outcome of an empirical condition check. `inconclusive` is reserved for
/// genuinely borderline evidence (near-critical parameters, probe windows too
/// short to separate bounded from slowly growing curves).
enum class Verdict { pass, fail, inconclusive };

const char* to_string(Verdict v);

/// Process exit code convention: pass -> 0, fail -> 1, inconclusive -> 3.
int exit_code(Verdict v);

struct CurvePoint {
    double x;
    double y;
};

/// One named check: a verdict, scalar diagnostics in insertion order (so text
/// output is deterministic), free-form notes, and an optional probe curve.
struct ConditionReport {
    std::string name;
    Verdict verdict = Verdict::inconclusive;
    std::vector<std::pair<std::string, double>> stats;
    std::vector<std::string> notes;
    std::vector<CurvePoint> curve;

    void stat(const std::string& key, double value);
    double stat_or(const std::string& key, double fallback) const;

    /// Fixed-format human-readable block (stable across runs).
    std::string text() const;
};

/// Decade-median summary of a positive curve sampled on a log-x grid:
/// group points by decade of x, take the median of y in each decade, and
/// report the spread and monotonicity of those medians.
struct GrowthTrend {
    double overall_ratio = 1.0; // max median / min median
    bool monotone_up = false;   // medians strictly increase decade over decade
    bool monotone_down = false;
    double first_median = 0.0;
    double last_median = 0.0;
    int decades = 0;
};

GrowthTrend growth_trend(const std::vector<CurvePoint>& curve);

} // namespace levyk::report
