#include "levyk/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "levyk/common.hpp"

namespace levyk::report {

const char* to_string(Verdict v) {
    switch (v) {
    case Verdict::pass: return "PASS";
    case Verdict::fail: return "FAIL";
    case Verdict::inconclusive: return "INCONCLUSIVE";
    }
    return "?";
}

int exit_code(Verdict v) {
    switch (v) {
    case Verdict::pass: return 0;
    case Verdict::fail: return 1;
    case Verdict::inconclusive: return 3;
    }
    return 1;
}

void ConditionReport::stat(const std::string& key, double value) {
    for (auto& kv : stats) {
        if (kv.first == key) {
            kv.second = value;
            return;
        }
    }
    stats.emplace_back(key, value);
}

double ConditionReport::stat_or(const std::string& key, double fallback) const {
    for (const auto& kv : stats)
        if (kv.first == key) return kv.second;
    return fallback;
}

std::string ConditionReport::text() const {
    std::string out = name + ": " + to_string(verdict) + "\n";
    char buf[128];
    for (const auto& kv : stats) {
        std::snprintf(buf, sizeof buf, "  %s = %.9g\n", kv.first.c_str(), kv.second);
        out += buf;
    }
    for (const auto& n : notes) out += "  note: " + n + "\n";
    return out;
}

GrowthTrend growth_trend(const std::vector<CurvePoint>& curve) {
    std::map<int, std::vector<double>> buckets;
    for (const auto& p : curve) {
        if (!(p.x > 0.0) || !std::isfinite(p.y)) continue;
        buckets[static_cast<int>(std::floor(std::log10(p.x)))].push_back(p.y);
    }
    GrowthTrend t;
    std::vector<double> medians;
    for (auto& [dec, ys] : buckets) {
        if (ys.size() < 2) continue; // too sparse to be a decade summary
        medians.push_back(median(ys));
    }
    t.decades = static_cast<int>(medians.size());
    if (medians.empty()) return t;
    t.first_median = medians.front();
    t.last_median = medians.back();
    const double hi = *std::max_element(medians.begin(), medians.end());
    const double lo = *std::min_element(medians.begin(), medians.end());
    t.overall_ratio = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    t.monotone_up = medians.size() >= 2;
    t.monotone_down = medians.size() >= 2;
    for (std::size_t i = 0; i + 1 < medians.size(); ++i) {
        if (!(medians[i + 1] > medians[i])) t.monotone_up = false;
        if (!(medians[i + 1] < medians[i])) t.monotone_down = false;
    }
    return t;
}

} // namespace levyk::report
