#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace levyk {

/// Parameter or input rejected before any computation starts.
class validation_error : public std::invalid_argument {
public:
    explicit validation_error(const std::string& what) : std::invalid_argument(what) {}
};

/// A numerical routine failed to converge or detected divergence.
/// Distinct from validation_error: the inputs were legal, the computation broke.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

/// An operation refused to run because a required condition check did not
/// pass. Carries the failing condition's name so drivers can report it.
class precondition_error : public std::runtime_error {
public:
    precondition_error(const std::string& condition_name, const std::string& what)
        : std::runtime_error(what), condition(condition_name) {}
    std::string condition;
};

constexpr double pi = 3.14159265358979323846;

/// Surface measure of the unit sphere S^{d-1} (2, 2*pi, 4*pi for d = 1,2,3).
inline double sphere_surface(int d) {
    switch (d) {
        case 1: return 2.0;
        case 2: return 2.0 * pi;
        case 3: return 4.0 * pi;
        default: throw validation_error("sphere_surface: d must be 1, 2 or 3");
    }
}

/// Thread count: LEVYK_THREADS if set and positive, else hardware concurrency.
inline unsigned thread_count() {
    if (const char* env = std::getenv("LEVYK_THREADS")) {
        long n = std::strtol(env, nullptr, 10);
        if (n > 0) return static_cast<unsigned>(n);
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? hc : 1;
}

/// Run fn(i) for i in [0, n). Results must be written to preallocated slots so
/// the outcome is independent of the thread schedule.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    unsigned nt = thread_count();
    if (nt <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::size_t chunk = (n + nt - 1) / nt;
    for (unsigned t = 0; t < nt; ++t) {
        std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

/// Least-squares line fit y ~ intercept + slope * x.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0; ///< coefficient of determination
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw validation_error("fit_line: need two same-length samples");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i]; sy += y[i];
        sxx += x[i] * x[i]; sxy += x[i] * y[i]; syy += y[i] * y[i];
    }
    const double vxx = sxx - sx * sx / n;
    const double vxy = sxy - sx * sy / n;
    const double vyy = syy - sy * sy / n;
    if (vxx <= 0.0) throw validation_error("fit_line: degenerate abscissae");
    LineFit f;
    f.slope = vxy / vxx;
    f.intercept = (sy - f.slope * sx) / n;
    f.r2 = vyy > 0.0 ? (vxy * vxy) / (vxx * vyy) : 1.0;
    return f;
}

/// Median of a sample (copy-by-value on purpose).
inline double median(std::vector<double> v) {
    if (v.empty()) throw validation_error("median: empty sample");
    std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    std::nth_element(v.begin(), v.begin() + mid - 1, v.end());
    return 0.5 * (hi + v[mid - 1]);
}

/// n log-spaced points over [lo, hi], endpoints included.
inline std::vector<double> log_space(double lo, double hi, int n) {
    if (!(lo > 0.0) || !(hi > lo) || n < 2)
        throw validation_error("log_space: need 0 < lo < hi and n >= 2");
    std::vector<double> out(n);
    const double llo = std::log(lo), step = (std::log(hi) - llo) / (n - 1);
    for (int i = 0; i < n; ++i) out[i] = std::exp(llo + i * step);
    out.front() = lo;
    out.back() = hi;
    return out;
}

} // namespace levyk
