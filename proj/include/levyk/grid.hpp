#pragma once

#include <complex>
#include <vector>

#include "levyk/common.hpp"

namespace levyk::grid {

/// Uniform 1-D grid: x_i = (i - origin) * dx for i in [0, n).
struct Grid1D {
    double dx = 0.0;
    int n = 0;
    int origin = 0;

    double x(int i) const { return (i - origin) * dx; }
    double x_min() const { return x(0); }
    double x_max() const { return x(n - 1); }

    /// Nearest cell index of a coordinate, or -1 when off the grid.
    int index_near(double xv) const {
        int i = origin + static_cast<int>(std::lround(xv / dx));
        return (i >= 0 && i < n) ? i : -1;
    }

    /// Symmetric grid covering [-x_max, x_max] with spacing <= dx_max.
    /// Cell count is odd so that 0 lies exactly on the center node.
    static Grid1D symmetric(double x_max, double dx_max);
};

/// Largest even cell count allowed for a uniform grid (memory guard).
constexpr int max_cells = 1 << 22;

/// Linear (zero-padded) convolution of two sequences living on the same grid,
/// windowed back onto that grid. `spill` is the summed mass of the exact
/// linear convolution that fell outside the window — the caller's
/// box-too-small diagnostic.
struct ConvResult {
    std::vector<double> values;
    double spill = 0.0;
};
ConvResult convolve(const Grid1D& g, const std::vector<double>& a,
                    const std::vector<double>& b);

/// Exact full-length linear convolution: out[k] = sum_{i+j=k} a[i] b[j],
/// length a.size() + b.size() - 1. FFT-backed; no windowing, no mass loss.
std::vector<double> linear_convolve(const std::vector<double>& a,
                                    const std::vector<double>& b);

/// Real FFT helpers (power-of-two padded) for callers that reuse spectra.
std::size_t fft_size_for(std::size_t logical);
std::vector<std::complex<double>> rfft(const std::vector<double>& in, std::size_t m);
std::vector<double> irfft(const std::vector<std::complex<double>>& spec, std::size_t m);

} // namespace levyk::grid
