#include "levyk/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>

namespace levyk::grid {

Grid1D Grid1D::symmetric(double x_max, double dx_max) {
    if (!(x_max > 0.0) || !(dx_max > 0.0))
        throw validation_error("Grid1D::symmetric: x_max and dx_max must be positive");
    long half = static_cast<long>(std::ceil(x_max / dx_max));
    long n = 2 * half + 1;
    if (n > max_cells) {
        throw validation_error(
            "Grid1D::symmetric: grid would need " + std::to_string(n) +
            " cells (limit " + std::to_string(max_cells) +
            "); enlarge dx or shrink the box");
    }
    Grid1D g;
    g.dx = x_max / static_cast<double>(half);
    g.n = static_cast<int>(n);
    g.origin = static_cast<int>(half);
    return g;
}

std::size_t fft_size_for(std::size_t logical) {
    std::size_t m = 1;
    while (m < logical) m <<= 1;
    return m;
}

std::vector<std::complex<double>> rfft(const std::vector<double>& in, std::size_t m) {
    if (in.size() > m) throw validation_error("rfft: input longer than transform size");
    std::vector<double> buf(m, 0.0);
    std::memcpy(buf.data(), in.data(), in.size() * sizeof(double));
    std::vector<std::complex<double>> out(m / 2 + 1);
    fftw_plan plan = fftw_plan_dft_r2c_1d(
        static_cast<int>(m), buf.data(),
        reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
    if (!plan) throw numeric_error("rfft: fftw plan failed");
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    return out;
}

std::vector<double> irfft(const std::vector<std::complex<double>>& spec, std::size_t m) {
    if (spec.size() != m / 2 + 1) throw validation_error("irfft: spectrum size mismatch");
    std::vector<std::complex<double>> in(spec);
    std::vector<double> out(m);
    fftw_plan plan = fftw_plan_dft_c2r_1d(
        static_cast<int>(m), reinterpret_cast<fftw_complex*>(in.data()),
        out.data(), FFTW_ESTIMATE);
    if (!plan) throw numeric_error("irfft: fftw plan failed");
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    const double inv = 1.0 / static_cast<double>(m);
    for (double& v : out) v *= inv;
    return out;
}

std::vector<double> linear_convolve(const std::vector<double>& a,
                                    const std::vector<double>& b) {
    if (a.empty() || b.empty())
        throw validation_error("linear_convolve: empty sequence");
    const std::size_t len = a.size() + b.size() - 1;
    const std::size_t m = fft_size_for(len);
    auto fa = rfft(a, m);
    const auto fb = rfft(b, m);
    for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
    auto full = irfft(fa, m);
    full.resize(len);
    return full;
}

ConvResult convolve(const Grid1D& g, const std::vector<double>& a,
                    const std::vector<double>& b) {
    const std::size_t n = static_cast<std::size_t>(g.n);
    if (a.size() != n || b.size() != n)
        throw validation_error("convolve: sequence length must match the grid");
    auto full = linear_convolve(a, b); // full[k] = sum_i a_i b_{k-i}, k in [0, 2n-2]

    // Index algebra: x-index i means coordinate (i - origin) dx, so the
    // convolution cell k corresponds to output index k - origin.
    ConvResult res;
    res.values.assign(n, 0.0);
    const std::size_t off = static_cast<std::size_t>(g.origin);
    for (std::size_t k = 0; k + 1 < 2 * n; ++k) {
        const double v = full[k];
        if (k >= off && k - off < n)
            res.values[k - off] = v;
        else
            res.spill += v;
    }
    return res;
}

} // namespace levyk::grid
