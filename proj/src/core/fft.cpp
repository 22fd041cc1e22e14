#include "qh/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace qh {

namespace {

// FFTW's planner is not thread-safe; execution with new-array functions is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct LinePlans {
    fftw_plan fwd;
    fftw_plan bwd;
};

LinePlans line_plans(std::size_t n) {
    static std::map<std::size_t, LinePlans> cache;
    std::lock_guard<std::mutex> lock(planner_mutex());
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    auto* tmp = fftw_alloc_complex(n);
    LinePlans p{fftw_plan_dft_1d(static_cast<int>(n), tmp, tmp, FFTW_FORWARD, FFTW_ESTIMATE),
                fftw_plan_dft_1d(static_cast<int>(n), tmp, tmp, FFTW_BACKWARD, FFTW_ESTIMATE)};
    fftw_free(tmp);
    cache.emplace(n, p);
    return p;
}

struct AlignedBuffer {
    fftw_complex* p = nullptr;
    std::size_t n = 0;
    ~AlignedBuffer() {
        if (p) fftw_free(p);
    }
    fftw_complex* get(std::size_t want) {
        if (want > n) {
            if (p) fftw_free(p);
            p = fftw_alloc_complex(want);
            n = want;
        }
        return p;
    }
};

}  // namespace

FftNd::FftNd(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
    n_ = 1;
    std::vector<int> dims;
    for (auto s : shape_) {
        n_ *= s;
        dims.push_back(static_cast<int>(s));
    }
    buf_ = reinterpret_cast<std::complex<double>*>(fftw_alloc_complex(n_));
    auto* b = reinterpret_cast<fftw_complex*>(buf_);
    std::lock_guard<std::mutex> lock(planner_mutex());
    fwd_ = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), b, b, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), b, b, FFTW_BACKWARD, FFTW_ESTIMATE);
}

FftNd::~FftNd() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
    fftw_free(buf_);
}

void FftNd::forward() { fftw_execute(static_cast<fftw_plan>(fwd_)); }
void FftNd::backward() { fftw_execute(static_cast<fftw_plan>(bwd_)); }

std::vector<double> wavenumbers(std::size_t n, double length) {
    std::vector<double> k(n);
    const double base = 2.0 * std::numbers::pi / length;
    for (std::size_t m = 0; m < n; ++m) {
        const long mm = m <= n / 2 ? static_cast<long>(m) : static_cast<long>(m) - static_cast<long>(n);
        k[m] = base * static_cast<double>(mm);
    }
    return k;
}

void spectral_derivative_line(const double* in, double* out, std::size_t n, double length, int order) {
    thread_local AlignedBuffer tl;
    fftw_complex* b = tl.get(n);
    const auto plans = line_plans(n);
    for (std::size_t i = 0; i < n; ++i) {
        b[i][0] = in[i];
        b[i][1] = 0.0;
    }
    fftw_execute_dft(plans.fwd, b, b);
    const auto k = wavenumbers(n, length);
    for (std::size_t m = 0; m < n; ++m) {
        const double re = b[m][0], im = b[m][1];
        if (order == 1) {
            // The Nyquist mode of an even-length line has no odd derivative.
            const double km = (n % 2 == 0 && m == n / 2) ? 0.0 : k[m];
            b[m][0] = -km * im;
            b[m][1] = km * re;
        } else {
            const double f = -k[m] * k[m];
            b[m][0] = f * re;
            b[m][1] = f * im;
        }
    }
    fftw_execute_dft(plans.bwd, b, b);
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = b[i][0] * inv;
}

}  // namespace qh
