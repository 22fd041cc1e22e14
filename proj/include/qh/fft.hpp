#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace qh {

// In-place complex DFT over a full grid shape (row-major). Unnormalized in both directions.
class FftNd {
public:
    explicit FftNd(std::vector<std::size_t> shape);
    ~FftNd();
    FftNd(const FftNd&) = delete;
    FftNd& operator=(const FftNd&) = delete;

    std::complex<double>* buffer() { return buf_; }
    std::size_t size() const { return n_; }
    void forward();
    void backward();

private:
    std::vector<std::size_t> shape_;
    std::size_t n_ = 0;
    std::complex<double>* buf_ = nullptr;
    void* fwd_ = nullptr;
    void* bwd_ = nullptr;
};

// Angular wavenumbers 2*pi*m/L in FFT order for a periodic axis of n points.
std::vector<double> wavenumbers(std::size_t n, double length);

// Spectral d/dx or d2/dx2 of one real periodic line (stride-1 input and output).
void spectral_derivative_line(const double* in, double* out, std::size_t n, double length, int order);

}  // namespace qh
