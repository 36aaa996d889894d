#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <memory>

#include "landis/error.hpp"

namespace landis {

// Smallest n' >= n of the form 2^a 3^b 5^c.
inline int fft_size(int n) {
    for (int m = std::max(n, 1);; ++m) {
        int r = m;
        for (int p : {2, 3, 5})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

// In-place 2D complex transform pair on an ny-by-nx row-major buffer.
class Fft2D {
public:
    Fft2D(int ny, int nx) : ny_(ny), nx_(nx) {
        data_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * size()));
        if (!data_) throw SolverError("fftw_malloc failed");
        fwd_ = fftw_plan_dft_2d(ny, nx, data_, data_, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_2d(ny, nx, data_, data_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    Fft2D(const Fft2D&) = delete;
    Fft2D& operator=(const Fft2D&) = delete;
    ~Fft2D() {
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(data_);
    }

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    std::size_t size() const { return static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_); }
    std::complex<double>* data() { return reinterpret_cast<std::complex<double>*>(data_); }
    std::complex<double>& at(int i, int j) { return data()[static_cast<std::size_t>(j) * nx_ + i]; }

    void forward() { fftw_execute(fwd_); }
    // Unnormalized inverse followed by division by the element count.
    void backward() {
        fftw_execute(bwd_);
        const double s = 1.0 / static_cast<double>(size());
        auto* d = data();
        for (std::size_t k = 0; k < size(); ++k) d[k] *= s;
    }

private:
    int ny_, nx_;
    fftw_complex* data_ = nullptr;
    fftw_plan fwd_ = nullptr, bwd_ = nullptr;
};

}  // namespace landis
