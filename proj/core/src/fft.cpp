#include "sonifw/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <stdexcept>

namespace sonifw::dsp {

namespace {
// The FFTW planner is not thread-safe; execution of distinct plans is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

struct RealFft::Impl {
    double* real = nullptr;
    fftw_complex* complex = nullptr;
    fftw_plan forward = nullptr;
    fftw_plan inverse = nullptr;

    ~Impl() {
        std::lock_guard lock(planner_mutex());
        if (forward) fftw_destroy_plan(forward);
        if (inverse) fftw_destroy_plan(inverse);
        fftw_free(real);
        fftw_free(complex);
    }
};

RealFft::RealFft(std::size_t size) : size_(size), impl_(std::make_unique<Impl>()) {
    if (size < 2) throw std::invalid_argument("FFT size must be at least 2");
    const int n = static_cast<int>(size);
    std::lock_guard lock(planner_mutex());
    impl_->real = fftw_alloc_real(size);
    impl_->complex = fftw_alloc_complex(size / 2 + 1);
    impl_->forward = fftw_plan_dft_r2c_1d(n, impl_->real, impl_->complex, FFTW_ESTIMATE);
    impl_->inverse = fftw_plan_dft_c2r_1d(n, impl_->complex, impl_->real, FFTW_ESTIMATE);
    if (!impl_->forward || !impl_->inverse) throw std::runtime_error("FFTW planning failed");
}

RealFft::~RealFft() = default;
RealFft::RealFft(RealFft&&) noexcept = default;
RealFft& RealFft::operator=(RealFft&&) noexcept = default;

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) {
    if (in.size() != size_ || out.size() != bins()) {
        throw std::invalid_argument("RealFft::forward size mismatch");
    }
    std::copy(in.begin(), in.end(), impl_->real);
    fftw_execute(impl_->forward);
    for (std::size_t k = 0; k < bins(); ++k) {
        out[k] = {impl_->complex[k][0], impl_->complex[k][1]};
    }
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
    if (in.size() != bins() || out.size() != size_) {
        throw std::invalid_argument("RealFft::inverse size mismatch");
    }
    for (std::size_t k = 0; k < bins(); ++k) {
        impl_->complex[k][0] = in[k].real();
        impl_->complex[k][1] = in[k].imag();
    }
    // c2r destroys its input; it was copied above.
    fftw_execute(impl_->inverse);
    std::copy(impl_->real, impl_->real + size_, out.begin());
}

}  // namespace sonifw::dsp
