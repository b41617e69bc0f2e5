#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace sonifw::dsp {

// Real-input FFT of fixed size backed by FFTW. Plans are created once per
// instance; instances are movable but not shareable between threads.
class RealFft {
public:
    explicit RealFft(std::size_t size);
    ~RealFft();
    RealFft(RealFft&&) noexcept;
    RealFft& operator=(RealFft&&) noexcept;
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    std::size_t size() const { return size_; }
    std::size_t bins() const { return size_ / 2 + 1; }

    // Unnormalized forward transform; `out` must hold bins() values.
    void forward(std::span<const double> in, std::span<std::complex<double>> out);
    // Unnormalized inverse transform (result is scaled by size()).
    void inverse(std::span<const std::complex<double>> in, std::span<double> out);

private:
    struct Impl;
    std::size_t size_ = 0;
    std::unique_ptr<Impl> impl_;
};

}  // namespace sonifw::dsp
