/*
 * fft.hpp - a thin RAII wrapper over FFTW's complex multi-dimensional DFT.
 *
 * Plans are created with FFTW_ESTIMATE | FFTW_UNALIGNED under a global lock
 * (the planner is not thread-safe) and then executed on caller-owned arrays
 * through fftw_execute_dft, which is safe from concurrent threads.
 *
 * Layout: an n^d cube stored with axis 0 fastest.  The transform is
 * symmetric in the axes, so FFTW's row-major convention is immaterial.
 */

#pragma once

#include <algorithm>
#include <complex>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "errors.hpp"

namespace tpam {

inline std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

class FftPlan {
public:
    // sign = FFTW_FORWARD (-1) or FFTW_BACKWARD (+1); both unnormalized.
    FftPlan(int d, int n, int sign) : d_(d), n_(n), sign_(sign)
    {
        require(d >= 1 && n >= 1, "FftPlan: invalid shape");
        size_ = 1;
        for (int i = 0; i < d; ++i) size_ *= static_cast<std::size_t>(n);
        std::vector<int> dims(d, n);
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        auto* buffer = fftw_alloc_complex(size_);
        plan_ = fftw_plan_dft(d, dims.data(), buffer, buffer, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(buffer);
        if (!plan_) throw NumericError("FftPlan: FFTW planning failed");
    }

    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;

    ~FftPlan()
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fftw_destroy_plan(plan_);
    }

    int dim() const { return d_; }
    int n() const { return n_; }
    int sign() const { return sign_; }
    std::size_t size() const { return size_; }

    // The plan is in-place; an out-of-place call copies first.
    void execute(const std::complex<double>* in, std::complex<double>* out) const
    {
        if (in != out) std::copy(in, in + size_, out);
        auto* p = reinterpret_cast<fftw_complex*>(out);
        fftw_execute_dft(plan_, p, p);
    }

    void execute(std::vector<std::complex<double>>& data) const
    {
        require(data.size() == size_, "FftPlan: buffer size mismatch");
        execute(data.data(), data.data());
    }

private:
    int d_;
    int n_;
    int sign_;
    std::size_t size_ = 0;
    fftw_plan plan_ = nullptr;
};

// Smallest n >= lo whose prime factors are all in {2, 3, 5}.
inline int smooth_size(int lo)
{
    for (int n = std::max(lo, 1);; ++n) {
        int m = n;
        for (int p : {2, 3, 5})
            while (m % p == 0) m /= p;
        if (m == 1) return n;
    }
}

}  // namespace tpam
