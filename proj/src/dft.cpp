#include "nlsid/dft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace nlsid::dft {
namespace {

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

using RealBuf    = std::unique_ptr<double[], FftwFree>;
using ComplexBuf = std::unique_ptr<fftw_complex[], FftwFree>;

RealBuf alloc_real(int n) { return RealBuf(fftw_alloc_real(static_cast<size_t>(n))); }
ComplexBuf alloc_complex(int n) { return ComplexBuf(fftw_alloc_complex(static_cast<size_t>(n))); }

// Planning is not thread-safe in FFTW; execution with the new-array interface is.
struct PlanCache {
    std::mutex mutex;
    std::map<int, fftw_plan> r2c;
    std::map<int, fftw_plan> c2r;

    ~PlanCache() {
        for (auto& [n, p] : r2c) fftw_destroy_plan(p);
        for (auto& [n, p] : c2r) fftw_destroy_plan(p);
    }

    fftw_plan forward(int n) {
        std::lock_guard lock(mutex);
        auto it = r2c.find(n);
        if (it != r2c.end()) return it->second;
        auto in  = alloc_real(n);
        auto out = alloc_complex(n / 2 + 1);
        fftw_plan p = fftw_plan_dft_r2c_1d(n, in.get(), out.get(), FFTW_ESTIMATE);
        r2c.emplace(n, p);
        return p;
    }

    fftw_plan backward(int n) {
        std::lock_guard lock(mutex);
        auto it = c2r.find(n);
        if (it != c2r.end()) return it->second;
        auto in  = alloc_complex(n / 2 + 1);
        auto out = alloc_real(n);
        fftw_plan p = fftw_plan_dft_c2r_1d(n, in.get(), out.get(), FFTW_ESTIMATE);
        c2r.emplace(n, p);
        return p;
    }
};

PlanCache& cache() {
    static PlanCache instance;
    return instance;
}

}  // namespace

CVec forward(std::span<const double> x) {
    const int n = static_cast<int>(x.size());
    CVec X(n / 2 + 1);
    if (n == 0) return X;
    auto in  = alloc_real(n);
    auto out = alloc_complex(n / 2 + 1);
    std::copy(x.begin(), x.end(), in.get());
    fftw_execute_dft_r2c(cache().forward(n), in.get(), out.get());
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (int k = 0; k <= n / 2; ++k) X[k] = cplx(out[k][0], out[k][1]) * scale;
    return X;
}

CMat forward_columns(const Mat& x) {
    const int n = static_cast<int>(x.rows());
    CMat X(n / 2 + 1, x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        X.col(c) = forward(std::span<const double>(x.col(c).data(), static_cast<size_t>(n)));
    }
    return X;
}

Vec inverse(const CVec& X, int n) {
    Vec x(n);
    if (n == 0) return x;
    auto in  = alloc_complex(n / 2 + 1);
    auto out = alloc_real(n);
    for (int k = 0; k <= n / 2; ++k) {
        in[k][0] = X[k].real();
        in[k][1] = X[k].imag();
    }
    fftw_execute_dft_c2r(cache().backward(n), in.get(), out.get());
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (int t = 0; t < n; ++t) x[t] = out[t] * scale;
    return x;
}

double one_sided_energy(const CVec& X, int n) {
    double e = std::norm(X[0]);
    const int last = n / 2;
    for (int k = 1; k <= last; ++k) {
        const bool nyquist = (n % 2 == 0) && k == last;
        e += (nyquist ? 1.0 : 2.0) * std::norm(X[k]);
    }
    return e;
}

}  // namespace nlsid::dft
