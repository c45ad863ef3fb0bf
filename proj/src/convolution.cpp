#include "levy_rotor/convolution.hpp"

#include <algorithm>
#include <memory>
#include <mutex>

#include <fftw3.h>

namespace levy_rotor {

namespace {

// The FFTW planner is not re-entrant; execution of distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <typename T>
FftwBuffer<T> fftw_buffer(std::size_t n) {
  return FftwBuffer<T>(static_cast<T*>(fftw_malloc(sizeof(T) * n)));
}

class Plan {
 public:
  explicit Plan(fftw_plan p) : p_(p) {}
  ~Plan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(p_);
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  void execute() const { fftw_execute(p_); }

 private:
  fftw_plan p_;
};

std::size_t transform_size(std::size_t n) {
  // Smallest 2^a 3^b 5^c >= n.
  std::size_t best = 1;
  while (best < n) best <<= 1;
  for (std::size_t p5 = 1; p5 < best; p5 *= 5)
    for (std::size_t p3 = p5; p3 < best; p3 *= 3)
      for (std::size_t v = p3; v < best; v <<= 1)
        if (v >= n) best = std::min(best, v);
  return best;
}

template <typename T>
std::vector<T> direct(std::span<const T> a, std::span<const T> b) {
  if (a.empty() || b.empty()) return {};
  std::vector<T> out(a.size() + b.size() - 1, T{});
  for (std::size_t i = 0; i < a.size(); ++i) {
    const T ai = a[i];
    T* o = out.data() + i;
    for (std::size_t j = 0; j < b.size(); ++j) o[j] += ai * b[j];
  }
  return out;
}

}  // namespace

std::vector<double> convolve_direct(std::span<const double> a, std::span<const double> b) { return direct(a, b); }

std::vector<std::complex<double>> convolve_direct(std::span<const std::complex<double>> a,
                                                  std::span<const std::complex<double>> b) {
  return direct(a, b);
}

std::vector<double> convolve_fft(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t out_len = a.size() + b.size() - 1;
  const std::size_t n = transform_size(out_len);
  const std::size_t nc = n / 2 + 1;

  auto ra = fftw_buffer<double>(n);
  auto rb = fftw_buffer<double>(n);
  auto ca = fftw_buffer<fftw_complex>(nc);
  auto cb = fftw_buffer<fftw_complex>(nc);
  std::unique_ptr<Plan> fa, fb, back;
  {
    std::lock_guard lock(planner_mutex());
    fa = std::make_unique<Plan>(fftw_plan_dft_r2c_1d(static_cast<int>(n), ra.get(), ca.get(), FFTW_ESTIMATE));
    fb = std::make_unique<Plan>(fftw_plan_dft_r2c_1d(static_cast<int>(n), rb.get(), cb.get(), FFTW_ESTIMATE));
    back = std::make_unique<Plan>(fftw_plan_dft_c2r_1d(static_cast<int>(n), ca.get(), ra.get(), FFTW_ESTIMATE));
  }
  std::fill(ra.get(), ra.get() + n, 0.0);
  std::fill(rb.get(), rb.get() + n, 0.0);
  std::copy(a.begin(), a.end(), ra.get());
  std::copy(b.begin(), b.end(), rb.get());
  fa->execute();
  fb->execute();
  for (std::size_t k = 0; k < nc; ++k) {
    const double re = ca[k][0] * cb[k][0] - ca[k][1] * cb[k][1];
    const double im = ca[k][0] * cb[k][1] + ca[k][1] * cb[k][0];
    ca[k][0] = re;
    ca[k][1] = im;
  }
  back->execute();
  const double scale = 1.0 / static_cast<double>(n);
  std::vector<double> out(out_len);
  for (std::size_t i = 0; i < out_len; ++i) out[i] = ra[i] * scale;
  return out;
}

std::vector<std::complex<double>> convolve_fft(std::span<const std::complex<double>> a,
                                               std::span<const std::complex<double>> b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t out_len = a.size() + b.size() - 1;
  const std::size_t n = transform_size(out_len);

  auto xa = fftw_buffer<fftw_complex>(n);
  auto xb = fftw_buffer<fftw_complex>(n);
  std::unique_ptr<Plan> fa, fb, back;
  {
    std::lock_guard lock(planner_mutex());
    fa = std::make_unique<Plan>(
        fftw_plan_dft_1d(static_cast<int>(n), xa.get(), xa.get(), FFTW_FORWARD, FFTW_ESTIMATE));
    fb = std::make_unique<Plan>(
        fftw_plan_dft_1d(static_cast<int>(n), xb.get(), xb.get(), FFTW_FORWARD, FFTW_ESTIMATE));
    back = std::make_unique<Plan>(
        fftw_plan_dft_1d(static_cast<int>(n), xa.get(), xa.get(), FFTW_BACKWARD, FFTW_ESTIMATE));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::complex<double> va = i < a.size() ? a[i] : std::complex<double>{};
    const std::complex<double> vb = i < b.size() ? b[i] : std::complex<double>{};
    xa[i][0] = va.real();
    xa[i][1] = va.imag();
    xb[i][0] = vb.real();
    xb[i][1] = vb.imag();
  }
  fa->execute();
  fb->execute();
  for (std::size_t k = 0; k < n; ++k) {
    const double re = xa[k][0] * xb[k][0] - xa[k][1] * xb[k][1];
    const double im = xa[k][0] * xb[k][1] + xa[k][1] * xb[k][0];
    xa[k][0] = re;
    xa[k][1] = im;
  }
  back->execute();
  const double scale = 1.0 / static_cast<double>(n);
  std::vector<std::complex<double>> out(out_len);
  for (std::size_t i = 0; i < out_len; ++i) out[i] = {xa[i][0] * scale, xa[i][1] * scale};
  return out;
}

std::vector<double> convolve(std::span<const double> a, std::span<const double> b) {
  if (std::min(a.size(), b.size()) < kDirectConvolutionLimit) return convolve_direct(a, b);
  return convolve_fft(a, b);
}

std::vector<std::complex<double>> convolve(std::span<const std::complex<double>> a,
                                           std::span<const std::complex<double>> b) {
  if (std::min(a.size(), b.size()) < kDirectConvolutionLimit) return convolve_direct(a, b);
  return convolve_fft(a, b);
}

}  // namespace levy_rotor
