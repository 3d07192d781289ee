#include "sqz/kernels.hpp"

#include <exception>

#include <fmt/format.h>

#include "sqz/cavity.hpp"
#include "sqz/errors.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace sqz::kernels {

namespace {

void check_sizes(std::size_t in, std::size_t out) {
  if (in != out) throw Error(ErrorKind::argument, fmt::format("kernel output has {} slots for {} inputs", out, in));
}

// Exceptions must not cross an OpenMP region boundary; keep the one from the lowest index.
class FirstError {
 public:
  void capture(std::ptrdiff_t index) {
#pragma omp critical(sqz_kernel_error)
    {
      if (!error_ || index < index_) {
        error_ = std::current_exception();
        index_ = index;
      }
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::exception_ptr error_;
  std::ptrdiff_t index_ = 0;
};

}  // namespace

int max_threads() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void tuning_efficiency_serial(const CrystalSpec& crystal, const OpticalFieldSpec& fundamental,
                              std::span<const double> temperatures_c, std::span<double> out) {
  check_sizes(temperatures_c.size(), out.size());
  for (std::size_t i = 0; i < temperatures_c.size(); ++i)
    out[i] = phase_matching_efficiency(crystal, fundamental, Celsius{temperatures_c[i]});
}

void tuning_efficiency_parallel(const CrystalSpec& crystal, const OpticalFieldSpec& fundamental,
                                std::span<const double> temperatures_c, std::span<double> out) {
  check_sizes(temperatures_c.size(), out.size());
  const auto n = static_cast<std::ptrdiff_t>(temperatures_c.size());
  FirstError error;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = phase_matching_efficiency(crystal, fundamental, Celsius{temperatures_c[i]});
    } catch (...) {
      error.capture(i);
    }
  }
  error.rethrow();
}

void detected_variance_serial(const NoiseModel& model, std::span<const double> frequencies_hz, double angle_offset,
                              bool include_electronic, std::span<double> out) {
  check_sizes(frequencies_hz.size(), out.size());
  for (std::size_t i = 0; i < frequencies_hz.size(); ++i)
    out[i] = detected_variance(model, frequencies_hz[i], angle_offset, include_electronic);
}

void detected_variance_parallel(const NoiseModel& model, std::span<const double> frequencies_hz,
                                double angle_offset, bool include_electronic, std::span<double> out) {
  check_sizes(frequencies_hz.size(), out.size());
  const auto n = static_cast<std::ptrdiff_t>(frequencies_hz.size());
  FirstError error;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = detected_variance(model, frequencies_hz[i], angle_offset, include_electronic);
    } catch (...) {
      error.capture(i);
    }
  }
  error.rethrow();
}

void boyd_kleinman_grid_serial(std::span<const double> xi, std::span<const double> sigma, double abs_tolerance,
                               std::span<double> out) {
  check_sizes(xi.size() * sigma.size(), out.size());
  for (std::size_t i = 0; i < xi.size(); ++i)
    for (std::size_t j = 0; j < sigma.size(); ++j)
      out[i * sigma.size() + j] = boyd_kleinman_h(xi[i], sigma[j], abs_tolerance);
}

void boyd_kleinman_grid_parallel(std::span<const double> xi, std::span<const double> sigma, double abs_tolerance,
                                 std::span<double> out) {
  check_sizes(xi.size() * sigma.size(), out.size());
  const auto n = static_cast<std::ptrdiff_t>(xi.size() * sigma.size());
  const std::size_t cols = sigma.size();
  FirstError error;
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    try {
      const auto i = static_cast<std::size_t>(k) / cols;
      const auto j = static_cast<std::size_t>(k) % cols;
      out[k] = boyd_kleinman_h(xi[i], sigma[j], abs_tolerance);
    } catch (...) {
      error.capture(k);
    }
  }
  error.rethrow();
}

}  // namespace sqz::kernels
