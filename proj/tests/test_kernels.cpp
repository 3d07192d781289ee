#include <doctest.h>

#include <vector>

#include "sqz/errors.hpp"
#include "sqz/kernels.hpp"
#include "sqz/measurement.hpp"
#include "support.hpp"

using namespace sqz;

TEST_CASE("tuning kernel: parallel equals serial") {
  const auto& c = test::paper_bench().opo_cavity.crystal;
  const OpticalFieldSpec pump(1064e-9, 0.0);
  std::vector<double> t(5001);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 10.0 + 0.01 * static_cast<double>(i);
  std::vector<double> a(t.size()), b(t.size());
  kernels::tuning_efficiency_serial(c, pump, t, a);
  kernels::tuning_efficiency_parallel(c, pump, t, b);
  CHECK(a == b);
  for (std::size_t i = 0; i < t.size(); i += 97)
    CHECK(a[i] == phase_matching_efficiency(c, pump, Celsius{t[i]}));
}

TEST_CASE("spectrum kernel: parallel equals serial") {
  const auto m = test::paper_bench().noise_model();
  const auto f = log_spaced(1.0, 1e9, 20000);
  for (bool el : {false, true})
    for (double offset : {0.0, 0.3, pi / 2}) {
      std::vector<double> a(f.size()), b(f.size());
      kernels::detected_variance_serial(m, f, offset, el, a);
      kernels::detected_variance_parallel(m, f, offset, el, b);
      CHECK(a == b);
      CHECK(a[1234] == detected_variance(m, f[1234], offset, el));
    }
}

TEST_CASE("focusing kernel: parallel equals serial") {
  std::vector<double> xi, sigma;
  for (int i = 1; i <= 40; ++i) xi.push_back(0.1 * i);
  for (int j = 0; j <= 30; ++j) sigma.push_back(0.05 * j);
  std::vector<double> a(xi.size() * sigma.size()), b(a.size());
  kernels::boyd_kleinman_grid_serial(xi, sigma, 1e-9, a);
  kernels::boyd_kleinman_grid_parallel(xi, sigma, 1e-9, b);
  CHECK(a == b);
  CHECK(a[3 * sigma.size() + 7] == boyd_kleinman_h(xi[3], sigma[7], 1e-9));
}

TEST_CASE("kernels rethrow the first failing element") {
  const std::vector<double> xi{1.0, -1.0, 2.0, 0.0};
  const std::vector<double> sigma{0.5};
  std::vector<double> out(4);
  try {
    kernels::boyd_kleinman_grid_parallel(xi, sigma, 1e-9, out);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::domain);
    CHECK(std::string(e.what()).find("-1") != std::string::npos);
  }
  const auto m = test::paper_bench().noise_model();
  const std::vector<double> f{1e3, -5.0, 2e3};
  std::vector<double> o(3);
  CHECK_THROWS_AS(kernels::detected_variance_parallel(m, f, 0.0, false, o), Error);
}

TEST_CASE("thread count is positive") { CHECK(kernels::max_threads() >= 1); }
