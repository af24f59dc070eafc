#include <doctest.h>

#include <cmath>

#include "maslov/error.hpp"
#include "maslov/spectral.hpp"
#include "oracles.hpp"

using namespace maslov;

TEST_CASE("banded FD eigenvalues match a dense solve") {
  const Problem p = sech_pulse_potential();
  const auto band = fd_eigenvalues(p, -15.0, 10.0, 0.05, 1.0);
  const auto dense = oracle::dense_fd(oracle::pulse_V, -15.0, 10.0, 0.05);
  REQUIRE(band.size() >= 2);
  for (std::size_t i = 0; i < band.size(); ++i) CHECK(band[i] == doctest::Approx(dense(i)).epsilon(1e-10));
}

TEST_CASE("FD matrix is exactly symmetric") {
  Vec d(2);
  d << 1.0, 2.5;
  auto V = [](double x) -> Mat {
    Mat m(2, 2);
    m << 1.0, 0.3 * oracle::sech(x), 0.3 * oracle::sech(x), 2.0;
    return m;
  };
  const Mat lim = V(1e3);
  const Problem p = Problem::make("coupled", d, V, lim, lim);
  const Mat m = fd_matrix(p, -3.0, 3.0, 0.1);
  CHECK((m - m.transpose()).norm() == 0.0);
}

TEST_CASE("H_L levels: Pöschl–Teller and pulse at L = 30") {
  const auto pt = eigenvalues_HL(poeschl_teller(1, 2), 30.0);
  REQUIRE(!pt.eigenvalues.empty());
  CHECK(std::abs(pt.eigenvalues[0] - oracle::pt_levels(1, 2)[0]) < 1e-4);

  const auto pu = eigenvalues_HL(sech_pulse_potential(), 30.0);
  REQUIRE(!pu.eigenvalues.empty());
  CHECK(std::abs(pu.eigenvalues[0] + 1.25) < 1e-4);
  // the kernel eigenvalue of H sits within its error bar of 0 on H_30
  CHECK(pu.kernel_ambiguous.size() == 1);
  CHECK(pu.morse == 1);
}

TEST_CASE("Richardson extrapolation agrees with a dense test-side oracle") {
  const auto r = spectrum_on_interval(sech_pulse_potential(), -20.0, 20.0);
  const double ref = oracle::dense_fd_richardson(oracle::pulse_V, -20.0, 20.0, 0.02, 0);
  CHECK(r.eigenvalues[0] == doctest::Approx(ref).epsilon(1e-9));
}

TEST_CASE("second-order h-convergence") {
  const Problem p = poeschl_teller(1, 2);
  const double exact = -3.0;
  const double e1 = fd_eigenvalues(p, -15, 15, 0.1, 0.0)[0] - exact;
  const double e2 = fd_eigenvalues(p, -15, 15, 0.05, 0.0)[0] - exact;
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("whole-line Morse index") {
  CHECK(morse_whole_line(sech_pulse_potential()).morse == 1);
  CHECK(morse_whole_line(poeschl_teller(0.5, 2)).morse == 2);
  CHECK(morse_whole_line(poeschl_teller(1, 1)).morse == 0);
  CHECK(morse_whole_line(block_diagonal({sech_pulse_potential(), sech_pulse_potential()})).morse == 2);
  CHECK(morse_whole_line(constant_potential(Mat::Identity(1, 1), Vec::Ones(1))).morse == 0);
}

TEST_CASE("Pöschl–Teller levels on a large interval") {
  for (auto [c, m] : {std::pair{1.0, 2.0}, std::pair{0.5, 2.0}, std::pair{5.0, 2.0}}) {
    const auto r = spectrum_on_interval(poeschl_teller(c, m), -40, 40);
    const auto lv = oracle::pt_levels(c, m);
    REQUIRE(r.eigenvalues.size() >= lv.size());
    for (std::size_t j = 0; j < lv.size(); ++j) CHECK(std::abs(r.eigenvalues[j] - lv[j]) < 1e-4);
  }
}

TEST_CASE("monotonicity of lambda_1(L) where decrements are resolvable") {
  const auto t = eigenvalue_monotonicity(sech_pulse_potential(), 1, {1.0, 2.0, 3.0, 4.0});
  CHECK(t.monotone());
  for (std::size_t i = 1; i < t.rows.size(); ++i) CHECK(t.rows[i].lambda < t.rows[i - 1].lambda);
}

TEST_CASE("monotonicity needs a discrete eigenvalue") {
  CHECK_THROWS_AS(eigenvalue_monotonicity(constant_potential(Mat::Identity(1, 1), Vec::Ones(1)), 1, {5, 10}),
                  Error);
}

TEST_CASE("bad discretisation arguments") {
  CHECK_THROWS_AS(fd_eigenvalues(poeschl_teller(1, 1), 1.0, -1.0, 0.1, 0.0), Error);
  CHECK_THROWS_AS(fd_eigenvalues(poeschl_teller(1, 1), -1.0, 1.0, -0.1, 0.0), Error);
}
