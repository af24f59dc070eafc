#include <doctest.h>

#include <cmath>
#include <random>

#include "maslov/error.hpp"
#include "maslov/maslov.hpp"
#include "oracles.hpp"

using namespace maslov;

namespace {

Problem double_pulse() { return block_diagonal({sech_pulse_potential(), sech_pulse_potential()}); }

std::function<double(double)> scalar_V(const Problem& p) {
  return [p](double x) { return p.V(x)(0, 0); };
}

}  // namespace

TEST_CASE("pulse: single conjugate point at the centre") {
  const auto cr = find_conjugate_points(sech_pulse_potential(), 20.0);
  REQUIRE(cr.size() == 1);
  CHECK(std::abs(cr[0].location) < 1e-8);
  CHECK(cr[0].multiplicity == 1);
  CHECK(cr[0].sign_change);
  // orthonormal frame at s = 0 is (0, ±1): Q = 1
  CHECK(cr[0].form_eigenvalues(0) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("nodeless ground state: no conjugate points") {
  CHECK(find_conjugate_points(poeschl_teller(1, 1), 20.0).empty());
  CHECK(find_conjugate_points(constant_potential(Mat::Identity(2, 2), Vec::Ones(2)), 10.0).empty());
}

TEST_CASE("conjugate points agree with Sturm nodes of a shooting oracle") {
  for (auto [c, m] : {std::pair{0.5, 2.0}, std::pair{1.0, 2.0}, std::pair{2.0, 3.0}}) {
    const Problem p = poeschl_teller(c, m);
    const double xm = truncation_point(p);
    const auto nodes = oracle::shooting_nodes(scalar_V(p), c, 0.0, xm, 10.0);
    MaslovControls mc;
    mc.x_min = xm;
    const auto cr = find_conjugate_points(p, 10.0, mc);
    REQUIRE(cr.size() == nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) CHECK(std::abs(cr[i].location - nodes[i]) < 1e-6);
  }
}

TEST_CASE("double pulse: multiplicity 2 without a sign change") {
  const auto cr = find_conjugate_points(double_pulse(), 20.0);
  REQUIRE(cr.size() == 1);
  CHECK(cr[0].multiplicity == 2);
  CHECK_FALSE(cr[0].sign_change);
  CHECK(std::abs(cr[0].location) < 1e-6);
  REQUIRE(cr[0].form_eigenvalues.size() == 2);
  CHECK(cr[0].form_eigenvalues(0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(cr[0].form_eigenvalues(1) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("crossing form on the s-axis is the Gram form of Y for D = I") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  const Problem p = constant_potential(Mat::Identity(2, 2), Vec::Ones(2));
  for (int t = 0; t < 100; ++t) {
    Mat y(2, 2);
    y << g(rng), g(rng), g(rng), g(rng);
    Mat f(4, 2);
    f << Mat::Zero(2, 2), y;
    const Mat q = crossing_form_s(p, f, Mat::Identity(2, 2));
    CHECK((q - y.transpose() * y).norm() < 1e-12);
  }
}

TEST_CASE("crossing form on the s-axis scales with D^{-1}") {
  Vec d(1);
  d << 4.0;
  const Problem p = constant_potential(Mat::Identity(1, 1), d);
  Mat f(2, 1);
  f << 0.0, 1.0;
  CHECK(crossing_form_s(p, f, Mat::Identity(1, 1))(0, 0) == doctest::Approx(0.25));
}

TEST_CASE("crossing form on the lambda-axis is the L2 norm of the eigenfunction") {
  const Problem p = sech_pulse_potential();
  const double L = 5.0;
  MaslovControls mc;
  const MaslovReport r = maslov_rectangle(p, L, mc);
  REQUIRE(r.lambda_crossings.size() == 1);
  const double l0 = r.lambda_crossings[0].location;
  CHECK(r.lambda_crossings[0].form_eigenvalues(0) > 0.0);

  // test-side: u with u'(L) = ±1 (the orthonormal frame at X = 0), Q = ∫ u^2
  const double xm = r.domain.x_min;
  const int steps = 200000;
  const double h = (L - xm) / steps;
  const double nu = std::sqrt(1.0 - l0);
  std::vector<double> us(steps + 1);
  double u = 1e-8, w = nu * 1e-8, x = xm;
  us[0] = u;
  auto rhs = [&](double xx, double uu) { return (oracle::pulse_V(xx) - l0) * uu; };
  for (int i = 0; i < steps; ++i) {
    const double k1u = w, k1w = rhs(x, u);
    const double k2u = w + h / 2 * k1w, k2w = rhs(x + h / 2, u + h / 2 * k1u);
    const double k3u = w + h / 2 * k2w, k3w = rhs(x + h / 2, u + h / 2 * k2u);
    const double k4u = w + h * k3w, k4w = rhs(x + h, u + h * k3u);
    u += h / 6 * (k1u + 2 * k2u + 2 * k3u + k4u);
    w += h / 6 * (k1w + 2 * k2w + 2 * k3w + k4w);
    x += h;
    us[i + 1] = u;
  }
  double integral = 0.0;
  for (int i = 0; i < steps; ++i) integral += 0.5 * h * (us[i] * us[i] + us[i + 1] * us[i + 1]);
  const double expect = integral / (w * w);
  CHECK(r.lambda_crossings[0].form_eigenvalues(0) == doctest::Approx(expect).epsilon(1e-3));
}

TEST_CASE("rectangle: pulse L = 20") {
  const auto r = maslov_rectangle(sech_pulse_potential(), 20.0);
  CHECK(r.a1 == 0);
  CHECK(r.a2 == 1);
  CHECK(r.a3 == -1);
  CHECK(r.a4 == 0);
  CHECK(r.identity_holds());
  CHECK(r.oracle_agrees());
  CHECK(r.lambda_inf == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(r.max_lagrangian_residual <= 1e-8);
}

TEST_CASE("rectangle: Pöschl–Teller (1,1) L = 20 and (1,2) L = 30") {
  const auto a = maslov_rectangle(poeschl_teller(1, 1), 20.0);
  CHECK(a.a2 == 0);
  CHECK(a.a3 == 0);
  CHECK(a.identity_holds());
  const auto b = maslov_rectangle(poeschl_teller(1, 2), 30.0);
  CHECK(b.a2 == 1);
  CHECK(b.a3 == -1);
  REQUIRE(b.lambda_crossings.size() == 1);
  CHECK(b.lambda_crossings[0].location == doctest::Approx(-3.0).epsilon(1e-6));
  CHECK(b.oracle_agrees());
}

TEST_CASE("rectangle: double pulse counts the double eigenvalue twice") {
  const auto r = maslov_rectangle(double_pulse(), 10.0);
  CHECK(r.a2 == 2);
  CHECK(r.a3 == -2);
  CHECK(r.identity_holds());
  CHECK(r.oracle_agrees());
}

TEST_CASE("Morse index via conjugate points") {
  CHECK(morse_index_via_maslov(sech_pulse_potential()).morse == 1);
  CHECK(morse_index_via_maslov(poeschl_teller(1, 2)).morse == 1);
  CHECK(morse_index_via_maslov(poeschl_teller(0.5, 2)).morse == 2);
  CHECK(morse_index_via_maslov(poeschl_teller(1, 1)).morse == 0);
  const auto m = morse_index_via_maslov(double_pulse());
  CHECK(m.morse == 2);
  // counts are non-decreasing in L
  for (std::size_t i = 1; i < m.counts.size(); ++i) CHECK(m.counts[i] >= m.counts[i - 1]);
}

TEST_CASE("translation equivariance") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ua(-3.0, 3.0);
  const Problem base = poeschl_teller(0.5, 2);
  const auto c0 = find_conjugate_points(base, 12.0);
  for (int t = 0; t < 4; ++t) {
    const double a = ua(rng);
    const auto c1 = find_conjugate_points(base.translated(a), 12.0 + a);
    REQUIRE(c1.size() == c0.size());
    for (std::size_t i = 0; i < c0.size(); ++i) CHECK(std::abs(c1[i].location - c0[i].location - a) < 1e-6);
  }
}

TEST_CASE("block additivity of conjugate points") {
  const Problem a = poeschl_teller(0.5, 2), b = sech_pulse_potential();
  const auto ca = find_conjugate_points(a, 10.0);
  const auto cb = find_conjugate_points(b, 10.0);
  const auto cab = find_conjugate_points(block_diagonal({a, b}), 10.0);
  int ma = 0, mb = 0, mab = 0;
  for (const auto& c : ca) ma += c.multiplicity;
  for (const auto& c : cb) mb += c.multiplicity;
  for (const auto& c : cab) mab += c.multiplicity;
  CHECK(mab == ma + mb);
}

TEST_CASE("L must lie inside the domain") {
  CHECK_THROWS_AS(find_conjugate_points(sech_pulse_potential(), -100.0), Error);
}
