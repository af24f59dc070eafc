#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "maslov/error.hpp"
#include "maslov/problem.hpp"
#include "maslov/propagation.hpp"
#include "oracles.hpp"

using namespace maslov;

namespace {

Vec ones(int n) { return Vec::Ones(n); }

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no maslov::Error thrown");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("Pöschl–Teller passes all hypotheses") {
  const Problem p = poeschl_teller(1.0, 2.0);
  const auto r = check_hypotheses(p, default_grid(p));
  CHECK(r.all_pass());
  CHECK(r.h2_min_eig_minus == doctest::Approx(1.0));
  CHECK(r.h2_min_eig_plus == doctest::Approx(1.0));
  CHECK(r.decay_rate_minus == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("negative constant potential fails H2") {
  const Problem p = constant_potential(-Mat::Identity(2, 2), ones(2));
  const auto r = evaluate_hypotheses(p, linspace(-10, 10, 201));
  CHECK_FALSE(r.h2_positive_limits);
  CHECK_FALSE(r.essential_positive);
  CHECK(r.h2_min_eig_minus == doctest::Approx(-1.0));
  CHECK(kind_of([&] { check_hypotheses(p, linspace(-10, 10, 201)); }) == ErrorKind::HypothesisViolation);
}

TEST_CASE("asymmetric potential fails H1") {
  auto V = [](double x) {
    Mat m = Mat::Identity(2, 2);
    m(0, 1) = oracle::sech(x);
    return m;
  };
  const Problem p = Problem::make("asym", ones(2), V, Mat::Identity(2, 2), Mat::Identity(2, 2));
  const auto r = evaluate_hypotheses(p, linspace(-10, 10, 201));
  CHECK_FALSE(r.h1_symmetric);
  CHECK(r.h1_max_residual > 0.5);
}

TEST_CASE("shape validation") {
  CHECK(kind_of([] { constant_potential(Mat::Identity(2, 2), ones(3)); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { constant_potential(Mat::Identity(1, 1), -ones(1)); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("sup norm of V") {
  const Problem pulse = sech_pulse_potential();
  CHECK(sup_norm_V(pulse, linspace(-20, 20, 4001)) == doctest::Approx(2.0).epsilon(1e-12));
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = 2;
  d(1, 1) = 5;
  CHECK(sup_norm_V(constant_potential(d, ones(2)), linspace(-1, 1, 11)) == doctest::Approx(5.0));
}

TEST_CASE("lambda_inf = sup|V| + margin") {
  CHECK(choose_lambda_inf(sech_pulse_potential()) == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(choose_lambda_inf(constant_potential(Mat::Identity(2, 2), ones(2))) == doctest::Approx(2.0));
  CHECK(choose_lambda_inf(poeschl_teller(1, 2)) == doctest::Approx(6.0).epsilon(1e-6));
}

TEST_CASE("gradient system builds V = 1 - 3 sech^2(x/2)") {
  const PulseProblem pp = scalar_pulse_system(ones(1));
  for (double x : {-3.0, -0.7, 0.0, 0.4, 2.5}) {
    CHECK(pp.pulse(x)(0) == doctest::Approx(oracle::pulse(x)));
    CHECK(pp.pulse_x(x)(0) == doctest::Approx(oracle::pulse_x(x)));
    CHECK(pp.second_derivative(x)(0) == doctest::Approx(oracle::pulse_xx(x)));
  }
  const Problem p = build_from_gradient_rd(pp);
  for (double x : {-12.0, -1.3, 0.0, 0.9, 6.0}) CHECK(p.V(x)(0, 0) == doctest::Approx(oracle::pulse_V(x)));
  CHECK(p.limit(Side::Minus)(0, 0) == doctest::Approx(1.0));
  CHECK(p.limit(Side::Plus)(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("decoupled double pulse is block diagonal with identity limits") {
  const Problem p = build_from_gradient_rd(scalar_pulse_system(ones(2)));
  REQUIRE(p.n() == 2);
  for (double x : {-2.0, 0.0, 1.5}) {
    const Mat v = p.V(x);
    CHECK(v(0, 1) == 0.0);
    CHECK(v(1, 0) == 0.0);
    CHECK(v(0, 0) == doctest::Approx(oracle::pulse_V(x)));
    CHECK(v(1, 1) == doctest::Approx(oracle::pulse_V(x)));
  }
  CHECK(p.limit(Side::Plus).isApprox(Mat::Identity(2, 2)));
}

TEST_CASE("homogeneous state gives a constant potential") {
  PulseProblem pp;
  pp.name = "rest";
  pp.diffusion = ones(1);
  pp.grad_f = [](const Vec& u) -> Vec { return -2.0 * u; };
  pp.hess_f = [](const Vec&) -> Mat { return Mat::Constant(1, 1, -2.0); };
  pp.pulse = [](double) { return Vec::Zero(1); };
  pp.pulse_x = pp.pulse;
  const Problem p = build_from_gradient_rd(pp);
  CHECK(p.V(-3.0)(0, 0) == doctest::Approx(2.0));
  CHECK(p.V(7.0)(0, 0) == doctest::Approx(2.0));
  // F with an unstable rest state: the essential-spectrum gate fires
  CHECK(kind_of([] { build_from_gradient_rd(scalar_pulse_system(ones(1), -1.0)); }) ==
        ErrorKind::HypothesisViolation);
}

TEST_CASE("non-steady pulse is rejected") {
  PulseProblem pp = scalar_pulse_system(ones(1));
  pp.pulse = [](double x) { return Vec::Constant(1, oracle::pulse(x) * 1.01); };
  CHECK(kind_of([&] { build_from_gradient_rd(pp); }) == ErrorKind::SteadyStateResidual);
}

TEST_CASE("build output tends to -hess F(0) at both ends") {
  for (double d : {0.5, 1.0, 3.0}) {
    const Problem p = build_from_gradient_rd(scalar_pulse_system(Vec::Constant(1, d)));
    CHECK(p.limit(Side::Minus)(0, 0) == doctest::Approx(1.0));
    CHECK(std::abs(p.V(-80)(0, 0) - 1.0) < 1e-10);
    CHECK(std::abs(p.V(80)(0, 0) - 1.0) < 1e-10);
  }
}

TEST_CASE("fitted tail and truncation point of the sech^2(x/2) pulse") {
  const Problem p = sech_pulse_potential();
  CHECK(p.tail(Side::Minus).rate == doctest::Approx(1.0).epsilon(1e-3));
  // 3 sech^2(x/2) ~ 12 e^{x}: 12 e^{x} = 1e-10
  const double expect = std::log(1e-10 / 12.0);
  CHECK(truncation_point(p, 1e-10, Side::Minus) == doctest::Approx(expect).epsilon(1e-2));
  CHECK(truncation_point(p, 1e-10, Side::Plus) == doctest::Approx(-expect).epsilon(1e-2));
  CHECK(truncation_point(constant_potential(Mat::Identity(1, 1), ones(1)), 1e-10, Side::Minus) == 0.0);
}

TEST_CASE("tabulated potential: interpolation and table-end truncation") {
  std::vector<double> g;
  std::vector<Mat> s;
  for (int i = 0; i <= 400; ++i) {
    const double x = -20.0 + 0.1 * i;
    g.push_back(x);
    s.push_back(Mat::Constant(1, 1, oracle::pulse_V(2 * x)));
  }
  const Problem p = tabulated_potential("t", ones(1), g, s);
  CHECK(p.V(0.05)(0, 0) == doctest::Approx(oracle::pulse_V(0.1)).epsilon(1e-3));
  CHECK(p.V(-35)(0, 0) == doctest::Approx(1.0));  // constant extension beyond the table
  CHECK(truncation_point(p, 1e-10, Side::Minus) == doctest::Approx(-20.0));

  // tail not converged at the table end
  std::vector<double> g2(g.begin() + 150, g.end() - 150);
  std::vector<Mat> s2(s.begin() + 150, s.end() - 150);
  const Problem short_table = tabulated_potential("t2", ones(1), g2, s2);
  CHECK(kind_of([&] { truncation_point(short_table, 1e-10, Side::Minus); }) == ErrorKind::Precondition);
}

TEST_CASE("tabulated CSV reader") {
  const std::string path = "tabulated_test_potential.csv";
  {
    std::ofstream out(path);
    out << "x,V11,V12,V21,V22\n";
    for (int i = 0; i <= 100; ++i) {
      const double x = -10 + 0.2 * i;
      const double v = 1.0 - 2.0 * oracle::sech(x) * oracle::sech(x);
      out << x << ',' << v << ",0,0," << 2 * v << '\n';
    }
  }
  Vec d(2);
  d << 1.0, 2.0;
  const Problem p = tabulated_potential_from_csv(path, d);
  CHECK(p.n() == 2);
  CHECK(p.V(0.0)(1, 1) == doctest::Approx(-2.0));
  CHECK(p.V(0.0)(0, 1) == 0.0);
  CHECK_THROWS(tabulated_potential_from_csv("does-not-exist.csv", d));
}

TEST_CASE("translation shifts the potential") {
  const Problem p = poeschl_teller(1, 2);
  const Problem q = p.translated(1.7);
  for (double x : {-2.0, 0.0, 3.0}) CHECK(q.V(x + 1.7)(0, 0) == doctest::Approx(p.V(x)(0, 0)));
}

TEST_CASE("block diagonal assembles blocks") {
  const Problem p = block_diagonal({poeschl_teller(1, 1), sech_pulse_potential()});
  CHECK(p.n() == 2);
  CHECK(p.V(0.3)(0, 0) == doctest::Approx(1 - 2 * std::pow(oracle::sech(0.3), 2)));
  CHECK(p.V(0.3)(1, 1) == doctest::Approx(oracle::pulse_V(0.3)));
}

TEST_CASE("random symmetric constant potentials: hypotheses match eigenvalue signs") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    Mat a(2, 2);
    a << g(rng), g(rng), g(rng), g(rng);
    const Mat v = 0.5 * (a + a.transpose());
    const auto r = evaluate_hypotheses(constant_potential(v, ones(2)), linspace(-5, 5, 21));
    CHECK(r.h2_positive_limits == (min_eigenvalue(v) > 0.0));
  }
}
