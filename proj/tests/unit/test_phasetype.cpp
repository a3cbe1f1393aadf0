#include <catch2/catch_amalgamated.hpp>

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <vector>

#include "rgrst/error.hpp"
#include "rgrst/numeric.hpp"
#include "rgrst/phasetype.hpp"
#include "rgrst/rng.hpp"

using namespace rgrst;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Random Coxian with forward rate below the total rate, so exits are nonnegative.
CoxianParams random_valid(int d, std::uint64_t seed) {
  StreamRng rng(seed, 0);
  Eigen::VectorXd s(2 * d - 1);
  for (int i = 0; i < d; ++i) {
    s[2 * i] = -1.0 + 2.0 * rng.uniform();
    if (i + 1 < d) s[2 * i + 1] = s[2 * i] + std::log(0.05 + 0.9 * rng.uniform());
  }
  return {d, s};
}

}  // namespace

TEST_CASE("generator entries follow the exponential transform", "[phasetype]") {
  CHECK(build_generator(CoxianParams(1, Eigen::VectorXd::Zero(1)))(0, 0) == -1.0);

  const Eigen::MatrixXd S2 = build_generator(CoxianParams(2, Eigen::VectorXd::Zero(3)));
  Eigen::MatrixXd want(2, 2);
  want << -1, 1, 0, -1;
  CHECK(S2 == want);

  StreamRng rng(7, 0);
  Eigen::VectorXd s(5);
  for (int i = 0; i < 5; ++i) s[i] = rng.normal();
  const Eigen::MatrixXd S3 = build_generator(CoxianParams(3, s));
  CHECK(S3(0, 0) == -std::exp(s[0]));
  CHECK(S3(0, 1) == std::exp(s[1]));
  CHECK(S3(0, 2) == 0.0);
  CHECK(S3(1, 0) == 0.0);
  CHECK(S3(1, 1) == -std::exp(s[2]));
  CHECK(S3(1, 2) == std::exp(s[3]));
  CHECK(S3(2, 0) == 0.0);
  CHECK(S3(2, 1) == 0.0);
  CHECK(S3(2, 2) == -std::exp(s[4]));

  CHECK_THROWS_AS(build_generator(CoxianParams(2, Eigen::VectorXd::Zero(2))), ParameterError);
}

TEST_CASE("validity flag tracks row sums", "[phasetype]") {
  Eigen::VectorXd s(3);
  s << 0.0, 0.5, 0.0;  // forward rate e^0.5 exceeds total rate 1
  CHECK_FALSE(generator_valid(build_generator(CoxianParams(2, s))));
  CHECK(generator_valid(build_generator(random_valid(3, 11))));
}

TEST_CASE("matrix exponential special cases", "[phasetype]") {
  Eigen::MatrixXd S1(1, 1);
  S1 << -1.0;
  CHECK_THAT(mat_exp(S1, 1.0)(0, 0), WithinAbs(std::exp(-1.0), 1e-15));

  const Eigen::MatrixXd S = build_generator(random_valid(4, 3));
  CHECK(mat_exp(S, 0.0).isApprox(Eigen::MatrixXd::Identity(4, 4), 0.0));

  // Distinct eigenvalues a, c: off-diagonal b (e^{-at} - e^{-ct}) / (c - a).
  const double a = 0.7, b = 0.4, c = 1.9, t = 2.3;
  Eigen::MatrixXd S2(2, 2);
  S2 << -a, b, 0, -c;
  const Eigen::MatrixXd E = mat_exp(S2, t);
  CHECK_THAT(E(0, 0), WithinAbs(std::exp(-a * t), 1e-14));
  CHECK_THAT(E(1, 1), WithinAbs(std::exp(-c * t), 1e-14));
  CHECK_THAT(E(0, 1), WithinAbs(b * (std::exp(-a * t) - std::exp(-c * t)) / (c - a), 1e-14));
  CHECK(E(1, 0) == 0.0);

  Eigen::MatrixXd bad = S2;
  bad(0, 1) = std::nan("");
  CHECK_THROWS_AS(mat_exp(bad, 1.0), NumericError);
}

TEST_CASE("matrix exponential agrees with an independent Pade implementation", "[phasetype]") {
  for (int d = 1; d <= 5; ++d) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      StreamRng rng(100 + seed, static_cast<std::uint64_t>(d));
      Eigen::VectorXd s(2 * d - 1);
      for (int i = 0; i < s.size(); ++i) s[i] = rng.normal();
      const Eigen::MatrixXd S = build_generator(CoxianParams(d, s));
      for (double t : {0.01, 0.5, 3.0, 40.0, 1000.0}) {
        const Eigen::MatrixXd ours = mat_exp(S, t);
        const Eigen::MatrixXd ref = (S * t).exp();
        INFO("d=" << d << " seed=" << seed << " t=" << t);
        CHECK((ours - ref).cwiseAbs().maxCoeff() <= 1e-12);
      }
    }
  }
}

TEST_CASE("matrix exponential semigroup property", "[phasetype]") {
  for (int d = 1; d <= 5; ++d) {
    const Eigen::MatrixXd S = build_generator(random_valid(d, 40 + d));
    for (double t : {0.3, 7.0, 50.0}) {
      for (double u : {0.1, 12.0, 50.0}) {
        const Eigen::MatrixXd lhs = mat_exp(S, t + u);
        const Eigen::MatrixXd rhs = mat_exp(S, t) * mat_exp(S, u);
        CHECK((lhs - rhs).cwiseAbs().rowwise().sum().maxCoeff() <= 1e-10);
      }
    }
  }
}

TEST_CASE("survival closed forms", "[phasetype]") {
  CHECK_THAT(ph_survival(CoxianParams::exponential(0.0), 2.0), WithinRel(std::exp(-2.0), 1e-14));
  CHECK(ph_survival(random_valid(3, 5), 0.0) == 1.0);

  // Erlang-2: total rate equals forward rate in phase 1, so no early exit.
  for (double lam : {0.3, 1.0, 2.5}) {
    const double l = std::log(lam);
    Eigen::VectorXd s(3);
    s << l, l, l;
    for (double t : {0.0, 0.4, 1.0, 3.7, 12.0}) {
      CHECK_THAT(ph_survival(CoxianParams(2, s), t), WithinAbs((1 + lam * t) * std::exp(-lam * t), 1e-13));
    }
  }
}

TEST_CASE("survival stays in [0,1] and decreases", "[phasetype]") {
  for (int d = 1; d <= 5; ++d) {
    const CoxianParams p = random_valid(d, 70 + d);
    double prev = 1.0;
    for (int i = 0; i < 1000; ++i) {
      const double t = 100.0 * i / 999.0;
      const double v = ph_survival(p, t);
      REQUIRE(v >= 0.0);
      REQUIRE(v <= 1.0);
      REQUIRE(v <= prev + 1e-15);
      prev = v;
    }
  }
}

TEST_CASE("density special cases and finite differences", "[phasetype]") {
  CHECK_THAT(ph_pdf(CoxianParams::exponential(0.0), 0.0), WithinAbs(1.0, 1e-15));
  CHECK_THAT(ph_pdf(CoxianParams::exponential(std::log(2.0)), 1.0), WithinRel(2.0 * std::exp(-2.0), 1e-14));

  const CoxianParams p = random_valid(3, 9);
  for (double t : {0.1, 0.8, 2.0, 6.0}) {
    const double h = 1e-6;
    const double fd = -(ph_survival(p, t + h) - ph_survival(p, t - h)) / (2 * h);
    CHECK_THAT(ph_pdf(p, t), WithinAbs(fd, 1e-8));
  }
}

TEST_CASE("density integrates to the CDF", "[phasetype]") {
  for (int d = 1; d <= 5; ++d) {
    const CoxianParams p = random_valid(d, 90 + d);
    const double T = 15.0;
    const auto q = num::integrate([&](double t) { return ph_pdf(p, t); }, 0.0, T);
    CHECK_THAT(q.value, WithinAbs(1.0 - ph_survival(p, T), 1e-6));
  }
}

TEST_CASE("scalar closed form matches the matrix route", "[phasetype]") {
  for (double s0 : {-2.0, 0.0, 0.02, 1.5}) {
    const CoxianParams p = CoxianParams::exponential(s0);
    const Eigen::MatrixXd S = build_generator(p);
    for (double t : {0.0, 0.3, 5.0, 40.0}) {
      const Eigen::MatrixXd E = mat_exp(S, t);
      CHECK_THAT(ph_survival(p, t), WithinAbs(E(0, 0), 1e-12));
      CHECK_THAT(ph_pdf(p, t), WithinAbs(-E(0, 0) * S(0, 0), 1e-12));
    }
  }
}

TEST_CASE("sorted propagation matches pointwise evaluation", "[phasetype]") {
  const Eigen::MatrixXd S = build_generator(random_valid(4, 21));
  std::vector<double> times{0.0, 0.0, 0.25, 1.0, 1.0, 2.0, 3.0, 7.5, 30.0, 400.0};
  const auto seq = phase_terms_sorted(S, times);
  for (std::size_t i = 0; i < times.size(); ++i) {
    const auto one = phase_terms(S, times[i]);
    // compare in a shared scale
    CHECK_THAT(seq[i].survival * std::exp(seq[i].log_scale - one.log_scale), WithinRel(one.survival, 1e-10));
    CHECK_THAT(seq[i].derivative * std::exp(seq[i].log_scale - one.log_scale),
               WithinRel(one.derivative, 1e-10));
  }
  std::vector<double> unsorted{1.0, 0.5};
  CHECK_THROWS_AS(phase_terms_sorted(S, unsorted), ParameterError);
}

TEST_CASE("large times stay finite in log scale", "[phasetype]") {
  const Eigen::MatrixXd S = build_generator(random_valid(3, 2));
  const auto terms = phase_terms(S, 5000.0);
  CHECK(std::isfinite(terms.log_scale));
  CHECK(terms.survival > 0.0);
  CHECK(terms.derivative < 0.0);
}

TEST_CASE("exponential MLE from simulated draws", "[phasetype][fit]") {
  std::vector<double> x(10000);
  StreamRng rng(2024, 0);
  for (auto& v : x) v = -std::log(rng.uniform());
  const auto fit = ph_fit_mle(x, 1);
  CHECK(fit.valid);
  CHECK_THAT(std::exp(fit.params.s[0]), WithinAbs(1.0, 0.05));
  for (const auto& st : fit.starts) CHECK(fit.log_likelihood >= st.start_log_likelihood);
}

TEST_CASE("single observation gives rate 1/t", "[phasetype][fit]") {
  std::vector<double> x{2.5};
  const auto fit = ph_fit_mle(x, 1);
  CHECK_THAT(std::exp(fit.params.s[0]), WithinRel(0.4, 1e-3));
}

TEST_CASE("nested dimensions order the likelihood on Erlang data", "[phasetype][fit]") {
  std::vector<double> x(2000);
  StreamRng rng(77, 0);
  for (auto& v : x) v = -std::log(rng.uniform()) - std::log(rng.uniform());
  const auto f1 = ph_fit_mle(x, 1);
  const auto f2 = ph_fit_mle(x, 2);
  CHECK(f2.log_likelihood > f1.log_likelihood);
  CHECK(f2.valid);
}

TEST_CASE("fitter rejects bad samples", "[phasetype][fit]") {
  std::vector<double> empty;
  CHECK_THROWS_AS(ph_fit_mle(empty, 1), DataError);
  std::vector<double> neg{1.0, -2.0};
  CHECK_THROWS_AS(ph_fit_mle(neg, 1), DataError);
  std::vector<double> ok{1.0};
  CHECK_THROWS_AS(ph_fit_mle(ok, 6), ParameterError);
}

TEST_CASE("fitter is deterministic across thread counts", "[phasetype][fit]") {
  std::vector<double> x(500);
  StreamRng rng(5, 0);
  for (auto& v : x) v = -std::log(rng.uniform()) * 2.0;
  const auto a = ph_fit_mle(x, 2);
  const auto b = ph_fit_mle(x, 2);
  CHECK(a.log_likelihood == b.log_likelihood);
  CHECK(a.params.s == b.params.s);
}

TEST_CASE("lognormal moment fit", "[phasetype]") {
  std::vector<double> all_e(5, std::exp(1.0));
  auto f = lognormal_fit(all_e);
  CHECK_THAT(f.mu, WithinAbs(1.0, 1e-15));
  CHECK_THAT(f.sigma, WithinAbs(0.0, 1e-15));

  std::vector<double> two{1.0, std::exp(2.0)};
  f = lognormal_fit(two);
  CHECK_THAT(f.mu, WithinAbs(1.0, 1e-15));
  CHECK_THAT(f.sigma, WithinAbs(1.0, 1e-15));

  std::vector<double> draws(10000);
  StreamRng rng(31, 0);
  for (auto& v : draws) v = std::exp(2.96 + 0.81 * rng.normal());
  f = lognormal_fit(draws);
  CHECK_THAT(f.mu, WithinAbs(2.96, 0.05));
  CHECK_THAT(f.sigma, WithinAbs(0.81, 0.05));

  std::vector<double> bad{1.0, 0.0};
  CHECK_THROWS_AS(lognormal_fit(bad), DataError);
}
