#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "parirl/envs.hpp"

using namespace parirl;

TEST_CASE("env ids and reset determinism") {
  CHECK_THROWS_AS(MoEnv::make("mo-bogus"), std::invalid_argument);

  MoEnv car = MoEnv::make("mo-car");
  EnvState s0 = car.reset(0);
  CHECK(s0.s == std::vector<double>{0.0, 0.0});
  CHECK(car.reset(0).s == s0.s);

  MoEnv car3 = MoEnv::make("mo-car3");
  EnvState c0 = car3.reset(7);
  REQUIRE(c0.s.size() == 6);
  for (int i = 0; i < 6; ++i) {
    CHECK(c0.s[i] >= car3.spec().s_lo[i]);
    CHECK(c0.s[i] <= car3.spec().s_hi[i]);
  }
}

TEST_CASE("mo-car reward closed forms") {
  MoEnv car = MoEnv::make("mo-car");

  EnvState s{{0.0, 2.0}, 0};
  auto out = car.step(s, std::vector<double>{0.0});
  CHECK(out.reward[0] == doctest::Approx(0.10).epsilon(1e-12));
  CHECK(out.reward[1] == doctest::Approx(0.30).epsilon(1e-12));

  EnvState s2{{0.0, 0.0}, 0};
  auto out2 = car.step(s2, std::vector<double>{1.0});
  CHECK(out2.reward[0] == doctest::Approx(0.00).epsilon(1e-12));
  CHECK(out2.reward[1] == doctest::Approx(0.15).epsilon(1e-12));
  // dynamics: v' = v + a*dt, x' = x + v'*dt
  CHECK(out2.next.s[1] == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(out2.next.s[0] == doctest::Approx(0.01).epsilon(1e-12));

  // action clamped before both reward and dynamics
  auto out3 = car.step(s2, std::vector<double>{4.0});
  CHECK(out3.reward[1] == doctest::Approx(0.15).epsilon(1e-12));
  CHECK(out3.next.s[1] == doctest::Approx(0.1).epsilon(1e-12));

  // velocity clamp at +-5
  EnvState fast{{0.0, 5.0}, 0};
  auto out4 = car.step(fast, std::vector<double>{1.0});
  CHECK(out4.next.s[1] == 5.0);
}

TEST_CASE("mo-car reward identities on random in-bounds states") {
  MoEnv car = MoEnv::make("mo-car");
  Rng rng(4);
  for (int i = 0; i < 500; ++i) {
    EnvState s{{rng.uniform(-100, 100), rng.uniform(-5, 5)}, 0};
    double a = rng.uniform(-2, 2);
    auto out = car.step(s, std::span<const double>(&a, 1));
    double ac = clamp(a, -1, 1);
    CHECK(out.reward[0] == doctest::Approx(0.05 * s.s[1]).epsilon(1e-12));
    CHECK(out.reward[1] == doctest::Approx(0.3 - 0.15 * ac * ac).epsilon(1e-12));
    CHECK(all_finite(out.next.s));
    CHECK(all_finite(out.reward));
  }
}

TEST_CASE("mo-car3 rewards are the velocities") {
  MoEnv env = MoEnv::make("mo-car3");
  EnvState s{{0, 0, 0, 1.0, 0.0, 0.0}, 0};
  auto out = env.step(s, std::vector<double>{0.0, 0.0, 0.0});
  CHECK(out.reward == std::vector<double>{1.0, 0.0, 0.0});
}

TEST_CASE("mo-point2d rewards penalize action energy") {
  MoEnv env = MoEnv::make("mo-point2d");
  EnvState s{{0, 0, 2.0, -1.0}, 0};
  auto out = env.step(s, std::vector<double>{1.0, 1.0});
  CHECK(out.reward[0] == doctest::Approx(2.0 - 1.0));
  CHECK(out.reward[1] == doctest::Approx(-1.0 - 1.0));
}

TEST_CASE("horizon: done exactly at step T") {
  MoEnv car = MoEnv::make("mo-car");
  EnvState s = car.reset(0);
  std::vector<double> a = {0.5};
  for (int t = 0; t < car.spec().horizon; ++t) {
    auto out = car.step(s, a);
    CHECK(out.done == (t == car.spec().horizon - 1));
    s = out.next;
  }
  CHECK(s.t == car.spec().horizon);
}

TEST_CASE("NaN state or action is a hard failure") {
  MoEnv car = MoEnv::make("mo-car");
  EnvState bad{{std::nan(""), 0.0}, 0};
  CHECK_THROWS_AS(car.step(bad, std::vector<double>{0.0}), std::runtime_error);
  EnvState ok = car.reset(0);
  CHECK_THROWS_AS(car.step(ok, std::vector<double>{std::nan("")}), std::runtime_error);
}

TEST_CASE("scalarize: basis, mixtures, linearity, validation") {
  std::vector<double> r = {0.1, 0.3};
  CHECK(scalarize(r, std::vector<double>{1.0, 0.0}) == doctest::Approx(0.1));
  CHECK(scalarize(r, std::vector<double>{0.5, 0.5}) == doctest::Approx(0.2));
  CHECK(scalarize(std::vector<double>{-7.0, 42.0}, std::vector<double>{0.0, 1.0}) ==
        doctest::Approx(42.0));

  std::vector<double> w1 = {0.9, 0.1}, w2 = {0.2, 0.8};
  double alpha = 0.3;
  std::vector<double> mix = {alpha * w1[0] + (1 - alpha) * w2[0],
                             alpha * w1[1] + (1 - alpha) * w2[1]};
  CHECK(scalarize(r, mix) ==
        doctest::Approx(alpha * scalarize(r, w1) + (1 - alpha) * scalarize(r, w2)));

  CHECK_THROWS_AS(scalarize(r, std::vector<double>{1.0}), std::invalid_argument);
  CHECK_THROWS_AS(scalarize(r, std::vector<double>{0.7, 0.7}), std::invalid_argument);
  CHECK_THROWS_AS(scalarize(r, std::vector<double>{-0.2, 1.2}), std::invalid_argument);
}

TEST_CASE("uniform transition sampling: determinism, bounds, moments") {
  MoEnv car = MoEnv::make("mo-car");
  Rng r1(99), r2(99);
  auto b1 = car.sample_uniform_transitions(512, r1);
  auto b2 = car.sample_uniform_transitions(512, r2);
  REQUIRE(b1.size() == 512);
  for (size_t i = 0; i < b1.size(); ++i) {
    CHECK(b1[i].s == b2[i].s);
    CHECK(b1[i].a == b2[i].a);
    CHECK(b1[i].s_next == b2[i].s_next);
    for (int d = 0; d < 2; ++d) {
      CHECK(b1[i].s[d] >= car.spec().s_lo[d]);
      CHECK(b1[i].s[d] <= car.spec().s_hi[d]);
      CHECK(b1[i].s_next[d] >= car.spec().s_lo[d]);
      CHECK(b1[i].s_next[d] <= car.spec().s_hi[d]);
    }
    CHECK(b1[i].a[0] >= -1.0);
    CHECK(b1[i].a[0] <= 1.0);
  }

  // empirical mean of each coordinate near its interval midpoint (5% of half-width)
  Rng r3(7);
  auto big = car.sample_uniform_transitions(100000, r3);
  for (int d = 0; d < 2; ++d) {
    double mean = 0.0;
    for (const auto& tr : big) mean += tr.s[d];
    mean /= static_cast<double>(big.size());
    double half = 0.5 * (car.spec().s_hi[d] - car.spec().s_lo[d]);
    double mid = 0.5 * (car.spec().s_hi[d] + car.spec().s_lo[d]);
    CHECK(std::fabs(mean - mid) < 0.05 * half);
  }
}
