#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "scsc/recursion.hpp"
#include "scsc/rng.hpp"

using namespace scsc;

TEST_CASE("coupling matrix structure") {
  const auto A32 = coupling_matrix(3, 2);
  CHECK(A32.row(0) == std::vector<double>{0.5, 0.5, 0.0, 0.0});
  CHECK(A32.row(1) == std::vector<double>{0.0, 0.5, 0.5, 0.0});
  CHECK(A32.row(2) == std::vector<double>{0.0, 0.0, 0.5, 0.5});

  const auto I4 = coupling_matrix(4, 1);
  for (int i = 0; i < 4; ++i) {
    auto r = I4.row(i);
    for (int j = 0; j < 4; ++j) CHECK(r[static_cast<std::size_t>(j)] == (i == j ? 1.0 : 0.0));
  }

  for (auto [L, w] : {std::pair{5, 3}, {17, 4}, {200, 8}}) {
    const auto A = coupling_matrix(L, w);
    for (int i = 0; i < L; ++i) {
      double s = 0;
      for (double x : A.row(i)) s += x;
      CHECK_THAT(s, Catch::Matchers::WithinAbs(1.0, 1e-15));
    }
    // apply agrees with explicit dense rows
    Xoshiro256 rng(17);
    std::vector<double> u(static_cast<std::size_t>(L + w - 1));
    for (auto& e : u) e = rng.uniform01();
    std::vector<double> x;
    A.apply(u, x);
    for (int i = 0; i < L; ++i) {
      double dense = 0;
      const auto r = A.row(i);
      for (std::size_t j = 0; j < u.size(); ++j) dense += r[j] * u[j];
      CHECK_THAT(x[static_cast<std::size_t>(i)], Catch::Matchers::WithinRel(dense, 1e-13));
    }
    // transpose agrees with explicit dense columns
    std::vector<double> t(static_cast<std::size_t>(L));
    for (auto& e : t) e = rng.uniform01();
    std::vector<double> y;
    A.apply_transpose(t, y);
    for (int j = 0; j < L + w - 1; ++j) {
      double dense = 0;
      for (int i = 0; i < L; ++i) dense += A.row(i)[static_cast<std::size_t>(j)] *
                                           t[static_cast<std::size_t>(i)];
      CHECK_THAT(y[static_cast<std::size_t>(j)], Catch::Matchers::WithinAbs(dense, 1e-14));
    }
  }
  CHECK_THROWS_AS(coupling_matrix(0, 2), std::invalid_argument);
}

TEST_CASE("single recursion steps") {
  RecursionSpec spec{TailSpec::bdd_erasure(100, 5), 2, 1, 1, 0.03};

  // scalar case evaluated by hand: y' = p * pi(d_c - 1, n_c, 1)
  RecursionState s;
  s.y = {1.0};
  const auto s1 = step(s, spec);
  CHECK_THAT(s1.y[0], Catch::Matchers::WithinRel(0.03 * poisson_tail(4, 100, 1.0), 1e-14));
  CHECK(s1.q == 1);

  // zero state is a fixed point
  RecursionState z;
  z.y = {0.0};
  CHECK(step(z, spec).y[0] == 0.0);

  // p = 0 maps anything to zero
  RecursionSpec p0 = spec;
  p0.p = 0.0;
  CHECK(step(s, p0).y[0] == 0.0);

  // entrywise monotonicity of the step map
  RecursionSpec wide{TailSpec::bdd_erasure(64, 9), 2, 12, 3, 0.22};
  Xoshiro256 rng(31);
  for (int rep = 0; rep < 25; ++rep) {
    RecursionState a, b;
    a.y.resize(14);
    b.y.resize(14);
    for (std::size_t j = 0; j < a.y.size(); ++j) {
      a.y[j] = 0.9 * rng.uniform01();
      b.y[j] = std::min(1.0, a.y[j] + 0.1 * rng.uniform01());
    }
    const auto sa = step(a, wide);
    const auto sb = step(b, wide);
    for (std::size_t j = 0; j < sa.y.size(); ++j) CHECK(sa.y[j] <= sb.y[j] + 1e-15);
  }
}

TEST_CASE("run classifies the easy cases") {
  RecursionSpec spec{TailSpec::bdd_erasure(64, 9), 2, 40, 2, 0.0};
  const auto zero = run(spec);
  CHECK(zero.status == RecursionStatus::converged_zero);
  CHECK(zero.iterations == 1);

  spec.p = 1.0;
  const auto one = run(spec);
  CHECK(one.decided());
  CHECK_FALSE(one.zero());
  double ymax = 0;
  for (double e : one.y) ymax = std::max(ymax, e);
  CHECK(ymax > 0.5);

  // an absurdly small iteration budget is reported, not misclassified
  spec.p = 0.24;
  const auto starved = run(spec, 1e-10, 3);
  CHECK(starved.status == RecursionStatus::indeterminate);
}

TEST_CASE("threshold for the reference staircase-like tails") {
  const auto bec = recursion_threshold(TailSpec::bdd_erasure(64, 9), 2, 40, 2, 1e-4);
  CHECK_THAT(bec.p_star, Catch::Matchers::WithinAbs(0.2418704, 2e-4));
  CHECK(bec.method == ThresholdMethod::recursion);
  CHECK_FALSE(bec.upper_bound);
  CHECK(bec.p_star <= 2.0 * 8 / 64.0 + 1e-4);  // weight-pulling load bound

  const auto bsc = recursion_threshold(TailSpec::bdd_error(64, 4), 2, 40, 2, 1e-4);
  CHECK_THAT(bsc.p_star, Catch::Matchers::WithinAbs(0.1218724, 2e-4));
  CHECK(bsc.p_star <= 2.0 * 4 / 64.0 + 1e-4);
  CHECK(bsc.p_star < bec.p_star);
}

TEST_CASE("self-consistent bracket around the threshold") {
  const TailSpec tail = TailSpec::bdd_erasure(254, 5);
  const auto th = recursion_threshold(tail, 2, 200, 2, 1e-4);
  CHECK_THAT(th.p_star, Catch::Matchers::WithinAbs(0.0307069, 2e-4));

  RecursionSpec below{tail, 2, 200, 2, 0.9 * th.p_star};
  CHECK(run(below).zero());
  RecursionSpec above{tail, 2, 200, 2, 1.1 * th.p_star};
  const auto r = run(above);
  CHECK(r.decided());
  CHECK_FALSE(r.zero());
}

TEST_CASE("threshold grows with coupling width") {
  const TailSpec tail = TailSpec::bdd_erasure(64, 9);
  const auto w2 = recursion_threshold(tail, 2, 40, 2, 1e-5);
  const auto w4 = recursion_threshold(tail, 2, 40, 4, 1e-5);
  const auto w8 = recursion_threshold(tail, 2, 40, 8, 1e-5);
  CHECK(w4.p_star >= w2.p_star - 2.5e-5);
  CHECK(w8.p_star >= w4.p_star - 2.5e-5);
}

TEST_CASE("degenerate mixture reproduces the single-code threshold") {
  const auto single = recursion_threshold(TailSpec::bdd_erasure(64, 9), 2, 40, 2, 1e-5);
  const auto mix =
      recursion_threshold(TailSpec::mix({{1.0, 8, 64}, {0.0, 10, 510}}), 2, 40, 2, 1e-5);
  CHECK_THAT(mix.p_star, Catch::Matchers::WithinAbs(single.p_star, 1e-12));
}

TEST_CASE("nonzero fixed point is symmetric with a wave-shaped profile") {
  const TailSpec tail = TailSpec::bdd_erasure(64, 9);
  const auto th = recursion_threshold(tail, 2, 40, 2, 1e-4);
  RecursionSpec spec{tail, 2, 40, 2, th.p_star + 0.01};
  const auto r = run(spec);
  REQUIRE(r.decided());
  REQUIRE_FALSE(r.zero());
  const std::size_t n = r.y.size();
  for (std::size_t j = 0; j < n / 2; ++j)
    CHECK_THAT(r.y[j], Catch::Matchers::WithinAbs(r.y[n - 1 - j], 1e-12));
  const double mid = r.y[n / 2];
  CHECK(r.y.front() < mid);
  CHECK(r.y.back() < mid);
}

TEST_CASE("uncoupled system") {
  const TailSpec tail = TailSpec::bdd_erasure(64, 9);
  CHECK(single_system_fixed_point(tail, 2, 0.0) == 0.0);
  CHECK(single_system_fixed_point(tail, 2, 1.0) > 0.1);

  // w = 1, L = 1 run lands on the same fixed point
  for (double p : {0.1, 0.2, 0.3}) {
    RecursionSpec spec{tail, 2, 1, 1, p};
    const auto r = run(spec, 1e-12);
    const double fp = single_system_fixed_point(tail, 2, p, 1e-12);
    REQUIRE(r.decided());
    if (fp == 0.0) {
      CHECK(r.zero());
    } else {
      CHECK_THAT(r.y[0], Catch::Matchers::WithinAbs(fp, 1e-9));
    }
  }

  // uncoupled threshold never exceeds the coupled one
  const auto pred = [&](double p) { return single_system_fixed_point(tail, 2, p) == 0.0; };
  const auto bracket = bisect_predicate(pred, 0.0, 0.5, 1e-4);
  const auto coupled = recursion_threshold(tail, 2, 100, 2, 1e-4);
  CHECK(bracket.mid <= coupled.p_star + 2e-4);

  // binomial tail variant tracks the Poisson form
  CHECK(single_system_fixed_point_binomial(8, 64, 2, 0.05) == 0.0);
  const double po = single_system_fixed_point(tail, 2, 0.4);
  const double bi = single_system_fixed_point_binomial(8, 64, 2, 0.4);
  CHECK(bi > 0.0);
  CHECK_THAT(bi, Catch::Matchers::WithinRel(po, 0.15));
}

TEST_CASE("profile tails are labeled as upper bounds") {
  DecodingProfile pr;
  pr.t_c = 4;
  pr.t_m = 6;
  pr.beta = {0.5, 0.5};
  const auto th = recursion_threshold(TailSpec::with_profile(64, pr), 2, 40, 2, 1e-3);
  CHECK(th.upper_bound);
  CHECK(th.p_star > 0.0);
  // accepting part of the weight 5..6 patterns can only help
  const auto bdd = recursion_threshold(TailSpec::bdd_error(64, 4), 2, 40, 2, 1e-3);
  CHECK(th.p_star >= bdd.p_star - 2e-3);
}
