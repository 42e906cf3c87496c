#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ahc/families.hpp"
#include "ahc/inequalities.hpp"
#include "ahc/wspace.hpp"

using namespace ahc;

TEST_CASE("weighted Lebesgue norms: frozen values") {
  ChartGrid g = build_ball_chart(1e-3, 0.999, 96, 16);
  RegionMask all = full_region(g);

  // ||rho||_{0,2,1} = sqrt(int rho^2 rho^2 dmu(gb)) = sqrt(4 pi/15) on the ball
  Field rho = sample_analytic(g, FieldKind::Scalar, rho_power_fn(1.0));
  double n = weighted_norm(rho, {0, 2, 1.0}, all);
  REQUIRE(n == Catch::Approx(std::sqrt(4.0 * kPi / 15.0)).epsilon(2e-3));
  REQUIRE(std::sqrt(4.0 * kPi / 15.0) == Catch::Approx(0.9153).epsilon(1e-3));

  // ||1||_{0,inf,1} = sup rho = 0.5 in the full-ball limit
  Field one = sample_analytic(g, FieldKind::Scalar, [](const Vec3&, Jet2* o) { o[0] = Jet2(1.0); });
  REQUIRE(weighted_norm(one, {0, kInf, 1.0}, all) == Catch::Approx(0.5).margin(1e-5));

  Field zero = make_field(g, FieldKind::Scalar);
  zero.analytic = [](const Vec3&, Jet2* o) { o[0] = Jet2(0.0); };
  REQUIRE(weighted_norm(zero, {2, 2, -1.0}, all) == 0.0);
  REQUIRE(weighted_norm(zero, {0, kInf, 3.0}, all) == 0.0);
}

TEST_CASE("weight shift and p=2 consistency with integrate_weighted") {
  ChartGrid g = build_ball_chart(0.3, 0.9, 24, 16);
  RegionMask all = full_region(g);
  Rng rng(3);
  Field u = sample_analytic(g, FieldKind::Scalar,
                            bump_superposition_fn(random_bumps(rng, 4, 0.4, 0.8, 0.15)));
  // || rho^a u ||_{p,delta} = || u ||_{p, delta+a}
  Field ru = sample_analytic(g, FieldKind::Scalar, modulate_fn(u.analytic, rho_power_fn(0.7), 1));
  double lhs = weighted_norm(ru, {0, 2, 0.3}, all);
  double rhs = weighted_norm(u, {0, 2, 1.0}, all);
  REQUIRE(lhs == Catch::Approx(rhs).epsilon(1e-12));

  // p=2, k=0 norm agrees with integrate_weighted of |u|^2 with weight 2 delta
  std::vector<double> u2(g.n_nodes());
  for (int i = 0; i < g.n_nodes(); ++i) u2[i] = u.at(i, 0) * u.at(i, 0);
  double direct = std::sqrt(integrate_weighted(g, u2, 2.0 * 0.3, all, Measure::Hyperbolic));
  REQUIRE(weighted_norm(u, {0, 2, 0.3}, all) == Catch::Approx(direct).epsilon(1e-13));
}

TEST_CASE("norm axioms: triangle and homogeneity (property)") {
  ChartGrid g = build_ball_chart(0.3, 0.9, 12, 12);
  RegionMask all = full_region(g);
  for (std::uint64_t seed : {11u, 22u, 33u, 44u}) {
    Rng rng(seed);
    auto fa = bump_superposition_fn(random_bumps(rng, 3, 0.4, 0.8, 0.2));
    Rng rng2 = rng.fork(9);
    auto fb = bump_superposition_fn(random_bumps(rng2, 3, 0.4, 0.8, 0.2));
    Field a = sample_analytic(g, FieldKind::Scalar, fa);
    Field b = sample_analytic(g, FieldKind::Scalar, fb);
    Field sum = sample_analytic(g, FieldKind::Scalar, add_fn(fa, fb, 1));
    double c = -2.7;
    Field ca = sample_analytic(g, FieldKind::Scalar, scale_fn(fa, c, 1));
    for (WeightSpec spec : {WeightSpec{0, 2, 0.5}, WeightSpec{1, 2, -0.5}, WeightSpec{0, kInf, 1.0}}) {
      double na = weighted_norm(a, spec, all), nb = weighted_norm(b, spec, all);
      REQUIRE(weighted_norm(sum, spec, all) <= na + nb + 1e-12 * (na + nb));
      REQUIRE(weighted_norm(ca, spec, all) == Catch::Approx(std::abs(c) * na).epsilon(1e-12));
    }
  }
}

TEST_CASE("norm monotonicity in the region") {
  ChartGrid g = build_ball_chart(0.3, 0.95, 24, 16);
  RegionMask all = full_region(g);
  RegionMask er = region_mask(g, RegionKind::ER, 1.0);
  Rng rng(5);
  Field u = sample_analytic(g, FieldKind::Scalar,
                            bump_superposition_fn(random_bumps(rng, 4, 0.4, 0.9, 0.15)));
  REQUIRE(weighted_norm(u, {0, 2, 0.7}, er) <= weighted_norm(u, {0, 2, 0.7}, all) + 1e-15);
}

TEST_CASE("W^{1,2} and W^{2,2} norms against closed forms") {
  // u = rho on the model: nb u = d rho = -x, |nb u|_gb = rho r;
  // nb2 rho = -rho(1-rho) gb + 2 drho drho / rho (exact).
  ChartGrid g = build_ball_chart(0.3, 0.9, 24, 16);
  RegionMask all = full_region(g);
  Field rho = sample_analytic(g, FieldKind::Scalar, rho_power_fn(1.0));
  double n1 = weighted_norm(rho, {1, 2, 0.5}, all);
  // direct quadrature of the two contributions
  double i0 = 0, i1 = 0;
  for (int i = 0; i < g.n_nodes(); ++i) {
    double rhov = g.rho(i);
    Vec3 p = g.position(i);
    double r2 = p.x * p.x + p.y * p.y + p.z * p.z;
    double w = g.weight_h(i) / (rhov * rhov * rhov) * std::pow(rhov, 2.0 * 0.5);
    i0 += rhov * rhov * w;
    i1 += (rhov * rhov * r2) * w;  // |d rho|_gb^2 = rho^2 r^2
  }
  REQUIRE(n1 == Catch::Approx(std::sqrt(i0) + std::sqrt(i1)).epsilon(1e-12));

  // Hessian norm of the cosh function: nb2 N = N gb so |nb2 N|_gb = N sqrt(3)
  Field cosh = sample_analytic(g, FieldKind::Scalar, cosh_distance_fn());
  double got = 0, expect = 0;
  for (int i = 0; i < g.n_nodes(); i += 23) {
    double n[3];
    covariant_norms_at(cosh, i, 2, n);
    got += n[2];
    expect += cosh.at(i, 0) * std::sqrt(3.0);
  }
  REQUIRE(got == Catch::Approx(expect).epsilon(1e-10));
}

TEST_CASE("Hoelder seminorm estimator") {
  ChartGrid g = build_ball_chart(0.3, 0.9, 16, 16);
  // constant: seminorm part zero, norm = |c|
  Field c = sample_analytic(g, FieldKind::Scalar, [](const Vec3&, Jet2* o) { o[0] = Jet2(-3.25); });
  REQUIRE(holder_seminorm_estimate(c, 0.5, 0.0) == Catch::Approx(3.25).margin(1e-12));

  // u = rho, alpha = 1/2: finite, stable under refinement (+-10%)
  Field r16 = sample_analytic(g, FieldKind::Scalar, rho_power_fn(1.0));
  double e16 = holder_seminorm_estimate(r16, 0.5, 0.0);
  ChartGrid g2 = build_ball_chart(0.3, 0.9, 24, 24);
  Field r24 = sample_analytic(g2, FieldKind::Scalar, rho_power_fn(1.0));
  double e24 = holder_seminorm_estimate(r24, 0.5, 0.0);
  REQUIRE(e16 > 0.0);
  REQUIRE(std::abs(e24 - e16) <= 0.10 * std::max(e16, e24));

  // a jump injected at one node blows up under refinement
  Field j16 = sample_analytic(g, FieldKind::Scalar, rho_power_fn(1.0));
  j16.at(g.index(8, 8, 8), 0) += 1.0;
  Field j24 = sample_analytic(g2, FieldKind::Scalar, rho_power_fn(1.0));
  j24.at(g2.index(12, 12, 12), 0) += 1.0;
  // nearest-node distance shrinks ~1.5x, so the estimator grows ~1.5^alpha
  REQUIRE(holder_seminorm_estimate(j24, 0.5, 0.0) > 1.15 * holder_seminorm_estimate(j16, 0.5, 0.0));

  REQUIRE_THROWS_AS(holder_seminorm_estimate(c, 1.5, 0.0), WeightOutOfRange);
}

TEST_CASE("inequality probes") {
  ChartGrid g = build_ball_chart(0.3, 0.95, 24, 16);
  RegionMask all = full_region(g);
  TestFamily fam = scalar_family(42, 6, 0.4, 0.85);

  SECTION("HOLDER1 is exact on the discrete measure; equality for u = v") {
    IneqParams prm;
    prm.p = 1;
    prm.q = 2;
    prm.r = 2;
    prm.delta1 = 0.5;
    prm.delta2 = 0.5;
    ConstantEstimate est = inequality_ratio(g, InequalityId::Holder1, fam, prm, all);
    REQUIRE(est.value <= 1.0 + 1e-10);
    REQUIRE(est.value == Catch::Approx(1.0).epsilon(1e-10));  // u = v members reach equality
  }
  SECTION("HOLDER2 interpolation ratio <= 1") {
    IneqParams prm;
    prm.p = 2;
    prm.q = 1;
    prm.r = kInf;
    prm.lambda = 0.5;
    prm.delta = 0.3;
    ConstantEstimate est = inequality_ratio(g, InequalityId::Holder2, fam, prm, all);
    REQUIRE(est.value <= 1.0 + 1e-10);
    REQUIRE(est.value > 0.1);
  }
  SECTION("ANNULUS bound with explicit factor") {
    RegionMask er = region_mask(g, RegionKind::ER, 1.0);
    IneqParams prm;
    prm.p = 2;
    prm.delta = 2.0;
    prm.eta = 3.0;
    prm.R = 1.0;
    TestFamily one;
    one.members.push_back({"one", FieldKind::Scalar, [](const Vec3&, Jet2* o) { o[0] = Jet2(1.0); }});
    ConstantEstimate est = inequality_ratio(g, InequalityId::Annulus, one, prm, er);
    REQUIRE(est.value <= 1.0 + 1e-10);
    REQUIRE(est.value > 0.0);
  }
  SECTION("EHRLING constant grows as epsilon shrinks") {
    IneqParams prm;
    prm.delta = 0.5;
    double prev = -1;
    for (double eps : {0.1, 0.05, 0.025}) {
      prm.epsilon = eps;
      ConstantEstimate est = inequality_ratio(g, InequalityId::Ehrling, fam, prm, all);
      REQUIRE(std::isfinite(est.value));
      REQUIRE(est.value >= prev);
      prev = est.value;
    }
  }
  SECTION("UINFD / U3D / SOBOLEV / PROD / DECAY all finite") {
    IneqParams prm;
    prm.delta = 0.5;
    prm.delta1 = 0.25;
    prm.delta2 = 0.25;
    prm.eta = 0.5;
    prm.q = 2;
    prm.p = 2;
    for (auto id : {InequalityId::Uinfd, InequalityId::U3d, InequalityId::SobolevIneq,
                    InequalityId::SobolevInc, InequalityId::Prod19g, InequalityId::Decay}) {
      ConstantEstimate est = inequality_ratio(g, id, fam, prm, all);
      INFO("id " << int(id));
      REQUIRE(std::isfinite(est.value));
      REQUIRE(est.value >= 0.0);
    }
    REQUIRE_THROWS_AS(inequality_ratio(g, InequalityId::Annulus, fam,
                                       [] { IneqParams p; p.delta = 3; p.eta = 2; return p; }(), all),
                      WindowViolation);
    TestFamily empty;
    REQUIRE_THROWS_AS(inequality_ratio(g, InequalityId::Holder1, empty, prm, all), EmptyFamily);
  }
  SECTION("monotone in the family") {
    IneqParams prm;
    prm.delta = 0.5;
    TestFamily small;
    small.members.assign(fam.members.begin(), fam.members.begin() + 3);
    double v_small = inequality_ratio(g, InequalityId::SobolevIneq, small, prm, all).value;
    double v_full = inequality_ratio(g, InequalityId::SobolevIneq, fam, prm, all).value;
    REQUIRE(v_full >= v_small - 1e-14);
  }
}
