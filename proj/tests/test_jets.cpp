#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ahc/ball.hpp"
#include "ahc/field.hpp"
#include "ahc/grid.hpp"
#include "ahc/jet.hpp"
#include "ahc/rng.hpp"

using namespace ahc;

TEST_CASE("jet arithmetic against finite differences") {
  auto f = [](const Vec3& p) {
    Jet2 x = jet_x(p), y = jet_y(p), z = jet_z(p);
    return exp(0.3 * x) * sin(y + 2.0 * z) / (1.0 + x * x + y * y) + pow(1.5 + z, 1.7);
  };
  Vec3 p{0.31, -0.22, 0.4};
  Jet2 j = f(p);
  double eps = 1e-5;
  for (int i = 0; i < 3; ++i) {
    Vec3 pp = p, pm = p;
    (&pp.x)[i] += eps;
    (&pm.x)[i] -= eps;
    double fd = (f(pp).v - f(pm).v) / (2 * eps);
    REQUIRE(j.g[i] == Catch::Approx(fd).margin(1e-8));
    for (int k = i; k < 3; ++k) {
      Vec3 q1 = p, q2 = p, q3 = p, q4 = p;
      (&q1.x)[i] += eps;
      (&q1.x)[k] += eps;
      (&q2.x)[i] += eps;
      (&q2.x)[k] -= eps;
      (&q3.x)[i] -= eps;
      (&q3.x)[k] += eps;
      (&q4.x)[i] -= eps;
      (&q4.x)[k] -= eps;
      double fd2 = (f(q1).v - f(q2).v - f(q3).v + f(q4).v) / (4 * eps * eps);
      REQUIRE(j.h[sym3_index(i, k)] == Catch::Approx(fd2).margin(1e-5));
    }
  }
}

TEST_CASE("grid stencil jets converge to analytic jets") {
  auto fn = [](const Vec3& p, Jet2* out) {
    Jet2 x = jet_x(p), y = jet_y(p), z = jet_z(p);
    out[0] = sin(2.0 * x) * cos(y) + z * z * x;
  };
  double err32 = 0, err64 = 0;
  for (int n : {32, 64}) {
    ChartGrid g = build_ball_chart(0.3, 0.9, n, n / 2);
    Field fa = sample_analytic(g, FieldKind::Scalar, fn);
    Field fg = fa;
    fg.analytic = nullptr;  // force the FD path
    double err = 0;
    CompJets ja, jg;
    for (int idx = 0; idx < g.n_nodes(); idx += 11) {
      if (g.in_boundary_band(idx, 1) || g.pole_ring(idx)) continue;
      jets_at(fa, idx, ja);
      jets_at(fg, idx, jg);
      for (int i = 0; i < 3; ++i) err = std::max(err, std::abs(ja.d1[0][i] - jg.d1[0][i]));
      for (int i = 0; i < 6; ++i) err = std::max(err, std::abs(ja.d2[0][i] - jg.d2[0][i]));
    }
    (n == 32 ? err32 : err64) = err;
  }
  REQUIRE(err64 < err32 / 3.5);  // at least ~2nd order
  REQUIRE(err32 < 0.1);
  REQUIRE(err64 < 0.015);
}

TEST_CASE("bump fields are compactly supported with exact zeros") {
  Rng rng(7);
  auto bumps = random_bumps(rng, 5, 0.4, 0.8, 0.1);
  AnalyticFn f = bump_superposition_fn(bumps);
  Jet2 out;
  f(Vec3{0.0, 0.0, 0.95}, &out);
  REQUIRE(out.v == 0.0);
  f(Vec3{0.0, 0.0, 0.0}, &out);
  REQUIRE(out.v == 0.0);
}
