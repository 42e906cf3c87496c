#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ahc/constants.hpp"
#include "ahc/convergence.hpp"
#include "ahc/kernel_probe.hpp"
#include "ahc/lipschitz.hpp"
#include "ahc/pairing.hpp"

using namespace ahc;

namespace {

PhasePoint perturbed_point(const ChartGrid& g, double tau, double t, std::uint64_t seed) {
  auto hd = harmonic_field_fn(FieldKind::SymCov2, Rng(seed), 2, 0.45, 0.85);
  auto pd = harmonic_field_fn(FieldKind::SymCon2, Rng(seed + 1), 2, 0.45, 0.85);
  // modulate into tensor directions with the right conformal scaling
  AnalyticFn hfn = [hd](const Vec3& p, Jet2* o) {
    Jet2 c[6];
    hd(p, c);
    Jet2 w = inv(jet_rho(p) * jet_rho(p));
    for (int a = 0; a < 6; ++a) o[a] = c[a] * w;
  };
  AnalyticFn pfn = [pd](const Vec3& p, Jet2* o) {
    Jet2 c[6];
    pd(p, c);
    Jet2 w = jet_rho(p) * jet_rho(p);
    for (int a = 0; a < 6; ++a) o[a] = c[a] * w;
  };
  Field gp = sample_analytic(g, FieldKind::SymCov2, add_fn(gb_metric_fn(), scale_fn(hfn, t, 6), 6));
  Field pip = sample_analytic(g, FieldKind::SymCon2,
                              add_fn(reference_momentum_fn(tau), scale_fn(pfn, t, 6), 6));
  return make_phase_point(std::move(gp), std::move(pip));
}

LapseShift xi_member(const ChartGrid& g, std::uint64_t seed) {
  return LapseShift{
      sample_analytic(g, FieldKind::Scalar, harmonic_field_fn(FieldKind::Scalar, Rng(seed), 2, 0.45, 0.8)),
      sample_analytic(g, FieldKind::OneForm, harmonic_field_fn(FieldKind::OneForm, Rng(seed + 5), 2, 0.45, 0.8))};
}

}  // namespace

TEST_CASE("P* pipeline matches the direct operator and is a true adjoint") {
  ChartGrid g = build_ball_chart(0.3, 0.95, 10, 10);
  ReferenceData ref = reference_data(1.0);
  for (int variant = 0; variant < 2; ++variant) {
    PhasePoint pt = variant == 0 ? reference_point(g, ref) : perturbed_point(g, 1.0, 5e-3, 99);
    PStarPipeline pipe(pt, ref);
    // random grid lapse-shift (no analytic jets on either path)
    Rng rng(17);
    std::vector<double> xi_vals(size_t(g.n_nodes()) * 4);
    for (auto& v : xi_vals) v = rng.gaussian();
    LapseShift xi{make_field(g, FieldKind::Scalar), make_field(g, FieldKind::OneForm)};
    for (int idx = 0; idx < g.n_nodes(); ++idx) {
      xi.N.at(idx, 0) = xi_vals[size_t(idx) * 4];
      for (int c = 0; c < 3; ++c) xi.X.at(idx, c) = xi_vals[size_t(idx) * 4 + 1 + c];
    }
    PStarFields direct = p_star(pt, ref, xi);
    std::vector<double> out(size_t(g.n_nodes()) * 24);
    pipe.apply(xi_vals.data(), out.data());
    double worst = 0, scale = 0;
    for (int idx = 0; idx < g.n_nodes(); ++idx) {
      for (int c = 0; c < 6; ++c) {
        worst = std::max(worst, std::abs(out[size_t(idx) * 24 + c] - direct.p1.at(idx, c)));
        scale = std::max(scale, std::abs(direct.p1.at(idx, c)));
      }
      for (int c = 0; c < 18; ++c) {
        worst = std::max(worst, std::abs(out[size_t(idx) * 24 + 6 + c] - direct.p2.at(idx, c)));
        scale = std::max(scale, std::abs(direct.p2.at(idx, c)));
      }
    }
    INFO("variant " << variant << " worst " << worst << " scale " << scale);
    REQUIRE(worst <= 1e-10 * scale);

    LinOp A = pipe.linop();
    std::vector<double> u(A.n_in), v(A.n_out), Au(A.n_out), Atv(A.n_in, 0.0);
    Rng rng2(18);
    for (auto& x : u) x = rng2.gaussian();
    for (auto& x : v) x = rng2.gaussian();
    A.apply(u.data(), Au.data());
    A.applyT(v.data(), Atv.data());
    double lhs = 0, rhs = 0, mag = 0;
    for (size_t i = 0; i < A.n_out; ++i) lhs += Au[i] * v[i];
    for (size_t i = 0; i < A.n_in; ++i) rhs += u[i] * Atv[i];
    for (size_t i = 0; i < A.n_out; ++i) mag += std::abs(Au[i] * v[i]);
    REQUIRE(std::abs(lhs - rhs) <= 1e-12 * mag);
  }
}

TEST_CASE("lapse-shift Gram matches the Hilbertized W22 norm") {
  ChartGrid g = build_ball_chart(0.3, 0.95, 8, 8);
  double w = 1.5;
  XiGram M2(g, w);
  LapseShift xi = xi_member(g, 3);
  std::vector<double> v(size_t(g.n_nodes()) * 4);
  for (int idx = 0; idx < g.n_nodes(); ++idx) {
    v[size_t(idx) * 4] = xi.N.at(idx, 0);
    for (int c = 0; c < 3; ++c) v[size_t(idx) * 4 + 1 + c] = xi.X.at(idx, c);
  }
  std::vector<double> scratch;
  double got = M2.quadratic(v.data(), scratch);
  // direct: sum over orders of squared seminorms via covariant_norms_at
  Field Ngrid = xi.N, Xgrid = xi.X;
  Ngrid.analytic = nullptr;  // the Gram differentiates by stencils
  Xgrid.analytic = nullptr;
  double want = 0;
  for (int idx = 0; idx < g.n_nodes(); ++idx) {
    double rho = g.node_rho[idx];
    double base = g.weight_h(idx) / (rho * rho * rho) * std::pow(rho, 2.0 * w);
    double n[3], x[3];
    covariant_norms_at(Ngrid, idx, 2, n);
    covariant_norms_at(Xgrid, idx, 2, x);
    for (int o = 0; o <= 2; ++o) want += base * (n[o] * n[o] + x[o] * x[o]);
  }
  REQUIRE(got == Catch::Approx(want).epsilon(1e-10));
}

TEST_CASE("adjoint pairing") {
  ReferenceData ref = reference_data(1.0);
  SECTION("zero variation gives zero residual") {
    ChartGrid g = build_ball_chart(0.3, 0.95, 10, 10);
    PhasePoint pt = reference_point(g, ref);
    Field zh = make_field(g, FieldKind::SymCov2);
    Field zp = make_field(g, FieldKind::SymCon2);
    LapseShift xi = xi_member(g, 7);
    Residual r = adjoint_pairing_check(pt, ref, zh, zp, xi);
    REQUIRE(r.sup == 0.0);
  }
  SECTION("analytic jets at the reference point: quadrature-limited") {
    ChartGrid g = build_ball_chart(0.3, 0.95, 24, 24);
    PhasePoint pt = reference_point(g, ref);
    auto hd = harmonic_field_fn(FieldKind::SymCov2, Rng(201), 2, 0.45, 0.8);
    Field h = sample_analytic(g, FieldKind::SymCov2, [hd](const Vec3& p, Jet2* o) {
      Jet2 c[6];
      hd(p, c);
      Jet2 w = inv(jet_rho(p) * jet_rho(p));
      for (int a = 0; a < 6; ++a) o[a] = c[a] * w;
    });
    Field p = sample_analytic(g, FieldKind::SymCon2, harmonic_field_fn(FieldKind::SymCon2, Rng(202), 2, 0.45, 0.8));
    LapseShift xi = xi_member(g, 203);
    Residual r = adjoint_pairing_check(pt, ref, h, p, xi);
    INFO("pairing residual " << r.sup);
    REQUIRE(r.sup < 1e-6);
  }
  SECTION("perturbed point, FD path, O(h^2)+ convergence") {
    auto hd = harmonic_field_fn(FieldKind::SymCov2, Rng(301), 2, 0.45, 0.8);
    auto pd = harmonic_field_fn(FieldKind::SymCon2, Rng(302), 2, 0.45, 0.8);
    auto Nf = harmonic_field_fn(FieldKind::Scalar, Rng(303), 2, 0.45, 0.8);
    auto Xf = harmonic_field_fn(FieldKind::OneForm, Rng(304), 2, 0.45, 0.8);
    auto run = [&](int n) {
      ChartGrid g = build_ball_chart(0.3, 0.95, n, n);
      PhasePoint pt = perturbed_point(g, 1.0, 1e-2, 99);
      Field h = sample_analytic(g, FieldKind::SymCov2, hd);
      h.analytic = nullptr;
      Field p = sample_analytic(g, FieldKind::SymCon2, pd);
      p.analytic = nullptr;
      LapseShift xi{sample_analytic(g, FieldKind::Scalar, Nf), sample_analytic(g, FieldKind::OneForm, Xf)};
      xi.N.analytic = nullptr;
      xi.X.analytic = nullptr;
      return adjoint_pairing_check(pt, ref, h, p, xi).sup;
    };
    Residual study = convergence_study(run, {16, 32});
    INFO("rate " << (study.rate ? *study.rate : -1) << " final " << study.sup);
    REQUIRE(study.rate);
    REQUIRE(*study.rate >= 1.9);
    REQUIRE(study.sup < 1e-4);
  }
}

TEST_CASE("constant estimates are finite and behave") {
  ChartGrid g = build_ball_chart(0.3, 0.95, 16, 16);
  double rR = omega_radius(1.0);
  TestFamily er_scalars = scalar_family(11, 4, std::min(rR + 0.02, 0.9), 0.93);
  TestFamily er_forms = oneform_family(12, 4, std::min(rR + 0.02, 0.9), 0.93);
  TestFamily scalars = scalar_family(13, 4, 0.4, 0.85);
  TestFamily forms = oneform_family(14, 4, 0.4, 0.85);
  EstimateParams prm;
  prm.w = 1.5;
  prm.R = 1.0;

  auto finite = [&](EstimateId id, const TestFamily& fam) {
    ConstantEstimate est = estimate_constant(g, id, fam, prm);
    INFO(estimate_to_string(id) << " = " << est.value);
    REQUIRE(std::isfinite(est.value));
    REQUIRE(est.value > 0.0);
    return est.value;
  };
  finite(EstimateId::PoincareT, er_scalars);
  finite(EstimateId::PoincareTGlobal, scalars);
  finite(EstimateId::KornS, forms);
  finite(EstimateId::CoerciveU, er_forms);

  TestFamily mixed;
  for (auto& m : scalars.members) mixed.members.push_back(m);
  for (auto& m : forms.members) mixed.members.push_back(m);
  finite(EstimateId::Adj35cg, mixed);
  finite(EstimateId::Adj422, mixed);
  finite(EstimateId::PsEst, mixed);
  finite(EstimateId::SbeA, scalars);
  finite(EstimateId::SbeB, forms);
  prm.w = -1.0;  // delta <= 0 side for F
  finite(EstimateId::SbeF, mixed);
  prm.w = 1.0;
  finite(EstimateId::SbeFstar, mixed);

  // family monotonicity
  prm.w = 1.5;
  TestFamily small;
  small.members.assign(forms.members.begin(), forms.members.begin() + 2);
  double v_small = estimate_constant(g, EstimateId::KornS, small, prm).value;
  double v_full = estimate_constant(g, EstimateId::KornS, forms, prm).value;
  REQUIRE(v_full >= v_small - 1e-14);

  // strict window enforcement
  prm.w = 1.0;
  prm.strict_window = true;
  REQUIRE_THROWS_AS(estimate_constant(g, EstimateId::KornS, forms, prm), WindowViolation);
  TestFamily empty;
  prm.strict_window = false;
  REQUIRE_THROWS_AS(estimate_constant(g, EstimateId::KornS, empty, prm), EmptyFamily);
}

TEST_CASE("kernel probe on a small ladder") {
  ReferenceData ref = reference_data(1.0);
  auto factory = [&](const ChartGrid& g) { return reference_point(g, ref); };
  ProbeReport rep = kernel_probe(factory, ref, -1.5, {8, 12}, 42);
  INFO("sigma " << rep.sigma_min[0] << " " << rep.sigma_min[1] << " var " << rep.variation);
  REQUIRE(rep.sigma_min[0] > 0.0);
  REQUIRE(rep.sigma_min[1] > 0.0);
  // determinism: bit-identical rerun
  ProbeReport rep2 = kernel_probe(factory, ref, -1.5, {8, 12}, 42);
  REQUIRE(rep.sigma_min[0] == rep2.sigma_min[0]);
  REQUIRE(rep.sigma_min[1] == rep2.sigma_min[1]);
  // window violation handling
  REQUIRE_THROWS_AS(kernel_probe(factory, ref, -2.5, {8}, 42, false), WindowViolation);
  ProbeReport warn = kernel_probe(factory, ref, -2.5, {8}, 42, true);
  REQUIRE(warn.window_violation);
}

TEST_CASE("lipschitz probe") {
  ChartGrid g = build_ball_chart(0.3, 0.95, 10, 10);
  ReferenceData ref = reference_data(1.0);
  PhasePoint base = reference_point(g, ref);
  auto family = lapse_shift_family(55, 3, 0.45, 0.8);

  SECTION("identical points flagged as degenerate zero") {
    PhasePoint b2 = reference_point(g, ref);
    LipschitzResult r = lipschitz_probe(base, b2, ref, family, -1.5);
    REQUIRE(r.estimate.value == 0.0);
    REQUIRE(r.estimate.degenerate);
  }
  SECTION("ratio sequence stabilizes along a shrinking perturbation") {
    double prev = -1;
    double vals[3];
    int k = 0;
    for (double t : {1e-1, 1e-2, 1e-3}) {
      PhasePoint pb = perturbed_point(g, 1.0, t, 77);
      LipschitzResult r = lipschitz_probe(base, pb, ref, family, -1.5);
      REQUIRE(std::isfinite(r.estimate.value));
      vals[k++] = r.estimate.value;
      prev = r.estimate.value;
    }
    (void)prev;
    INFO("ratios " << vals[0] << " " << vals[1] << " " << vals[2]);
    REQUIRE(std::abs(vals[2] - vals[1]) <= 0.2 * std::max(vals[1], vals[2]));
  }
  SECTION("time-symmetric pair exercises the restricted path") {
    ReferenceData r0 = reference_data(0.0);
    PhasePoint a = reference_point(g, r0);
    PhasePoint b = perturbed_point(g, 0.0, 1e-2, 88);
    // zero out the momentum perturbation for the pi = 0 case
    Field pi0 = make_field(g, FieldKind::SymCon2);
    pi0.analytic = [](const Vec3&, Jet2* o) { for (int c = 0; c < 6; ++c) o[c] = Jet2(0.0); };
    PhasePoint bts = make_phase_point(b.g, pi0);
    LipschitzResult r = lipschitz_probe(a, bts, r0, family, -1.5);
    REQUIRE(std::isfinite(r.estimate.value));
    REQUIRE(r.estimate.value > 0.0);
  }
}

TEST_CASE("convergence study plumbing") {
  // synthetic residuals r = C h^2
  Residual r = convergence_study([](int n) { return 3.0 / (double(n) * n); }, {16, 32, 64});
  REQUIRE(r.rate);
  REQUIRE(*r.rate == Catch::Approx(2.0).epsilon(1e-12));
  Residual sat = convergence_study([](int) { return 1e-14; }, {16, 32});
  REQUIRE(sat.saturated);
  REQUIRE_THROWS_AS(convergence_study([](int) { return 1.0; }, {16}), InsufficientData);
}
