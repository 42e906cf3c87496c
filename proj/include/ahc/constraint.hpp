#pragma once

// The vacuum constraint operator Phi = (Phi_0, Phi_i), its linearization,
// the formal adjoint, the restructured operator P*, the operator O, and the
// surjectivity-probe operator F built from the particular variations
// h = 2y g, p = (2 S(Y) - g tr S(Y) - 2 tau y g) s.
//
// Density bookkeeping: momentum-type quantities are stored as tensor
// components relative to d mu(gb); the volume ratio s = sqrt(det g/det gb)
// multiplies in explicitly everywhere the displays have sqrt(g) or 1/sqrt(g).

#include <cmath>

#include "ahc/phase.hpp"
#include "ahc/tensor_ops.hpp"

namespace ahc {

namespace detail {

// Everything the constraint kernels need at one node.
struct PhaseCtx {
  CompJets gj, pij, sj;
  double ginv[6];
  double G[18];
  double dG[18][3];
  CurvatureAtNode curv;
  double s = 1.0;
  double ds[3] = {0, 0, 0};
  double pt[6];         // pi-tilde = pi / s, (2,0)
  double dpt[6][3];     // coordinate derivatives of pi-tilde
  double pt_low[6];     // lowered
  double pt_mix[9];     // pt^i_j = g_{jk} pt^{ik}, index i*3+j
  double trpt = 0;
  double normpt2 = 0;
  double divpt[3];      // nb_k pt^{jk} (tensor covariant divergence)
  double rho = 0;
  Vec3 p;
};

inline void build_ctx(const PhasePoint& pp, int idx, PhaseCtx& c, bool with_curvature = true) {
  const ChartGrid& g = *pp.g.chart;
  c.rho = g.node_rho[idx];
  c.p = g.node_x[idx];
  jets_at(pp.g, idx, c.gj);
  jets_at(pp.pi, idx, c.pij);
  jets_at(pp.sqrtg, idx, c.sj);
  christoffel_kernel(c.gj, c.ginv, c.G, c.dG);
  if (with_curvature) curvature_kernel(c.gj, c.curv);
  c.s = c.sj.v[0];
  for (int k = 0; k < 3; ++k) c.ds[k] = c.sj.d1[0][k];
  for (int a = 0; a < 6; ++a) {
    c.pt[a] = c.pij.v[a] / c.s;
    for (int k = 0; k < 3; ++k) c.dpt[a][k] = (c.pij.d1[a][k] - c.pt[a] * c.ds[k]) / c.s;
  }
  c.trpt = 0;
  c.normpt2 = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      c.trpt += sym_get(c.gj.v, i, j) * sym_get(c.pt, i, j);
      double low = 0;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          low += sym_get(c.gj.v, i, a) * sym_get(c.gj.v, j, b) * sym_get(c.pt, a, b);
      if (j >= i) c.pt_low[sym3_index(i, j)] = low;
      c.normpt2 += low * sym_get(c.pt, i, j);
    }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double v = 0;
      for (int k = 0; k < 3; ++k) v += sym_get(c.gj.v, j, k) * sym_get(c.pt, i, k);
      c.pt_mix[i * 3 + j] = v;
    }
  for (int j = 0; j < 3; ++j) {
    double v = 0;
    for (int k = 0; k < 3; ++k) {
      v += c.dpt[sym3_index(j, k)][k];
      for (int m = 0; m < 3; ++m)
        v += c.G[j * 6 + sym3_index(k, m)] * sym_get(c.pt, m, k) +
             c.G[k * 6 + sym3_index(k, m)] * sym_get(c.pt, j, m);
    }
    c.divpt[j] = v;
  }
}

// Pi block (momentum-quadratic part of the adjoint/linearization), raised.
inline void pi_block(const PhaseCtx& c, double* Pi /*6*/) {
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      double v = c.trpt * sym_get(c.pt, i, j);
      for (int k = 0; k < 3; ++k) v -= 2.0 * sym_get(c.pt, i, k) * c.pt_mix[j * 3 + k];
      v += (0.5 * c.normpt2 - 0.25 * c.trpt * c.trpt) * sym_get(c.ginv, i, j);
      Pi[sym3_index(i, j)] = v;
    }
}

// E^{ij} = Ric^{ij} - (1/2)(R - 2 Lambda) g^{ij}.
inline void e_block(const PhaseCtx& c, double Lambda, double* E /*6*/) {
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      double ric_up = 0;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          ric_up += sym_get(c.ginv, i, a) * sym_get(c.ginv, j, b) * sym_get(c.curv.ric, a, b);
      E[sym3_index(i, j)] = ric_up - 0.5 * (c.curv.scal - 2.0 * Lambda) * sym_get(c.ginv, i, j);
    }
}

}  // namespace detail

struct ConstraintFields {
  Field hamiltonian;  // Scalar density components
  Field momentum;     // OneForm density components
};

inline ConstraintFields phi(const PhasePoint& pp, const ReferenceData& ref) {
  const ChartGrid& g = *pp.g.chart;
  ConstraintFields out{make_field(g, FieldKind::Scalar), make_field(g, FieldKind::OneForm)};
  detail::PhaseCtx c;
  for (int idx = 0; idx < g.n_nodes(); ++idx) {
    detail::build_ctx(pp, idx, c);
    double phi0 = (c.curv.scal - 2.0 * ref.Lambda) * c.s - (c.normpt2 - 0.5 * c.trpt * c.trpt) * c.s;
    out.hamiltonian.at(idx, 0) = phi0;
    for (int i = 0; i < 3; ++i) {
      double v = 0;
      for (int j = 0; j < 3; ++j) v += sym_get(c.gj.v, i, j) * c.divpt[j];
      out.momentum.at(idx, i) = 2.0 * v * c.s;
    }
  }
  return out;
}

// Linearization D Phi(g,pi).(h,p). h is a (0,2) variation with 2-jets,
// p a (2,0) density variation with 1-jets.
inline ConstraintFields dphi(const PhasePoint& pp, const ReferenceData& ref, const Field& h,
                             const Field& p) {
  const ChartGrid& g = *pp.g.chart;
  if (h.kind != FieldKind::SymCov2 || p.kind != FieldKind::SymCon2)
    throw KindMismatch("dphi expects (SymCov2, SymCon2) variations");
  ConstraintFields out{make_field(g, FieldKind::Scalar), make_field(g, FieldKind::OneForm)};
  detail::PhaseCtx c;
  CompJets hj, pj;
  double ddh[3][3][6], dh[18], E[6], Pi[6];
  for (int idx = 0; idx < g.n_nodes(); ++idx) {
    detail::build_ctx(pp, idx, c);
    jets_at(h, idx, hj);
    jets_at(p, idx, pj);
    covd2_sym2_kernel(hj, c.G, c.dG, ddh);
    covd_sym2_kernel(hj, c.G, dh);
    detail::e_block(c, ref.Lambda, E);
    detail::pi_block(c, Pi);

    // (nb^i nb^j h_ij - Lap tr_g h) s
    double ddiv = 0, laptr = 0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        double gab = sym_get(c.ginv, a, b);
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) {
            ddiv += sym_get(c.ginv, a, i) * sym_get(c.ginv, b, j) * ddh[a][b][sym3_index(i, j)];
            laptr += gab * sym_get(c.ginv, i, j) * ddh[a][b][sym3_index(i, j)];
          }
      }
    double phi0 = (ddiv - laptr) * c.s;
    // -h E s + h Pi s
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        phi0 += sym_get(hj.v, i, j) * (sym_get(Pi, i, j) - sym_get(E, i, j)) * c.s;
    // p-term: p^{ij} (tr pt g_ij - 2 pt_low_ij)   (density factors cancel)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        phi0 += sym_get(pj.v, i, j) * (c.trpt * sym_get(c.gj.v, i, j) - 2.0 * sym_get(c.pt_low, i, j));
    out.hamiltonian.at(idx, 0) = phi0;

    // momentum part
    double dptilde[6][3];
    for (int a = 0; a < 6; ++a)
      for (int k = 0; k < 3; ++k) dptilde[a][k] = (pj.d1[a][k] - (pj.v[a] / c.s) * c.ds[k]) / c.s;
    for (int i = 0; i < 3; ++i) {
      double v = 0;
      // s pt^{jk} (2 nb_k h_{ij} - nb_i h_{jk})
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          v += c.s * sym_get(c.pt, j, k) *
               (2.0 * dh[k * 6 + sym3_index(i, j)] - dh[i * 6 + sym3_index(j, k)]);
      // 2 h_{ij} s nb_k pt^{jk}
      for (int j = 0; j < 3; ++j) v += 2.0 * sym_get(hj.v, i, j) * c.s * c.divpt[j];
      // 2 g_{ik} s nb_j (p/s)^{jk}
      for (int k = 0; k < 3; ++k) {
        double div = 0;
        for (int j = 0; j < 3; ++j) {
          div += dptilde[sym3_index(k, j)][j];
          for (int m = 0; m < 3; ++m)
            div += c.G[k * 6 + sym3_index(j, m)] * sym_get(pj.v, m, j) / c.s +
                   c.G[j * 6 + sym3_index(j, m)] * sym_get(pj.v, k, m) / c.s;
        }
        v += 2.0 * sym_get(c.gj.v, i, k) * c.s * div;
      }
      out.momentum.at(idx, i) = v;
    }
  }
  return out;
}

struct AdjointFields {
  Field a1;  // (2,0) density components: pairs with h
  Field a2;  // (0,2) tensor: pairs with p
};

namespace detail {

// Node kernel for D Phi^*: fills A1^{ij} (density comps) and A2_{ij}, plus
// optionally the coordinate derivatives of A2 (for P*).
inline void adjoint_kernel(const PhaseCtx& c, const ReferenceData& ref, const CompJets& Nj,
                           const CompJets& Xj, double* A1, double* A2, double (*dA2)[3] = nullptr) {
  double E[6], Pi[6];
  e_block(c, ref.Lambda, E);
  pi_block(c, Pi);
  double hessN[6];
  hess_scalar_kernel(Nj, c.G, hessN);
  double lapN = 0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) lapN += sym_get(c.ginv, a, b) * sym_get(hessN, a, b);
  double nX[9];  // (nb X)_{km}
  covd_oneform_kernel(Xj, c.G, nX);
  double Xup[3];
  for (int i = 0; i < 3; ++i) {
    Xup[i] = 0;
    for (int m = 0; m < 3; ++m) Xup[i] += sym_get(c.ginv, i, m) * Xj.v[m];
  }
  double nXup[9];  // nb_k X^i = g^{im} (nb X)_{km}, index k*3+i
  double divX = 0;
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i) {
      double v = 0;
      for (int m = 0; m < 3; ++m) v += sym_get(c.ginv, i, m) * nX[k * 3 + m];
      nXup[k * 3 + i] = v;
      if (i == k) divX += v;
    }

  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      double hess_up = 0;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          hess_up += sym_get(c.ginv, i, a) * sym_get(c.ginv, j, b) * sym_get(hessN, a, b);
      double v = (hess_up - sym_get(c.ginv, i, j) * lapN +
                  (sym_get(Pi, i, j) - sym_get(E, i, j)) * Nj.v[0]) *
                 c.s;
      // Lie derivative of pi along X (density form), times nothing: already
      // carries the density through pt and s.
      double lie = 0;
      for (int k = 0; k < 3; ++k) {
        double covpt = c.dpt[sym3_index(i, j)][k];
        for (int m = 0; m < 3; ++m)
          covpt += c.G[i * 6 + sym3_index(k, m)] * sym_get(c.pt, m, j) +
                   c.G[j * 6 + sym3_index(k, m)] * sym_get(c.pt, i, m);
        lie += Xup[k] * covpt;
        lie -= sym_get(c.pt, k, j) * nXup[k * 3 + i] + sym_get(c.pt, i, k) * nXup[k * 3 + j];
      }
      lie += sym_get(c.pt, i, j) * divX;
      A1[sym3_index(i, j)] = v + c.s * lie;
    }

  // A2 = -2 (K N + S(X)); K_{ij} = pt_low - (1/2) tr pt g_{ij}
  double SX[6];
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      double s = 0.5 * (nX[i * 3 + j] + nX[j * 3 + i]);
      SX[sym3_index(i, j)] = s;
      double K = sym_get(c.pt_low, i, j) - 0.5 * c.trpt * sym_get(c.gj.v, i, j);
      A2[sym3_index(i, j)] = -2.0 * (K * Nj.v[0] + s);
    }
  if (!dA2) return;

  // coordinate derivatives of A2 (for the gradient block of P*)
  for (int k = 0; k < 3; ++k) {
    // d_k tr pt and d_k pt_low
    double dtr = 0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        dtr += c.gj.d1[sym3_index(a, b)][k] * sym_get(c.pt, a, b) +
               sym_get(c.gj.v, a, b) * c.dpt[sym3_index(a, b)][k];
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) {
        double dlow = 0;
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b)
            dlow += c.gj.d1[sym3_index(i, a)][k] * sym_get(c.gj.v, j, b) * sym_get(c.pt, a, b) +
                    sym_get(c.gj.v, i, a) * c.gj.d1[sym3_index(j, b)][k] * sym_get(c.pt, a, b) +
                    sym_get(c.gj.v, i, a) * sym_get(c.gj.v, j, b) * c.dpt[sym3_index(a, b)][k];
        double dK = dlow - 0.5 * (dtr * sym_get(c.gj.v, i, j) + c.trpt * c.gj.d1[sym3_index(i, j)][k]);
        // d_k S(X)_{ij}
        double dS = 0.5 * (Xj.d2[j][sym3_index(k, i)] + Xj.d2[i][sym3_index(k, j)]);
        for (int m = 0; m < 3; ++m)
          dS -= c.dG[m * 6 + sym3_index(i, j)][k] * Xj.v[m] + c.G[m * 6 + sym3_index(i, j)] * Xj.d1[m][k];
        double K = sym_get(c.pt_low, i, j) - 0.5 * c.trpt * sym_get(c.gj.v, i, j);
        dA2[sym3_index(i, j)][k] = -2.0 * (dK * Nj.v[0] + K * Nj.d1[0][k] + dS);
      }
  }
}

}  // namespace detail

inline AdjointFields dphi_adjoint(const PhasePoint& pp, const ReferenceData& ref, const LapseShift& xi) {
  const ChartGrid& g = *pp.g.chart;
  AdjointFields out{make_field(g, FieldKind::SymCon2), make_field(g, FieldKind::SymCov2)};
  detail::PhaseCtx c;
  CompJets Nj, Xj;
  double A1[6], A2[6];
  for (int idx = 0; idx < g.n_nodes(); ++idx) {
    detail::build_ctx(pp, idx, c);
    jets_at(xi.N, idx, Nj);
    jets_at(xi.X, idx, Xj);
    detail::adjoint_kernel(c, ref, Nj, Xj, A1, A2);
    for (int a = 0; a < 6; ++a) {
      out.a1.at(idx, a) = A1[a];
      out.a2.at(idx, a) = A2[a];
    }
  }
  return out;
}

struct PStarFields {
  Field p1;  // (2,0) density comps / q
  Field p2;  // q * nb A2: CovDSym2 (18)
};

inline PStarFields p_star(const PhasePoint& pp, const ReferenceData& ref, const LapseShift& xi) {
  const ChartGrid& g = *pp.g.chart;
  PStarFields out{make_field(g, FieldKind::SymCon2), make_field(g, FieldKind::CovDSym2)};
  detail::PhaseCtx c;
  CompJets Nj, Xj;
  double A1[6], A2[6], dA2[6][3];
  for (int idx = 0; idx < g.n_nodes(); ++idx) {
    detail::build_ctx(pp, idx, c);
    jets_at(xi.N, idx, Nj);
    jets_at(xi.X, idx, Xj);
    detail::adjoint_kernel(c, ref, Nj, Xj, A1, A2, dA2);
    double q = std::sqrt(c.s);
    for (int a = 0; a < 6; ++a) out.p1.at(idx, a) = A1[a] / q;
    for (int k = 0; k < 3; ++k)
      for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
          double v = dA2[sym3_index(i, j)][k];
          for (int m = 0; m < 3; ++m)
            v -= c.G[m * 6 + sym3_index(k, i)] * A2[sym3_index(m, j)] +
                 c.G[m * 6 + sym3_index(k, j)] * A2[sym3_index(i, m)];
          out.p2.at(idx, k * 6 + sym3_index(i, j)) = q * v;
        }
  }
  return out;
}

// O(N) = nb2 N - g Lap_g N.
inline Field op_O(const PhasePoint& pp, const Field& N) {
  const ChartGrid& g = *pp.g.chart;
  if (N.kind != FieldKind::Scalar) throw KindMismatch("op_O expects a scalar");
  Field out = make_field(g, FieldKind::SymCov2);
  detail::PhaseCtx c;
  CompJets Nj;
  for (int idx = 0; idx < g.n_nodes(); ++idx) {
    detail::build_ctx(pp, idx, c, false);
    jets_at(N, idx, Nj);
    double hess[6];
    hess_scalar_kernel(Nj, c.G, hess);
    double lap = 0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) lap += sym_get(c.ginv, a, b) * sym_get(hess, a, b);
    for (int a = 0; a < 6; ++a) out.at(idx, a) = hess[a] - c.gj.v[a] * lap;
  }
  return out;
}

// Particular variation (defhp): h = 2 y g, p = (2 S(Y) - g tr S(Y)
// - (n-1)(n-2) tau y g) s, from a scalar y and vector field Y. Returns the
// variation as analytic-capable grid fields ready for dphi.
struct VariationPair {
  Field h;  // SymCov2
  Field p;  // SymCon2 density comps
};

inline VariationPair build_variation(const PhasePoint& pp, const ReferenceData& ref, const Field& y,
                                     const Field& Y) {
  const ChartGrid& g = *pp.g.chart;
  if (y.kind != FieldKind::Scalar || Y.kind != FieldKind::VectorF)
    throw KindMismatch("build_variation expects (scalar, vector)");
  VariationPair out{make_field(g, FieldKind::SymCov2), make_field(g, FieldKind::SymCon2)};
  const bool analytic = pp.g.has_analytic() && y.has_analytic() && Y.has_analytic() &&
                        pp.sqrtg.has_analytic();
  if (analytic) {
    AnalyticFn gfn = pp.g.analytic, yfn = y.analytic, Yfn = Y.analytic, sfn = pp.sqrtg.analytic;
    double tau = ref.tau;
    out.h.analytic = [gfn, yfn](const Vec3& pnt, Jet2* o) {
      Jet2 gc[6], yv;
      gfn(pnt, gc);
      yfn(pnt, &yv);
      for (int a = 0; a < 6; ++a) o[a] = 2.0 * yv * gc[a];
    };
    out.p.analytic = [gfn, yfn, Yfn, sfn, tau](const Vec3& pnt, Jet2* o) {
      Jet2 gc[6], yv, Yc[3], sv;
      gfn(pnt, gc);
      yfn(pnt, &yv);
      Yfn(pnt, Yc);
      sfn(pnt, &sv);
      // inverse metric as jets
      Jet2 A = gc[1] * gc[2] - gc[3] * gc[3];
      Jet2 B = gc[4] * gc[3] - gc[5] * gc[2];
      Jet2 C = gc[5] * gc[3] - gc[4] * gc[1];
      Jet2 det = gc[0] * A + gc[5] * B + gc[4] * C;
      Jet2 gi[6];
      gi[0] = A / det;
      gi[5] = B / det;
      gi[4] = C / det;
      gi[1] = (gc[0] * gc[2] - gc[4] * gc[4]) / det;
      gi[3] = (gc[5] * gc[4] - gc[0] * gc[3]) / det;
      gi[2] = (gc[0] * gc[1] - gc[5] * gc[5]) / det;
      auto G = [&](int i, int j) { return gc[sym3_index(i, j)]; };
      auto Gi = [&](int i, int j) { return gi[sym3_index(i, j)]; };
      // lowered Y and its Killing operator w.r.t. g (all in jets)
      Jet2 Yl[3];
      for (int i = 0; i < 3; ++i) {
        Yl[i] = Jet2(0.0);
        for (int k = 0; k < 3; ++k) Yl[i] = Yl[i] + G(i, k) * Yc[k];
      }
      // Christoffels of g from jets (value-level only is not enough: we need
      // S(Y) as a jet to first order; build with one derivative of g).
      // S(Y)_{ij} = (1/2)(d_i Yl_j + d_j Yl_i) - Gamma^m_{ij} Yl_m, computed
      // jet-wise through the quotient formulas below.
      Jet2 SY[6];
      for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
          Jet2 dij(0.0);
          // d_i Yl_j as a Jet2 truncated to first order: differentiate the
          // jet components of Yl
          Jet2 diYj, djYi;
          diYj.v = Yl[j].g[i];
          djYi.v = Yl[i].g[j];
          for (int m = 0; m < 3; ++m) {
            diYj.g[m] = Yl[j].h[sym3_index(i, m)];
            djYi.g[m] = Yl[i].h[sym3_index(j, m)];
          }
          Jet2 v = 0.5 * (diYj + djYi);
          for (int m = 0; m < 3; ++m) {
            // Gamma^m_{ij} = (1/2) g^{ml} (d_i g_{jl} + d_j g_{il} - d_l g_{ij})
            Jet2 Gm(0.0);
            for (int l = 0; l < 3; ++l) {
              Jet2 d1, d2p, d3;
              d1.v = G(j, l).g[i];
              d2p.v = G(i, l).g[j];
              d3.v = G(i, j).g[l];
              for (int q = 0; q < 3; ++q) {
                d1.g[q] = G(j, l).h[sym3_index(i, q)];
                d2p.g[q] = G(i, l).h[sym3_index(j, q)];
                d3.g[q] = G(i, j).h[sym3_index(l, q)];
              }
              Gm = Gm + 0.5 * Gi(m, l) * (d1 + d2p - d3);
            }
            v = v - Gm * Yl[m];
          }
          SY[sym3_index(i, j)] = v;
          (void)dij;
        }
      Jet2 trS(0.0);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) trS = trS + Gi(i, j) * SY[sym3_index(i, j)];
      for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
          Jet2 Sup(0.0);
          for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) Sup = Sup + Gi(i, a) * Gi(j, b) * SY[sym3_index(a, b)];
          o[sym3_index(i, j)] = (2.0 * Sup - Gi(i, j) * trS - (2.0 * tau) * yv * Gi(i, j)) * sv;
        }
    };
    int nc_h = 6, nc_p = 6;
    Jet2 tmp[6];
    for (int idx = 0; idx < g.n_nodes(); ++idx) {
      out.h.analytic(g.node_x[idx], tmp);
      for (int a = 0; a < nc_h; ++a) out.h.at(idx, a) = tmp[a].v;
      out.p.analytic(g.node_x[idx], tmp);
      for (int a = 0; a < nc_p; ++a) out.p.at(idx, a) = tmp[a].v;
    }
    return out;
  }
  // grid path: values only; dphi will differentiate by stencils
  detail::PhaseCtx c;
  CompJets yj, Yj;
  for (int idx = 0; idx < g.n_nodes(); ++idx) {
    detail::build_ctx(pp, idx, c, false);
    jets_at(y, idx, yj);
    jets_at(Y, idx, Yj);
    for (int a = 0; a < 6; ++a) out.h.at(idx, a) = 2.0 * yj.v[0] * c.gj.v[a];
    // lowered Y, S(Y), raised
    double Yl[3], dYl[3][3];
    for (int i = 0; i < 3; ++i) {
      Yl[i] = 0;
      for (int k = 0; k < 3; ++k) Yl[i] += sym_get(c.gj.v, i, k) * Yj.v[k];
      for (int m = 0; m < 3; ++m) {
        dYl[i][m] = 0;
        for (int k = 0; k < 3; ++k)
          dYl[i][m] += c.gj.d1[sym3_index(i, k)][m] * Yj.v[k] + sym_get(c.gj.v, i, k) * Yj.d1[k][m];
      }
    }
    double SY[6], trS = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) {
        double v = 0.5 * (dYl[j][i] + dYl[i][j]);
        for (int m = 0; m < 3; ++m) v -= c.G[m * 6 + sym3_index(i, j)] * Yl[m];
        SY[sym3_index(i, j)] = v;
      }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trS += sym_get(c.ginv, i, j) * sym_get(SY, i, j);
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) {
        double Sup = 0;
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b)
            Sup += sym_get(c.ginv, i, a) * sym_get(c.ginv, j, b) * sym_get(SY, a, b);
        out.p.at(idx, sym3_index(i, j)) =
            (2.0 * Sup - sym_get(c.ginv, i, j) * trS - 2.0 * ref.tau * yj.v[0] * sym_get(c.ginv, i, j)) *
            c.s;
      }
  }
  return out;
}

// F(y, Y) = D Phi(g,pi).(h,p) with (h,p) from build_variation (definitional).
inline ConstraintFields f_operator(const PhasePoint& pp, const ReferenceData& ref, const Field& y,
                                   const Field& Y) {
  VariationPair v = build_variation(pp, ref, y, Y);
  return dphi(pp, ref, v.h, v.p);
}

}  // namespace ahc
