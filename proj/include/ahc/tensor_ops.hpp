#pragma once

// Pointwise tensor kernels and field-level drivers: Christoffel symbols,
// covariant derivatives, curvature, and the A-tensor routes for Ricci and
// scalar curvature relative to the background connection.
//
// Curvature sign convention (fixed so that exact hyperbolic space satisfies
// Riem_{ijkl} = gb_{il} gb_{jk} - gb_{ik} gb_{jl}):
//   R^i_{jkl} = dk G^i_{lj} - dl G^i_{kj} + G^i_{km} G^m_{lj} - G^i_{lm} G^m_{kj}
//   Riem_{ijkl} = g_{im} R^m_{jkl},   Ric_{jl} = R^i_{jil},   R = g^{jl} Ric_{jl}.

#include <cmath>
#include <optional>

#include "ahc/ball.hpp"
#include "ahc/field.hpp"

namespace ahc {

inline void sym_inv3(const double* s, double* inv, double* det_out = nullptr) {
  double a = s[0], b = s[5], c = s[4];
  double d = s[1], e = s[3];
  double f = s[2];
  // matrix [[a,b,c],[b,d,e],[c,e,f]]
  double A = d * f - e * e;
  double B = c * e - b * f;
  double C = b * e - c * d;
  double det = a * A + b * B + c * C;
  if (!(det > 0.0)) throw SingularMetric("nodal metric determinant <= 0");
  double id = 1.0 / det;
  inv[0] = A * id;
  inv[5] = B * id;
  inv[4] = C * id;
  inv[1] = (a * f - c * c) * id;
  inv[3] = (b * c - a * e) * id;
  inv[2] = (a * d - b * b) * id;
  if (det_out) *det_out = det;
}

inline double sym_get(const double* s, int i, int j) { return s[sym3_index(i, j)]; }

// Christoffel symbols (and optionally their coordinate derivatives) from
// metric jets. G packing: k*6 + sym(ij); dG[18][3].
inline void christoffel_kernel(const CompJets& gj, double* ginv, double* G, double (*dG)[3] = nullptr) {
  sym_inv3(gj.v, ginv);
  double half_sum[3][6];  // (1/2)(di g_jl + dj g_il - dl g_ij) indexed [l][sym(ij)]
  for (int l = 0; l < 3; ++l)
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) {
        double v = gj.d1[sym3_index(j, l)][i] + gj.d1[sym3_index(i, l)][j] - gj.d1[sym3_index(i, j)][l];
        half_sum[l][sym3_index(i, j)] = 0.5 * v;
      }
  for (int k = 0; k < 3; ++k)
    for (int ij = 0; ij < 6; ++ij) {
      double acc = 0.0;
      for (int l = 0; l < 3; ++l) acc += sym_get(ginv, k, l) * half_sum[l][ij];
      G[k * 6 + ij] = acc;
    }
  if (!dG) return;
  for (int m = 0; m < 3; ++m) {
    double dginv[6];
    for (int k = 0; k < 3; ++k)
      for (int l = k; l < 3; ++l) {
        double acc = 0.0;
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b)
            acc -= sym_get(ginv, k, a) * sym_get(ginv, l, b) * gj.d1[sym3_index(a, b)][m];
        dginv[sym3_index(k, l)] = acc;
      }
    for (int k = 0; k < 3; ++k)
      for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
          int ij = sym3_index(i, j);
          double acc = 0.0;
          for (int l = 0; l < 3; ++l) {
            double dsum = gj.d2[sym3_index(j, l)][sym3_index(m, i)] + gj.d2[sym3_index(i, l)][sym3_index(m, j)] -
                          gj.d2[sym3_index(i, j)][sym3_index(m, l)];
            acc += sym_get(dginv, k, l) * half_sum[l][ij] + 0.5 * sym_get(ginv, k, l) * dsum;
          }
          dG[k * 6 + ij][m] = acc;
        }
  }
}

// Riemann (lowered), Ricci and scalar curvature from metric jets.
struct CurvatureAtNode {
  double riem[81];  // ((i*3+j)*3+k)*3+l
  double ric[6];
  double scal;
};

inline void curvature_kernel(const CompJets& gj, CurvatureAtNode& out) {
  double ginv[6], G[18], dG[18][3];
  christoffel_kernel(gj, ginv, G, dG);
  auto Gam = [&](int k, int i, int j) { return G[k * 6 + sym3_index(i, j)]; };
  auto dGam = [&](int m, int k, int i, int j) { return dG[k * 6 + sym3_index(i, j)][m]; };
  double Rup[81];  // R^i_{jkl}
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          double v = dGam(k, i, l, j) - dGam(l, i, k, j);
          for (int m = 0; m < 3; ++m) v += Gam(i, k, m) * Gam(m, l, j) - Gam(i, l, m) * Gam(m, k, j);
          Rup[((i * 3 + j) * 3 + k) * 3 + l] = v;
        }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          double v = 0.0;
          for (int m = 0; m < 3; ++m) v += sym_get(gj.v, i, m) * Rup[((m * 3 + j) * 3 + k) * 3 + l];
          out.riem[((i * 3 + j) * 3 + k) * 3 + l] = v;
        }
  for (int j = 0; j < 3; ++j)
    for (int l = j; l < 3; ++l) {
      double v = 0.0;
      for (int i = 0; i < 3; ++i) v += Rup[((i * 3 + j) * 3 + i) * 3 + l];
      out.ric[sym3_index(j, l)] = v;
    }
  out.scal = 0.0;
  for (int j = 0; j < 3; ++j)
    for (int l = 0; l < 3; ++l) out.scal += sym_get(ginv, j, l) * sym_get(out.ric, j, l);
}

// Background Christoffel derivative, closed form.
inline void gb_christoffel_deriv(const Vec3& p, double rho, double (*dGb)[3] /*18 x 3*/) {
  double x[3] = {p.x, p.y, p.z};
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) {
        double base = 0.0;
        if (k == i) base += x[j];
        if (k == j) base += x[i];
        if (i == j) base -= x[k];
        for (int m = 0; m < 3; ++m) {
          double dv = 0.0;
          if (k == i && j == m) dv += 1.0;
          if (k == j && i == m) dv += 1.0;
          if (i == j && k == m) dv -= 1.0;
          // d/dxm (base/rho) = dv/rho + base * x_m / rho^2
          dGb[k * 6 + sym3_index(i, j)][m] = dv / rho + base * x[m] / (rho * rho);
        }
      }
}

// ---------------------------------------------------------------------------
// Field-level structures

struct Connection {
  Field gamma;  // CovDSym2 packing: k*6+sym(ij)
  const Field* metric = nullptr;
};

inline Connection christoffel(const Field& g) {
  const ChartGrid& grid = *g.chart;
  Connection conn;
  conn.gamma = make_field(grid, FieldKind::CovDSym2);
  conn.metric = &g;
  CompJets gj;
  double ginv[6], G[18];
  for (int idx = 0; idx < grid.n_nodes(); ++idx) {
    jets_at(g, idx, gj);
    christoffel_kernel(gj, ginv, G);
    for (int c = 0; c < 18; ++c) conn.gamma.at(idx, c) = G[c];
  }
  return conn;
}

struct CurvatureBundle {
  Field ricci;        // SymCov2
  Field scalar;       // Scalar
  std::vector<double> riemann;  // optional, 81 per node (empty if not stored)
  const ChartGrid* chart = nullptr;
};

inline CurvatureBundle curvature(const Field& g, bool store_riemann = false) {
  const ChartGrid& grid = *g.chart;
  CurvatureBundle out;
  out.chart = &grid;
  out.ricci = make_field(grid, FieldKind::SymCov2);
  out.scalar = make_field(grid, FieldKind::Scalar);
  if (store_riemann) out.riemann.assign(size_t(grid.n_nodes()) * 81, 0.0);
  CompJets gj;
  CurvatureAtNode cv;
  for (int idx = 0; idx < grid.n_nodes(); ++idx) {
    jets_at(g, idx, gj);
    curvature_kernel(gj, cv);
    for (int c = 0; c < 6; ++c) out.ricci.at(idx, c) = cv.ric[c];
    out.scalar.at(idx, 0) = cv.scal;
    if (store_riemann)
      for (int c = 0; c < 81; ++c) out.riemann[size_t(idx) * 81 + c] = cv.riem[c];
  }
  return out;
}

// A^k_{ij} = Gamma(g)^k_{ij} - Gammab^k_{ij}, packed k*6+sym(ij).
inline void a_tensor_kernel(const CompJets& gj, const Vec3& p, double rho, double* A) {
  double ginv[6], G[18], Gb[18];
  christoffel_kernel(gj, ginv, G);
  gb_christoffel(p, rho, Gb);
  for (int c = 0; c < 18; ++c) A[c] = G[c] - Gb[c];
}

inline Field a_tensor(const Field& g) {
  const ChartGrid& grid = *g.chart;
  Field out = make_field(grid, FieldKind::CovDSym2);
  CompJets gj;
  double A[18];
  for (int idx = 0; idx < grid.n_nodes(); ++idx) {
    jets_at(g, idx, gj);
    a_tensor_kernel(gj, grid.node_x[idx], grid.node_rho[idx], A);
    for (int c = 0; c < 18; ++c) out.at(idx, c) = A[c];
  }
  return out;
}

// Ricci difference by the covariant A-route:
//   D_{jk} = nb_i A^i_{jk} - nb_j A^i_{ik} + A^m_{jk} A^i_{im} - A^i_{jm} A^m_{ki}.
inline void ricci_difference_kernel(const CompJets& gj, const Vec3& p, double rho, double* D /*6*/) {
  double ginv[6], G[18], dG[18][3], Gb[18], dGb[18][3];
  christoffel_kernel(gj, ginv, G, dG);
  gb_christoffel(p, rho, Gb);
  gb_christoffel_deriv(p, rho, dGb);
  double A[3][3][3], dA[3][3][3][3];  // A[k][i][j], dA[m][k][i][j]
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        int c = k * 6 + sym3_index(i, j);
        A[k][i][j] = G[c] - Gb[c];
        for (int m = 0; m < 3; ++m) dA[m][k][i][j] = dG[c][m] - dGb[c][m];
      }
  auto GB = [&](int k, int i, int j) { return Gb[k * 6 + sym3_index(i, j)]; };
  // Covariant derivative of the (1,2)-tensor A w.r.t. the background.
  auto nabA = [&](int m, int k, int i, int j) {
    double v = dA[m][k][i][j];
    for (int l = 0; l < 3; ++l)
      v += GB(k, m, l) * A[l][i][j] - GB(l, m, i) * A[k][l][j] - GB(l, m, j) * A[k][i][l];
    return v;
  };
  for (int j = 0; j < 3; ++j)
    for (int k = j; k < 3; ++k) {
      double v = 0.0;
      for (int i = 0; i < 3; ++i) v += nabA(i, i, j, k) - nabA(j, i, i, k);
      for (int m = 0; m < 3; ++m)
        for (int i = 0; i < 3; ++i) v += A[m][j][k] * A[i][i][m] - A[i][j][m] * A[m][k][i];
      D[sym3_index(j, k)] = v;
    }
}

inline Field ricci_difference(const Field& g) {
  const ChartGrid& grid = *g.chart;
  Field out = make_field(grid, FieldKind::SymCov2);
  CompJets gj;
  double D[6];
  for (int idx = 0; idx < grid.n_nodes(); ++idx) {
    jets_at(g, idx, gj);
    ricci_difference_kernel(gj, grid.node_x[idx], grid.node_rho[idx], D);
    for (int c = 0; c < 6; ++c) out.at(idx, c) = D[c];
  }
  return out;
}

// Scalar curvature through the covariant route:
//   R(g) = g^{jk} Ric(gb)_{jk} + g^{jk} D_{jk},  Ric(gb) = -2 gb exact.
inline double scalar_curvature_covariant_kernel(const CompJets& gj, const Vec3& p, double rho) {
  double ginv[6];
  sym_inv3(gj.v, ginv);
  double D[6];
  ricci_difference_kernel(gj, p, rho, D);
  double acc = 0.0;
  double irho2 = 1.0 / (rho * rho);
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) {
      double ricb = (j == k) ? -2.0 * irho2 : 0.0;
      acc += sym_get(ginv, j, k) * (ricb + sym_get(D, j, k));
    }
  return acc;
}

inline Field scalar_curvature_covariant(const Field& g) {
  const ChartGrid& grid = *g.chart;
  Field out = make_field(grid, FieldKind::Scalar);
  CompJets gj;
  for (int idx = 0; idx < grid.n_nodes(); ++idx) {
    jets_at(g, idx, gj);
    out.at(idx, 0) = scalar_curvature_covariant_kernel(gj, grid.node_x[idx], grid.node_rho[idx]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Covariant derivatives against an explicit connection (node-level forms used
// throughout take the connection as packed G[18]).

inline void covd_scalar_kernel(const CompJets& uj, double* grad /*3*/) {
  for (int i = 0; i < 3; ++i) grad[i] = uj.d1[0][i];
}

// Hessian of a scalar: nb2_{ij} u = d2_{ij} u - G^k_{ij} dk u.
inline void hess_scalar_kernel(const CompJets& uj, const double* G, double* hess /*6*/) {
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      double v = uj.d2[0][sym3_index(i, j)];
      for (int k = 0; k < 3; ++k) v -= G[k * 6 + sym3_index(i, j)] * uj.d1[0][k];
      hess[sym3_index(i, j)] = v;
    }
}

// nb_i X_j (full 3x3, index i*3+j).
inline void covd_oneform_kernel(const CompJets& Xj, const double* G, double* dX /*9*/) {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double v = Xj.d1[j][i];
      for (int k = 0; k < 3; ++k) v -= G[k * 6 + sym3_index(i, j)] * Xj.v[k];
      dX[i * 3 + j] = v;
    }
}

// nb2_{kj} X_i = dk (nb_j X_i) - G^m_{kj} nb_m X_i - G^m_{ki} nb_j X_m.
// Needs dG (connection derivative). out index ((k*3+j)*3+i).
inline void covd2_oneform_kernel(const CompJets& Xj, const double* G, const double (*dG)[3],
                                 double* ddX /*27*/) {
  double nX[9];
  covd_oneform_kernel(Xj, G, nX);
  for (int k = 0; k < 3; ++k)
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 3; ++i) {
        // coordinate derivative of nb_j X_i
        double v = Xj.d2[i][sym3_index(k, j)];
        for (int m = 0; m < 3; ++m) {
          v -= dG[m * 6 + sym3_index(j, i)][k] * Xj.v[m] + G[m * 6 + sym3_index(j, i)] * Xj.d1[m][k];
          v -= G[m * 6 + sym3_index(k, j)] * nX[m * 3 + i] + G[m * 6 + sym3_index(k, i)] * nX[j * 3 + m];
        }
        ddX[(k * 3 + j) * 3 + i] = v;
      }
}

// nb_k h_{ij} for symmetric h, out packed k*6+sym(ij).
inline void covd_sym2_kernel(const CompJets& hj, const double* G, double* dh /*18*/) {
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) {
        double v = hj.d1[sym3_index(i, j)][k];
        for (int m = 0; m < 3; ++m)
          v -= G[m * 6 + sym3_index(k, i)] * sym_get(hj.v, m, j) + G[m * 6 + sym3_index(k, j)] * sym_get(hj.v, i, m);
        dh[k * 6 + sym3_index(i, j)] = v;
      }
}

// nb_a nb_b h_{ij}, full [a][b][ij-sym] (needs dG).
inline void covd2_sym2_kernel(const CompJets& hj, const double* G, const double (*dG)[3],
                              double out[3][3][6]) {
  double dh[18];
  covd_sym2_kernel(hj, G, dh);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
          // coordinate derivative of nb_b h_{ij} in direction a
          double v = hj.d2[sym3_index(i, j)][sym3_index(a, b)];
          for (int m = 0; m < 3; ++m) {
            v -= dG[m * 6 + sym3_index(b, i)][a] * sym_get(hj.v, m, j) +
                 G[m * 6 + sym3_index(b, i)] * hj.d1[sym3_index(m, j)][a];
            v -= dG[m * 6 + sym3_index(b, j)][a] * sym_get(hj.v, i, m) +
                 G[m * 6 + sym3_index(b, j)] * hj.d1[sym3_index(i, m)][a];
          }
          // connection corrections on the slots of nb h
          for (int m = 0; m < 3; ++m) {
            v -= G[m * 6 + sym3_index(a, b)] * dh[m * 6 + sym3_index(i, j)];
            v -= G[m * 6 + sym3_index(a, i)] * dh[b * 6 + sym3_index(m, j)];
            v -= G[m * 6 + sym3_index(a, j)] * dh[b * 6 + sym3_index(i, m)];
          }
          out[a][b][sym3_index(i, j)] = v;
        }
}

// Generic field-level covariant derivative for the kinds that appear in the
// public surface. Scalars -> OneForm, OneForm -> (0,2) stored as Gen3Cov? No:
// full 9-component (0,2) result is returned packed into CovDSym2 only for
// symmetric inputs; the 1-form derivative is returned with general packing.
inline Field covariant_derivative(const Field& T, const Connection& conn) {
  const ChartGrid& grid = *T.chart;
  CompJets tj;
  if (T.kind == FieldKind::Scalar) {
    Field out = make_field(grid, FieldKind::OneForm);
    for (int idx = 0; idx < grid.n_nodes(); ++idx) {
      jets_at(T, idx, tj);
      for (int i = 0; i < 3; ++i) out.at(idx, i) = tj.d1[0][i];
    }
    out.fd_one_sided = !T.has_analytic() && (grid.sten_r.one_sided || grid.sten_theta.one_sided);
    return out;
  }
  if (T.kind == FieldKind::SymCov2) {
    Field out = make_field(grid, FieldKind::CovDSym2);
    double G[18], dh[18];
    for (int idx = 0; idx < grid.n_nodes(); ++idx) {
      jets_at(T, idx, tj);
      for (int c = 0; c < 18; ++c) G[c] = conn.gamma.at(idx, c);
      covd_sym2_kernel(tj, G, dh);
      for (int c = 0; c < 18; ++c) out.at(idx, c) = dh[c];
    }
    out.fd_one_sided = !T.has_analytic() && (grid.sten_r.one_sided || grid.sten_theta.one_sided);
    return out;
  }
  if (T.kind == FieldKind::OneForm) {
    // Result nb_i X_j is a general (0,2) tensor; stored in the k=0 plane of
    // the 27-slot packing as (i*3+j).
    Field out = make_field(grid, FieldKind::Gen3Cov);
    double G[18], dX[9];
    for (int idx = 0; idx < grid.n_nodes(); ++idx) {
      jets_at(T, idx, tj);
      for (int c = 0; c < 18; ++c) G[c] = conn.gamma.at(idx, c);
      covd_oneform_kernel(tj, G, dX);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out.at(idx, (0 * 3 + i) * 3 + j) = dX[i * 3 + j];
    }
    out.fd_one_sided = !T.has_analytic() && (grid.sten_r.one_sided || grid.sten_theta.one_sided);
    return out;
  }
  throw InsufficientSmoothness("covariant_derivative: unsupported field kind");
}

}  // namespace ahc
