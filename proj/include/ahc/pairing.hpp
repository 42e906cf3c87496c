#pragma once

// Adjoint duality check: | int <DPhi(h,p), xi> - int <(h,p), DPhi* xi> |
// over the L^2(d mu(gb)) pairing, for inputs supported away from both
// boundary spheres.

#include <cmath>

#include "ahc/constraint.hpp"
#include "ahc/residual.hpp"

namespace ahc {

inline void require_interior_support(const Field& f, int band_cells = 2) {
  const ChartGrid& g = *f.chart;
  double m = 0;
  for (int idx = 0; idx < g.n_nodes(); ++idx)
    if (g.in_boundary_band(idx, band_cells))
      for (int c = 0; c < f.nc(); ++c) m = std::max(m, std::abs(f.at(idx, c)));
  if (m > 1e-12) throw SupportViolation("pairing input touches a boundary band");
}

inline Residual adjoint_pairing_check(const PhasePoint& pp, const ReferenceData& ref, const Field& h,
                                      const Field& p, const LapseShift& xi) {
  const ChartGrid& g = *pp.g.chart;
  require_interior_support(h);
  require_interior_support(p);
  require_interior_support(xi.N);
  require_interior_support(xi.X);

  ConstraintFields dF = dphi(pp, ref, h, p);
  AdjointFields A = dphi_adjoint(pp, ref, xi);

  double lhs = 0, rhs = 0;
  CompJets gj;
  for (int idx = 0; idx < g.n_nodes(); ++idx) {
    double rho = g.node_rho[idx];
    double w = g.weight_h(idx) / (rho * rho * rho);
    // <DPhi, xi> = DPhi0 N + DPhi_i g^{ij} X_j  (the shift pairs through g)
    jets_at(pp.g, idx, gj);
    double ginv[6];
    sym_inv3(gj.v, ginv);
    double mom = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        mom += dF.momentum.at(idx, i) * sym_get(ginv, i, j) * xi.X.at(idx, j);
    lhs += (dF.hamiltonian.at(idx, 0) * xi.N.at(idx, 0) + mom) * w;
    // <(h,p), DPhi* xi> = h_ij A1^{ij} + p^{ij} A2_{ij}
    double v = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        v += sym_get(&h.at(idx, 0), i, j) * sym_get(&A.a1.at(idx, 0), i, j) +
             sym_get(&p.at(idx, 0), i, j) * sym_get(&A.a2.at(idx, 0), i, j);
    rhs += v * w;
  }
  Residual out;
  out.id = "ADJOINT_PAIRING";
  double scale = std::max(std::max(std::abs(lhs), std::abs(rhs)), 1e-30);
  out.sup = out.l2 = std::abs(lhs - rhs) / scale;
  return out;
}

}  // namespace ahc
