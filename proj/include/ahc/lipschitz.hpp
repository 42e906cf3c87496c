#pragma once

// Lipschitz probe for P*: sup over a unit lapse-shift family of
// || (P*_{(g,pi)} - P*_{(gt,pit)}) xi ||_{2,w} / || (g-gt, pi-pit) ||_F.

#include <cmath>

#include "ahc/constraint.hpp"
#include "ahc/families.hpp"
#include "ahc/wspace.hpp"

namespace ahc {

// Phase-space distance || (g - gt, pi - pit) ||_F with the paper's delta
// (negative) on the decaying pieces.
inline double phase_distance(const PhasePoint& a, const PhasePoint& b, double delta_phase) {
  const ChartGrid& g = *a.g.chart;
  RegionMask all = full_region(g);
  Field dg = make_field(g, FieldKind::SymCov2);
  Field dpi = make_field(g, FieldKind::SymCon2);
  for (size_t i = 0; i < dg.values.size(); ++i) dg.values[i] = a.g.values[i] - b.g.values[i];
  for (size_t i = 0; i < dpi.values.size(); ++i) dpi.values[i] = a.pi.values[i] - b.pi.values[i];
  if (a.g.has_analytic() && b.g.has_analytic())
    dg.analytic = add_fn(a.g.analytic, scale_fn(b.g.analytic, -1.0, 6), 6);
  if (a.pi.has_analytic() && b.pi.has_analytic())
    dpi.analytic = add_fn(a.pi.analytic, scale_fn(b.pi.analytic, -1.0, 6), 6);
  return weighted_norm(dg, {2, 2, delta_phase}, all) + weighted_norm(dpi, {1, 2, delta_phase}, all);
}

struct LipschitzResult {
  ConstantEstimate estimate;
  double distance = 0;
};

inline LipschitzResult lipschitz_probe(const PhasePoint& pa, const PhasePoint& pb,
                                       const ReferenceData& ref,
                                       const std::vector<LapseShiftMember>& family, double delta) {
  if (family.empty()) throw EmptyFamily("lipschitz probe needs a family");
  const ChartGrid& g = *pa.g.chart;
  RegionMask all = full_region(g);
  double w = -delta;
  LipschitzResult out;
  out.estimate.id = "LIPSCHITZ";
  out.estimate.delta = delta;
  out.estimate.family_size = int(family.size());
  out.distance = phase_distance(pa, pb, delta);
  if (out.distance <= 1e-14) {
    out.estimate.value = 0.0;
    out.estimate.degenerate = true;
    out.estimate.notes = "zero phase-space separation";
    return out;
  }
  double best = 0;
  for (const auto& m : family) {
    LapseShift xi{sample_analytic(g, FieldKind::Scalar, m.N),
                  sample_analytic(g, FieldKind::OneForm, m.X)};
    double nxi = weighted_norm(xi.N, {2, 2, w}, all) + weighted_norm(xi.X, {2, 2, w}, all);
    if (!(nxi > 0)) continue;
    PStarFields A = p_star(pa, ref, xi);
    PStarFields B = p_star(pb, ref, xi);
    Field d1 = make_field(g, FieldKind::SymCon2);
    Field d2 = make_field(g, FieldKind::CovDSym2);
    for (size_t i = 0; i < d1.values.size(); ++i) d1.values[i] = A.p1.values[i] - B.p1.values[i];
    for (size_t i = 0; i < d2.values.size(); ++i) d2.values[i] = A.p2.values[i] - B.p2.values[i];
    double diff = weighted_seminorm(d1, 0, 2, w, all) + weighted_seminorm(d2, 0, 2, w, all);
    best = std::max(best, diff / (out.distance * nxi));
  }
  out.estimate.value = best;
  return out;
}

}  // namespace ahc
