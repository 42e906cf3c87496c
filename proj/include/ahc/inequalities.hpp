#pragma once

// Empirical probes of the weighted functional inequalities: each returns the
// sup over a test family of LHS/RHS as a ConstantEstimate. These are
// consistency checks (finiteness, stability), never proofs.

#include <algorithm>
#include <cmath>
#include <string>

#include "ahc/families.hpp"
#include "ahc/wspace.hpp"

namespace ahc {

enum class InequalityId {
  Holder1,
  Holder2,
  SobolevInc,
  SobolevIneq,
  Ehrling,
  Prod19g,
  Prod19gbis,
  Uinfd,
  U3d,
  Annulus,
  Decay,
};

inline InequalityId inequality_from_string(const std::string& s) {
  if (s == "HOLDER1") return InequalityId::Holder1;
  if (s == "HOLDER2") return InequalityId::Holder2;
  if (s == "SOBOLEV_INC") return InequalityId::SobolevInc;
  if (s == "SOBOLEV_INEQ") return InequalityId::SobolevIneq;
  if (s == "EHRLING") return InequalityId::Ehrling;
  if (s == "PROD_19G") return InequalityId::Prod19g;
  if (s == "PROD_19GBIS") return InequalityId::Prod19gbis;
  if (s == "UINFD") return InequalityId::Uinfd;
  if (s == "U3D") return InequalityId::U3d;
  if (s == "ANNULUS") return InequalityId::Annulus;
  if (s == "DECAY") return InequalityId::Decay;
  throw UnknownIdentity(s);
}

struct IneqParams {
  double p = 2, q = 2, r = 2;
  double delta = 0, delta1 = 0, delta2 = 0, eta = 0;
  double lambda = 0.5;
  double epsilon = 0.1;
  double R = 1.0;
};

inline ConstantEstimate inequality_ratio(const ChartGrid& g, InequalityId which, const TestFamily& family,
                                         const IneqParams& prm, const RegionMask& region) {
  if (family.members.empty()) throw EmptyFamily("inequality probe needs a non-empty family");
  ConstantEstimate est;
  est.family_size = family.size();
  est.delta = prm.delta;
  est.region_R = prm.R;
  double best = 0.0;
  auto track = [&](double lhs, double rhs) {
    if (rhs > 1e-14 * std::max(1.0, lhs)) best = std::max(best, lhs / rhs);
  };

  std::vector<Field> sampled;
  sampled.reserve(family.members.size());
  for (const auto& m : family.members) sampled.push_back(sample_analytic(g, m.kind, m.fn));

  switch (which) {
    case InequalityId::Holder1: {
      est.id = "HOLDER1";
      for (size_t a = 0; a < sampled.size(); ++a)
        for (size_t b = 0; b < sampled.size(); ++b) {
          if (sampled[a].kind != FieldKind::Scalar || sampled[b].kind != FieldKind::Scalar) continue;
          Field uv = make_field(g, FieldKind::Scalar);
          for (int i = 0; i < g.n_nodes(); ++i) uv.at(i, 0) = sampled[a].at(i, 0) * sampled[b].at(i, 0);
          double lhs = weighted_norm(uv, {0, prm.p, prm.delta1 + prm.delta2}, region);
          double rhs = weighted_norm(sampled[a], {0, prm.q, prm.delta1}, region) *
                       weighted_norm(sampled[b], {0, prm.r, prm.delta2}, region);
          track(lhs, rhs);
        }
      break;
    }
    case InequalityId::Holder2: {
      est.id = "HOLDER2";
      for (auto& u : sampled) {
        double lhs = weighted_norm(u, {0, prm.p, prm.delta}, region);
        double rhs = std::pow(weighted_norm(u, {0, prm.q, prm.delta}, region), prm.lambda) *
                     std::pow(weighted_norm(u, {0, prm.r, prm.delta}, region), 1.0 - prm.lambda);
        track(lhs, rhs);
      }
      break;
    }
    case InequalityId::SobolevInc: {
      // ||u||_{k',p,delta'} <= c ||u||_{k,q,delta} with the inclusion index
      // condition; probe with k=1,k'=0.
      est.id = "SOBOLEV_INC";
      for (auto& u : sampled) {
        double lhs = weighted_norm(u, {0, prm.p, prm.eta}, region);
        double rhs = weighted_norm(u, {1, prm.q, prm.delta}, region);
        track(lhs, rhs);
      }
      break;
    }
    case InequalityId::SobolevIneq: {
      est.id = "SOBOLEV_INEQ";
      for (auto& u : sampled) {
        double lhs = weighted_norm(u, {0, prm.q, prm.delta}, region);
        double rhs = weighted_norm(u, {1, prm.p, prm.delta}, region);
        track(lhs, rhs);
      }
      break;
    }
    case InequalityId::Ehrling: {
      est.id = "EHRLING";
      for (auto& u : sampled) {
        double j1 = weighted_norm(u, {1, prm.p, prm.delta}, region);
        double k2 = weighted_norm(u, {2, prm.p, prm.delta}, region);
        double l0 = weighted_norm(u, {0, prm.p, prm.delta}, region);
        double lhs = std::max(0.0, j1 - prm.epsilon * k2);
        track(lhs, l0);
      }
      break;
    }
    case InequalityId::Prod19g: {
      est.id = "PROD_19G";
      for (size_t a = 0; a < sampled.size(); ++a)
        for (size_t b = 0; b < sampled.size(); ++b) {
          if (sampled[a].kind != FieldKind::Scalar || sampled[b].kind != FieldKind::Scalar) continue;
          Field uv = make_field(g, FieldKind::Scalar);
          for (int i = 0; i < g.n_nodes(); ++i) uv.at(i, 0) = sampled[a].at(i, 0) * sampled[b].at(i, 0);
          double lhs = weighted_norm(uv, {0, 2, prm.delta1 + prm.delta2}, region);
          double rhs = weighted_norm(sampled[a], {1, 2, prm.delta1}, region) *
                       weighted_norm(sampled[b], {1, 2, prm.delta2}, region);
          track(lhs, rhs);
        }
      break;
    }
    case InequalityId::Prod19gbis: {
      est.id = "PROD_19GBIS";
      if (prm.delta > 0) throw WindowViolation("PROD_19GBIS expects non-positive delta");
      for (size_t a = 0; a < sampled.size(); ++a)
        for (size_t b = 0; b < sampled.size(); ++b) {
          if (sampled[a].kind != FieldKind::Scalar || sampled[b].kind != FieldKind::Scalar) continue;
          Field uv = make_field(g, FieldKind::Scalar);
          for (int i = 0; i < g.n_nodes(); ++i) uv.at(i, 0) = sampled[a].at(i, 0) * sampled[b].at(i, 0);
          double lhs = weighted_norm(uv, {0, 2, prm.delta}, region);
          double rhs = weighted_norm(sampled[a], {1, 2, prm.delta}, region) *
                       weighted_norm(sampled[b], {1, 2, prm.delta}, region);
          track(lhs, rhs);
        }
      break;
    }
    case InequalityId::Uinfd: {
      est.id = "UINFD";
      for (auto& u : sampled) {
        double linf = weighted_norm(u, {0, kInf, prm.delta}, region);
        double w22 = weighted_norm(u, {2, 2, prm.delta}, region);
        double w12 = weighted_norm(u, {1, 2, prm.delta}, region);
        double lhs = std::max(0.0, linf - prm.epsilon * w22) * std::pow(prm.epsilon, 3.0);
        track(lhs, w12);
      }
      break;
    }
    case InequalityId::U3d: {
      est.id = "U3D";
      for (auto& u : sampled) {
        double l3 = weighted_norm(u, {0, 3, prm.delta}, region);
        double w12 = weighted_norm(u, {1, 2, prm.delta}, region);
        double l2 = weighted_norm(u, {0, 2, prm.delta}, region);
        double lhs = std::max(0.0, l3 - prm.epsilon * w12) * prm.epsilon;
        track(lhs, l2);
      }
      break;
    }
    case InequalityId::Annulus: {
      est.id = "ANNULUS";
      if (prm.delta > prm.eta) throw WindowViolation("ANNULUS needs delta <= eta");
      double factor = std::exp(2.0 * prm.R * (prm.delta - prm.eta));
      for (auto& u : sampled) {
        double lhs = weighted_norm(u, {0, prm.p, prm.eta}, region);
        double rhs = factor * weighted_norm(u, {0, prm.p, prm.delta}, region);
        track(lhs, rhs);
      }
      est.notes = "RHS includes the explicit factor e^{2R(delta-eta)}; slack = 1 - value";
      break;
    }
    case InequalityId::Decay: {
      // o(rho^{-delta}) tested through the weaker proxy sup rho^{delta+eps}|u|,
      // normalized by the W^{2,2}_delta norm; labeled as a proxy.
      est.id = "DECAY";
      for (auto& u : sampled) {
        double lhs = weighted_norm(u, {0, kInf, prm.delta + prm.epsilon}, region);
        double rhs = weighted_norm(u, {2, 2, prm.delta}, region);
        track(lhs, rhs);
      }
      est.notes = "sup-bound proxy for the asymptotic o() claim";
      break;
    }
  }
  est.value = best;
  return est;
}

}  // namespace ahc
