#pragma once

// Reproducible test families: seeded compactly supported bump superpositions
// plus a deterministic catalogue (rho powers, rotation Killing forms,
// cosh-distance functions), windowed to the requested support annulus.

#include <string>
#include <vector>

#include "ahc/ball.hpp"
#include "ahc/field.hpp"
#include "ahc/rng.hpp"

namespace ahc {

struct FamilyMember {
  std::string name;
  FieldKind kind = FieldKind::Scalar;
  AnalyticFn fn;
};

struct TestFamily {
  std::vector<FamilyMember> members;
  int size() const { return int(members.size()); }
};

// Scalar family on the support annulus [r_lo, r_hi].
inline TestFamily scalar_family(std::uint64_t seed, int n_random, double r_lo, double r_hi,
                                bool with_catalogue = true) {
  TestFamily fam;
  Rng rng(seed);
  if (with_catalogue) {
    AnalyticFn win = radial_window_fn(r_lo, r_hi, 0.2 * (r_hi - r_lo));
    for (double s : {0.0, 1.0, 2.0})
      fam.members.push_back({"rho^" + std::to_string(s), FieldKind::Scalar,
                             modulate_fn(rho_power_fn(s), win, 1)});
    fam.members.push_back({"cosh", FieldKind::Scalar, modulate_fn(cosh_distance_fn(), win, 1)});
  }
  for (int i = 0; i < n_random; ++i) {
    Rng sub = rng.fork(i + 1);
    int nb = 2 + int(sub.next_u64() % 4);
    double width = 0.25 * (r_hi - r_lo) * sub.uniform(0.5, 1.0);
    fam.members.push_back({"bumps" + std::to_string(i), FieldKind::Scalar,
                           bump_superposition_fn(random_bumps(sub, nb, r_lo, r_hi, width))});
  }
  return fam;
}

// 1-form family: bump 1-forms plus windowed Killing forms (rotations and
// translations) and rho-damped variants.
inline TestFamily oneform_family(std::uint64_t seed, int n_random, double r_lo, double r_hi,
                                 bool with_catalogue = true) {
  TestFamily fam;
  Rng rng(seed);
  double margin = 0.2 * (r_hi - r_lo);
  AnalyticFn win = radial_window_fn(r_lo, r_hi, margin);
  if (with_catalogue) {
    for (int ax = 0; ax < 3; ++ax)
      fam.members.push_back(
          {"rot" + std::to_string(ax), FieldKind::OneForm, modulate_fn(rotation_form_fn(ax), win, 3)});
    fam.members.push_back({"trans2", FieldKind::OneForm, modulate_fn(translation_form_fn(2), win, 3)});
    for (double s : {0.5, 1.0})
      fam.members.push_back({"rot_damped" + std::to_string(s), FieldKind::OneForm,
                             modulate_fn(modulate_fn(rotation_form_fn(0), rho_power_fn(s), 3), win, 3)});
  }
  for (int i = 0; i < n_random; ++i) {
    Rng sub = rng.fork(101 + i);
    fam.members.push_back({"vbumps" + std::to_string(i), FieldKind::OneForm,
                           bump_tensor_fn(FieldKind::OneForm, sub, 2, r_lo, r_hi, 0.2 * (r_hi - r_lo))});
  }
  return fam;
}

// Lapse-shift family: pairs (N, X) built from the scalar and 1-form stock.
struct LapseShiftMember {
  std::string name;
  AnalyticFn N;  // scalar
  AnalyticFn X;  // 1-form
};

inline std::vector<LapseShiftMember> lapse_shift_family(std::uint64_t seed, int n, double r_lo,
                                                        double r_hi) {
  std::vector<LapseShiftMember> fam;
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    Rng s1 = rng.fork(2 * i);
    Rng s2 = rng.fork(2 * i + 1);
    LapseShiftMember m;
    m.name = "xi" + std::to_string(i);
    m.N = bump_superposition_fn(random_bumps(s1, 3, r_lo, r_hi, 0.22 * (r_hi - r_lo)));
    m.X = bump_tensor_fn(FieldKind::OneForm, s2, 2, r_lo, r_hi, 0.22 * (r_hi - r_lo));
    fam.push_back(std::move(m));
  }
  return fam;
}

}  // namespace ahc
