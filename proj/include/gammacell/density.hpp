#pragma once

#include "gammacell/linalg.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace gammacell {

enum class DensityKind {
  ConstantPNorm,       // |X|^p
  TwoPhasePNorm,       // a(x) |X|^p
  SingleWell,          // a(x) dist^p(X, SO(n))
  MultiWell,           // a(x) min_i dist^p(X, SO(n)(I + delta U_i))
  LinearizedMultiWell, // a(x) min_i |X_sym - U_i|^p
  ScalarDoubleWell,    // a(x) min{|X - 1|^p, |X + 1|^p}, n = 1
  CustomSampled,       // a(x) h(X) with h tabulated (or a user callable)
};

std::string to_string(DensityKind kind);
DensityKind density_kind_from_string(const std::string& name);

// Axis-aligned box of the unit cell, [lo_i, hi_i) per axis, read periodically.
struct PhaseBox {
  std::vector<double> lo;
  std::vector<double> hi;
  double a = 1.0;
};

// Tabulated profile h for CustomSampled. For n = 1 the abscissa is the scalar
// X itself; for n >= 2 it is the Frobenius norm |X|. Linear extrapolation.
struct SampledProfile {
  std::vector<double> xs;
  std::vector<double> ys;
};

struct DensitySpec {
  DensityKind kind = DensityKind::ConstantPNorm;
  int n = 1;
  double p = 2.0;
  // Growth constants. Zero means "derive from the family" (see complete_growth_constants).
  double beta = 0.0;
  double c_low = 0.0;
  double C_low = 0.0;
  double delta = 0.0;
  std::vector<Mat> wells;
  std::vector<PhaseBox> phases;
  double a_default = 1.0;  // coefficient outside every phase box
  SampledProfile profile;
  // Programmatic override for CustomSampled; not serializable.
  std::function<double(const Mat&)> custom;

  bool is_linearized() const { return kind == DensityKind::LinearizedMultiWell; }
  bool is_nonlinear_elastic() const {
    return kind == DensityKind::SingleWell || kind == DensityKind::MultiWell;
  }
  bool x_independent() const;
  bool has_analytic_gradient() const { return !(kind == DensityKind::CustomSampled && custom); }
};

// Validates the spec and fills zero growth constants with family-derived values.
DensitySpec complete_growth_constants(DensitySpec spec);
void validate(const DensitySpec& spec);

double phase_coefficient(const DensitySpec& spec, const Point& x);

double eval(const DensitySpec& spec, const Point& x, const Mat& X);
// Subgradient choice at kinks: the first branch (well) attaining the minimum.
Mat eval_grad_X(const DensitySpec& spec, const Point& x, const Mat& X);

// Distance to SO(n) via singular values, sign-flipping the smallest one when det X < 0.
double dist_SO(const Mat& X);
// Distance to the well SO(n) Y.
double dist_to_well(const Mat& X, const Mat& Y);

// sqrt((I + dX)^T (I + dX)) - I - d X_sym. Throws unless det(I + dX) > 0.
Mat polar_correction(const Mat& X, double delta);

// delta^{-p} W_delta(x, I + delta X), with delta taken from the spec.
double linearize(const DensitySpec& spec, const Point& x, const Mat& X);

using DensityFn = std::function<double(const Point&, const Mat&)>;
DensityFn as_function(const DensitySpec& spec);
DensityFn linearized_function(const DensitySpec& spec);

struct EquivalenceOptions {
  double R = 1.0;
  double T = 1.0;
  int nx = 4;   // spatial samples per unit length and axis
  int nX = 9;   // net points per matrix entry over [-R, R]
  bool sym_only = false;
};

// Average over a midpoint x-grid on (-T, T)^n of the max over a finite net of
// {|X| <= R} of |f - g|. The net makes this a lower estimate of the true sup.
double equivalence_metric(const DensityFn& f, const DensityFn& g, int n,
                          const EquivalenceOptions& opts);
double equivalence_metric(const DensitySpec& f, const DensitySpec& g,
                          const EquivalenceOptions& opts);

struct Witness {
  Point x;
  Mat X;
  Mat R;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct CheckOutcome {
  bool pass = true;
  bool applicable = true;
  std::optional<Witness> witness;  // worst violation when failing
};

struct AdmissibilityReport {
  CheckOutcome frame_indifferent;
  CheckOutcome growth_upper;
  CheckOutcome nondegeneracy;
  int samples_used = 0;
  bool all_pass() const {
    return frame_indifferent.pass && growth_upper.pass && nondegeneracy.pass;
  }
};

AdmissibilityReport check_admissibility(const DensitySpec& spec, int n_samples,
                                        std::uint64_t seed);

}  // namespace gammacell
