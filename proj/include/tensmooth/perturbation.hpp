#pragma once

// Small-spread expansions of the log-Euclidean and affine-invariant means
// around the Euclidean mean, checked against exact means on finite
// ensembles.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tensmooth/karcher.hpp"

namespace tensmooth {

enum class FamilyStyle { additive_symmetric, multiplicative };

/// How a family makes its perturbations average out.
///   centered:   random draws with the sample mean subtracted; odd moments
///               survive, so expansion residuals decay at the leading odd
///               order.
///   paired:     every draw is included with its negation; odd moments
///               vanish and residuals drop an order.
///   stratified: multiplicative only; each exponent runs over a midpoint grid
///               of its interval (randomly permuted per eigenvalue group), so
///               sample moments of e^Z approximate the uniform law.
enum class Balancing { centered, paired, stratified };

std::string_view to_string(FamilyStyle s);
std::string_view to_string(Balancing b);

struct MeanSpectrum {
  /// Distinct eigenvalues, non-increasing.
  std::vector<double> lambda;
  std::vector<int> multiplicity;
  /// Eigenprojections, one per distinct eigenvalue.
  std::vector<SymMatrix> projection;
  /// H_j = sum_{k != j} (lambda_k - lambda_j)^{-1} P_k.
  std::vector<SymMatrix> resolvent;
  bool isotropic = false;
  /// Spread constant: 1/lambda_1 when isotropic, otherwise the largest of
  /// 1/lambda_j and 1/|lambda_k - lambda_j|.
  double c = 0.0;
  /// Full eigendecomposition with clustered eigenvalues replaced by their
  /// cluster mean.
  EigDecomp eig;
};

/// Eigenvalues within 1e-9 relative of each other are treated as equal.
MeanSpectrum mean_spectrum(const SpdTensor& s, double cluster_tol = 1e-9);

struct FamilyOptions {
  FamilyStyle style = FamilyStyle::additive_symmetric;
  Balancing balancing = Balancing::centered;
  std::size_t size = 8;
  std::uint64_t seed = 1;
  /// Members satisfy ||B|| <= fill * t / C.
  double fill = 0.9;
};

struct PerturbationFamily {
  WeightedEnsemble ensemble;
  /// Exact Euclidean mean of the ensemble.
  SpdTensor mean;
  /// Additive: the requested mean. Multiplicative: S* = G diag(delta) G^T.
  SpdTensor target;
  double t = 0.0;
  double c = 0.0;
  /// max ||S_i - mean||_op.
  double sup_norm = 0.0;
  FamilyStyle style = FamilyStyle::additive_symmetric;
  Balancing balancing = Balancing::centered;
  /// Multiplicative only: per-eigenvalue exponent scale c_j (Z_j in
  /// [-c_j t, c_j t]) and the eigenvalues delta_j of the target, in the
  /// target's eigenvector order.
  std::vector<double> exponent_scale;
  std::vector<double> delta;
  EigDecomp target_eig;
};

/// Builds a family whose members are S(w) = mean + B(w) (additive) or
/// G diag(delta_j e^{Z_j(w)}) G^T (multiplicative), with a shape that is
/// fixed by the seed and an amplitude proportional to t. Throws when t is
/// too large for the members to stay SPD, or when a distinct eigenvalue gap
/// of the base is below 10 t.
PerturbationFamily make_family(const SpdTensor& base, double t, const FamilyOptions& opts = {});

/// Euclidean mean and the members minus it.
std::vector<SymMatrix> deviations(const PerturbationFamily& fam);

/// Closed-form second-order prediction of log S_LE - log S for a mean with
/// all eigenvalues distinct or isotropic. Throws std::domain_error for mixed
/// multiplicity.
SymMatrix expansion_log_euclidean(const PerturbationFamily& fam, const MeanSpectrum& spec);

struct AffineExpansion {
  SymMatrix log_prediction;
  /// S - E(B S^{-1} B) / 2.
  SpdTensor mean_prediction;
};

/// Closed-form prediction of log S_Aff - log S and of S_Aff itself. Same
/// case restriction as expansion_log_euclidean.
AffineExpansion expansion_affine(const PerturbationFamily& fam, const MeanSpectrum& spec);

struct LogDetExpansion {
  double le = 0.0;
  double aff = 0.0;
};

/// Predicted log det S_LE - log det S and log det S_Aff - log det S.
LogDetExpansion logdet_expansions(const PerturbationFamily& fam, const MeanSpectrum& spec);

/// Second-order term of E log(S + B) - log S from the divided-difference
/// form of the second derivative of log; valid for any multiplicity.
SymMatrix second_order_log_mean(const PerturbationFamily& fam, const MeanSpectrum& spec);

/// First derivative of log at the mean applied to x.
SymMatrix log_derivative(const MeanSpectrum& spec, const SymMatrix& x);

/// First-order affine prediction L[-E(B S^{-1} B)/2] for any multiplicity.
SymMatrix affine_log_prediction_general(const PerturbationFamily& fam, const MeanSpectrum& spec);

struct ExactMeans {
  SpdTensor log_euclidean;
  SpdTensor affine;
};

/// Log-Euclidean mean and the fixed-point affine mean at tolerance 1e-12.
ExactMeans exact_means(const PerturbationFamily& fam);

/// e^Z sample means per eigenvalue minus 1 against sinh(c t)/(c t) - 1 and
/// the diagonal of (mean - target) in the target eigenbasis divided by
/// delta_j. Multiplicative families only.
struct MultiplicativeBias {
  std::vector<double> observed;
  std::vector<double> predicted;
};
MultiplicativeBias multiplicative_bias(const PerturbationFamily& fam);

struct OrderCheckRow {
  std::string proposition;
  std::string case_label;
  std::string base;
  std::string style;
  double t = 0.0;
  double residual = 0.0;
  /// residual(t) / residual(t/2); NaN on the last row of a sweep.
  double ratio = 0.0;
  bool pass = true;
};

struct OrderCheckOptions {
  std::vector<double> ts{0.1, 0.05, 0.025};
  double ratio_lo = 6.0;
  double ratio_hi = 10.0;
  FamilyOptions family;
};

/// For one base and family style: residuals of both propositions and of
/// the affine mean prediction over the t sweep, with halving ratios.
std::vector<OrderCheckRow> order_check(const std::string& base_name, const SpdTensor& base,
                                       const OrderCheckOptions& opts);

}  // namespace tensmooth
