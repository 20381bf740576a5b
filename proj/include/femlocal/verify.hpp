#pragma once

#include "femlocal/cutoff.hpp"
#include "femlocal/forms.hpp"
#include "femlocal/solve.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace femlocal {

enum class Inequality { Superapprox22, Superapprox21, Caccioppoli, LocalError, Coercivity, Poincare };

/// Stable identifiers: SUPERAPPROX_2_2, SUPERAPPROX_2_1, CACCIOPPOLI_3_9_b, LOCAL_ERROR_3_12,
/// COERCIVITY_R1, POINCARE_3_2_1a.
std::string_view inequality_id(Inequality which);
Inequality inequality_from_id(std::string_view id);

struct ElementEstimate {
  int element = -1;
  double lhs = 0.0;
  std::vector<double> rhs;
  double ratio = 0.0;  // lhs / sum(rhs); 0 when both sides vanish
};

/// Measured sides of one inequality lhs <= C * sum(rhs_terms).
/// effective_constant = lhs / sum(rhs_terms) always holds for the stored fields.
struct EstimateReport {
  Inequality inequality = Inequality::LocalError;
  double lhs = 0.0;
  std::vector<std::pair<std::string, double>> rhs_terms;
  double effective_constant = 0.0;
  bool trivial = false;  // lhs and rhs both vanish

  int level = 0;
  int degree = 0;
  double d = 0.0;
  std::vector<double> radii;
  std::optional<std::uint64_t> seed;
  std::vector<std::pair<std::string, bool>> preconditions;
  /// Secondary measurements (alternative surrogates, aggregates).
  std::vector<std::pair<std::string, double>> extras;
  /// Per-element detail for element-wise inequalities; the headline fields are those of the worst element.
  std::vector<ElementEstimate> elements;

  double rhs_sum() const;
  /// Sets effective_constant and trivial from lhs and rhs_terms.
  void finish();
};

struct SuperapproxResult {
  EstimateReport improved;   // (h/d)|omega chi|_1 + (h/d^2)|chi|_0 bounds |omega^2 chi - I(omega^2 chi)|_1
  EstimateReport classical;  // (h/d)|chi|_1 + (h/d^2)|chi|_0 bounds |omega chi - I(omega chi)|_1
};

/// Element-wise superapproximation on `scope` (default: elements touching the ball of radius
/// r_out + d around the cutoff center). Requires h_T <= d on the scope and cutoff order >= k + 1.
SuperapproxResult superapprox_check(const FeFunction& chi, const Cutoff& cutoff,
                                    const std::optional<std::vector<int>>& scope = std::nullopt);

/// ||u_h||_{H1(inner(G0))} <= C (1/d) ||u_h||_{L2(touching(G))} for u_h discrete harmonic on G.
/// Requires the mesh condition h_T/d <= 1/4 on G and a harmonicity residual <= 1e-9.
EstimateReport caccioppoli_check(const FeFunction& u_h, const CoefficientField& coeff, const BallSubdomain& g0,
                                 const BallSubdomain& g, double d);

struct LocalErrorOptions {
  std::vector<Point> singular_points;
  int sharpening_sweeps = 10;
};

/// ||u - u_h||_{H1(inner(G0))} against ||u - chi||_{H1(G)} + (1/d)||u - chi||_{L2(G)} + (1/d)||u - u_h||_{L2(G)},
/// G measured on its touching elements. chi is the interpolant of u, improved by Gauss-Seidel sweeps on the
/// squared objective when that lowers the sum. Requires h_T/d <= 1/16 on G and coercivity on G.
EstimateReport local_error_check(const ExactFunction& exact, const FeFunction& u_h, const CoefficientField& coeff,
                                 const BallSubdomain& g0, const BallSubdomain& g, double d,
                                 const LocalErrorOptions& options = {});

/// Smallest L(u, u) / ||u||_{H1}^2 over the ball-constrained subspace. effective_constant = 1 / value.
EstimateReport coercivity_check(const BallSubdomain& ball, const CoefficientField& coeff, SpacePtr space);

/// (1/rho) max ||u||_{L2(B)} / ||u||_{H1(B)} over the ball-constrained subspace, rho the ball radius.
EstimateReport poincare_check(const BallSubdomain& ball, SpacePtr space);

}  // namespace femlocal
