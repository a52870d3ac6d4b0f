#pragma once

#include <vector>

#include <Eigen/Dense>

#include "rh/common.hpp"
#include "rh/payoff.hpp"

namespace rh {

// Closed convex sets of admissible positions, all containing the origin:
//   FullSpace  R^d (no constraint)
//   Box        [lo_1,hi_1] x ... x [lo_d,hi_d], lo_i <= 0 <= hi_i, bounds may
//              be infinite
//   Cone       product of {R, R+, R-, {0}} per coordinate
//   Subspace   coordinates in a given mask pinned to zero
enum class ConstraintKind { FullSpace, Box, Cone, Subspace };

enum class SignPattern { Free, NonNeg, NonPos, Zero };

class ConstraintSet {
public:
    static ConstraintSet full_space(int dim);
    static ConstraintSet box(Eigen::VectorXd lo, Eigen::VectorXd hi);
    static ConstraintSet cone(std::vector<SignPattern> pattern);
    static ConstraintSet subspace(std::vector<bool> zeroed);

    int dim() const { return dim_; }
    ConstraintKind kind() const { return kind_; }

    // Support function delta_K(zeta) = sup_{pi in K} pi'zeta. Non-negative
    // (K contains the origin); +inf signals zeta outside the barrier cone.
    double support(const Eigen::VectorXd& zeta) const;

    // Membership with a diagnostic margin: min over the canonical (axis)
    // directions of delta_K(zeta) - zeta'eta, which is exact for these
    // axis-aligned sets. margin >= 0 iff eta lies in K; when outside,
    // `direction` carries a separating zeta with support(zeta) < zeta'eta.
    struct Membership {
        bool inside = false;
        double margin = 0.0;
        Eigen::VectorXd direction;
    };
    Membership contains(const Eigen::VectorXd& eta) const;

    // Interval view [lo1, hi1] of a one-dimensional set (any kind).
    double lo1() const;
    double hi1() const;

private:
    ConstraintSet(ConstraintKind kind, int dim) : kind_(kind), dim_(dim) {}
    ConstraintKind kind_;
    int dim_;
    Eigen::VectorXd lo_, hi_;            // Box
    std::vector<SignPattern> pattern_;   // Cone
    std::vector<bool> zeroed_;           // Subspace
};

// ---------------------------------------------------------------------------
// Payoff transforms induced by one-dimensional constraint sets
// ---------------------------------------------------------------------------

// Additive lift: sup_u [ g(x+u) - delta_K(u) ]. Returns +inf when the
// payoff's linear growth escapes the penalty (slope above hi1 on the right,
// below lo1 on the left); otherwise the sup is attained on a compact set and
// located by scan plus golden refinement seeded with the payoff's kinks.
double facelift_amount(const Payoff& g, const ConstraintSet& K, double x);

// Domain over which the multiplicative lift's log-shift ranges:
//   AsWritten  zeta in K itself (intersected with the support function's
//              domain), the transform in its classical statement;
//   FullDomain zeta over the whole domain of delta_K, the closure needed for
//              sets (e.g. cones) whose own interior carries infinite penalty.
// The two agree when the maximizing shift already lies inside K; they differ
// (and only FullDomain is idempotent) when the payoff needs a shift past the
// set's own edge, where AsWritten cuts the sup short.
enum class ProportionRange { AsWritten, FullDomain };

// Multiplicative lift: sup_zeta [ exp(-delta_K(zeta)) g(x exp(zeta)) ] with
// zeta ranging per ProportionRange. Requires x > 0. Returns +inf when the
// payoff grows like x^a with a > hi1 (FullDomain).
double facelift_proportion(const Payoff& g, const ConstraintSet& K, double x,
                           ProportionRange range = ProportionRange::AsWritten);

// Upper concave hull of the sampled values on a strictly increasing grid;
// the result dominates v pointwise and is concave along the grid.
Eigen::VectorXd concave_envelope(const Eigen::VectorXd& x, const Eigen::VectorXd& v);

// Grid-sampled transform results as tabulated claims. Raise numeric_error if
// the transform diverges at any node (no finite claim exists).
Payoff facelift_amount_claim(const Payoff& g, const ConstraintSet& K, const Eigen::VectorXd& grid);
Payoff facelift_proportion_claim(const Payoff& g, const ConstraintSet& K, const Eigen::VectorXd& grid,
                                 ProportionRange range = ProportionRange::AsWritten);
Payoff concave_envelope_claim(const Payoff& g, const Eigen::VectorXd& grid);

}  // namespace rh
