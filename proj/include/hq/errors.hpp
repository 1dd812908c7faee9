#pragma once

#include <stdexcept>
#include <string>

namespace hq {

/// Index arguments outside their documented range (j > n, bad entry index, ...).
struct index_range_error : std::out_of_range {
    using std::out_of_range::out_of_range;
};

/// Input outside the admissible cone of the operator (spectrum not in the
/// k-convexity cone, non-SPD matrix, nonpositive quotient denominator).
struct admissibility_error : std::domain_error {
    using std::domain_error::domain_error;
};

/// Evaluation point outside the declared domain of a profile or grid.
struct evaluation_domain_error : std::domain_error {
    using std::domain_error::domain_error;
};

/// Family parameter below its validity threshold (c1 <= threshold).
struct threshold_error : std::domain_error {
    using std::domain_error::domain_error;
};

/// An improper integral fails its finiteness precondition.
struct divergence_error : std::domain_error {
    using std::domain_error::domain_error;
};

/// Requested target outside the attainable range of a monotone map.
struct range_error : std::domain_error {
    using std::domain_error::domain_error;
};

/// Iterative numerical process failed (eigensolver, quadrature budget).
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Nonlinear solver stagnated; message carries diagnostics.
struct nonconvergence_error : numerical_error {
    using numerical_error::numerical_error;
};

/// Solver could not reach an admissible state from the initial guess.
struct initialization_error : numerical_error {
    using numerical_error::numerical_error;
};

/// Barrier construction failed verification up to the search cap.
struct barrier_construction_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Inconsistent or unsatisfiable run configuration.
struct configuration_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace hq
