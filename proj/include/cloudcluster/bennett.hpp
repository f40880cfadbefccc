#pragma once

#include <cstdint>
#include <span>

#include "cloudcluster/types.hpp"

namespace cloudcluster {

/// Ingredients of the improved Bennett tail bound for a sum of n centered,
/// independent variables: deviation alpha, almost-sure range bound m and
/// average variance sigma2.
struct BennettInput {
    std::uint64_t n;
    double alpha;
    double m;
    double sigma2;
};

/// Value of the U tail bound together with the intermediate quantities.
/// `valid` is false outside the 0 < alpha < n*m window, in which case
/// `value` is the trivial bound 1.
struct BoundResult {
    double value;
    bool valid;
    double lambda;
    double a;
    double b;
    /// U before clamping into [0, 1]; can exceed 1 for weak parameters.
    double raw;
};

/// U(n, alpha, M, sigma^2) = exp[-Lambda*alpha/M + n*ln(1 + sigma^2/M^2 *
/// (e^Lambda - 1 - Lambda))] with Lambda = A - W0(B*e^A),
/// A = M^2/sigma^2 + n*M/alpha - 1 and B = n*M/alpha - 1.
/// Throws std::invalid_argument for n < 1, m <= 0 or sigma2 <= 0.
BoundResult bennett_u(const BennettInput& input);

/// Per-hypothesis moments of the centered cluster statistic, precomputed so
/// bounds at many thresholds are cheap (only alpha depends on gamma).
struct ClusterBoundMoments {
    std::uint64_t n;
    double mean_h0, mean_h1;      // sums of E(y~ | H)
    double sigma2_h0, sigma2_h1;  // average per-sensor variances
    double m_h0, m_h1;            // max per-sensor range bounds
};

ClusterBoundMoments cluster_bound_moments(const ClusterSpec& cluster);

/// Bennett bound pair for a cluster at an explicit threshold.
ErrorPair cluster_error_bounds_at(const ClusterBoundMoments& moments, double gamma);

/// Bennett bound pair at the cluster's own threshold. Each side degrades to
/// the trivial bound 1 when its validity window fails.
ErrorPair cluster_error_bounds(const ClusterSpec& cluster);

/// Both sides with their intermediate quantities kept.
struct BoundPairDetail {
    BoundResult fa;
    BoundResult md;
};

BoundPairDetail cluster_error_bounds_detailed(const ClusterSpec& cluster);

/// Bennett bound pair for the fusion-center decision, built from the
/// per-cluster error pairs and communication probabilities. The summands
/// mix three atoms (+w1, -w0, 0); a degenerate system (zero range or
/// variance) falls back to the trivial bound.
ErrorPair fc_error_bounds(const SystemSpec& system, std::span<const ErrorPair> cluster_errors);

BoundPairDetail fc_error_bounds_detailed(const SystemSpec& system,
                                         std::span<const ErrorPair> cluster_errors);

}  // namespace cloudcluster
