#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cloudcluster/types.hpp"

namespace cloudcluster {

/// Sensor-level fusion weights w1 = ln((1-p_md)/p_fa), w0 = ln((1-p_fa)/p_md).
/// Requires p_fa, p_md in (0, 0.5); both weights are then strictly positive.
FusionWeights fusion_weights(double p_fa, double p_md);

/// Fusion weights for a cluster verdict, built from its error pair. The pair
/// may come from a bound and can be degenerate, so probabilities are clamped
/// into (0,1) and the weights floored at zero: a verdict with
/// p_fa + p_md >= 1 carries no usable evidence and must not be inverted.
/// For exact pairs (p_fa + p_md <= 1 always holds) the floor never binds.
FusionWeights cluster_fusion_weights(const ErrorPair& pair);

/// Probability that at least one member sensor reaches the cloud:
/// 1 - prod(1 - p_com_i).
double cluster_com_prob(const ClusterSpec& cluster);

/// Weighted sum of one cluster's bits: sum_i [w1_i*y_i - w0_i*(1-y_i)].
double cluster_statistic(std::span<const int> bits, const ClusterSpec& cluster);

/// Local verdict: 1 iff the weighted statistic >= gamma (ties decide 1).
int cluster_decide(std::span<const int> bits, const ClusterSpec& cluster);

/// Fusion-center statistic over cluster verdicts z with connectivity tau,
/// using the given per-cluster verdict weights.
double fc_statistic(std::span<const int> tau, std::span<const int> verdicts,
                    std::span<const FusionWeights> weights);

/// Expected loss p0*P_FA*L10 + p1*P_MD*L01.
double expected_loss(const SystemSpec& system, const ErrorPair& fc_errors);

/// Distribution of one cluster's statistic under both hypotheses: atoms
/// sorted ascending with suffix sums, so the exact error pair at any
/// threshold is a binary search away.
class ClusterDistribution {
public:
    /// Full 2^n enumeration; throws cap_exceeded for clusters above `cap`.
    static ClusterDistribution enumerate(const ClusterSpec& cluster, std::size_t cap);

    /// Binomial shortcut (n+1 atoms); requires a homogeneous cluster.
    static ClusterDistribution binomial(const ClusterSpec& cluster);

    /// Binomial over the count of ones (majority-style count rules).
    /// Heterogeneous clusters use the Poisson-binomial recursion, so this
    /// has no size cap.
    static ClusterDistribution count_domain(const ClusterSpec& cluster);

    ErrorPair error_probs(double gamma) const;

    /// Pr(statistic >= t) under each hypothesis.
    double tail_h0(double t) const;
    double tail_h1(double t) const;

private:
    std::vector<double> stat_;
    std::vector<double> tail_h0_;
    std::vector<double> tail_h1_;
    void finalize(std::vector<double> stat, std::vector<double> p0, std::vector<double> p1);
};

/// Exact cluster error pair at the cluster's own threshold. Dispatches to
/// the binomial shortcut for homogeneous clusters, otherwise enumerates
/// (throws cap_exceeded above `cap`).
ErrorPair cluster_error_probs_exact(const ClusterSpec& cluster, std::size_t cap = Caps{}.cluster);

ErrorPair cluster_error_probs_enumerated(const ClusterSpec& cluster, std::size_t cap = Caps{}.cluster);
ErrorPair cluster_error_probs_binomial(const ClusterSpec& cluster);

/// Distribution of the fusion-center statistic contributed by a subset of
/// clusters. Each cluster adds three atoms: +w1 (verdict 1 got through),
/// -w0 (verdict 0 got through), 0 (cluster silent).
class FcStatDistribution {
public:
    static FcStatDistribution build(const SystemSpec& system,
                                    std::span<const ErrorPair> cluster_errors,
                                    std::span<const std::size_t> cluster_indices,
                                    std::size_t cap);

    double tail_h0(double t) const;
    double tail_h1(double t) const;

private:
    std::vector<double> stat_;
    std::vector<double> tail_h0_;
    std::vector<double> tail_h1_;
};

/// Exact FC error pair by enumerating every (connectivity, verdict)
/// outcome; throws cap_exceeded above `cap` clusters.
ErrorPair fc_error_probs_enumerated(const SystemSpec& system,
                                    std::span<const ErrorPair> cluster_errors,
                                    std::size_t cap = Caps{}.fc);

/// Exact FC error pair for systems whose clusters are interchangeable
/// (identical error pair and communication probability): condition on the
/// number of communicating clusters and the count of ones among them.
ErrorPair fc_error_probs_exchangeable(const SystemSpec& system, const ErrorPair& shared_errors);

/// True when every cluster has bitwise-identical sensors and the supplied
/// error pairs are bitwise equal, so the exchangeable reduction applies.
bool fc_exchangeable(const SystemSpec& system, std::span<const ErrorPair> cluster_errors);

/// Exact FC error pair: exchangeable reduction when possible (no size cap),
/// otherwise full enumeration within `cap`.
ErrorPair fc_error_probs_exact(const SystemSpec& system,
                               std::span<const ErrorPair> cluster_errors,
                               std::size_t cap = Caps{}.fc);

namespace detail {
/// ln C(n,k) via lgamma.
double log_choose(std::uint64_t n, std::uint64_t k);
/// Binomial pmf, stable in the tails.
double binom_pmf(std::uint64_t n, std::uint64_t k, double p);
}  // namespace detail

}  // namespace cloudcluster
