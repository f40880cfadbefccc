#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "cloudcluster/types.hpp"

namespace cloudcluster {

/// Uniform threshold grid over one cluster's reachable statistic range.
struct ThresholdGrid {
    std::vector<double> points;  // ascending, endpoints included
    std::size_t cluster_index;
};

inline constexpr std::size_t kDefaultPointsPerSensor = 75;

/// points_per_sensor * n uniformly spaced points spanning [l_min, l_max]
/// inclusive. Requires points_per_sensor >= 2.
ThresholdGrid build_grid(const ClusterSpec& cluster, std::size_t cluster_index,
                         std::size_t points_per_sensor = kDefaultPointsPerSensor);

/// Which computation backs each level, per the size switch.
struct MethodPlan {
    std::vector<Method> cluster_methods;
    Method fc_method;
};

/// Exact at the cluster level iff size <= caps.cluster, exact at the FC
/// level iff the cluster count <= caps.fc.
MethodPlan select_method(std::span<const std::size_t> cluster_sizes, std::size_t cluster_count,
                         const Caps& caps = Caps{});
MethodPlan select_method(const SystemSpec& system, const Caps& caps = Caps{});

/// Evaluates the system loss as a function of the threshold vector under a
/// fixed method plan. Precomputes per-cluster statistic distributions (or
/// bound moments) once; line evaluations against one moving threshold reuse
/// a partial fusion-center distribution over the remaining clusters.
class SystemEvaluator {
public:
    SystemEvaluator(const SystemSpec& system, MethodPlan plan, Caps caps = Caps{});
    ~SystemEvaluator();
    SystemEvaluator(const SystemEvaluator&) = delete;
    SystemEvaluator& operator=(const SystemEvaluator&) = delete;

    ErrorPair cluster_pair(std::size_t cluster_index, double gamma) const;
    ErrorPair fc_pair(std::span<const double> gammas) const;
    double loss(std::span<const double> gammas) const;

    /// Fix every threshold except `cluster_index`; subsequent line_loss
    /// calls are O(log) for exact FC evaluation and O(N) for the bound.
    void begin_line(std::size_t cluster_index, std::span<const double> gammas);
    double line_loss(double gamma) const;

    const SystemSpec& system() const { return system_; }
    const MethodPlan& plan() const { return plan_; }

private:
    struct LineCache;
    struct ClusterEval;
    SystemSpec system_;
    MethodPlan plan_;
    Caps caps_;
    std::vector<double> p_com_;
    // one exact distribution or bound-moment block per cluster
    std::vector<ClusterEval> clusters_;
    std::unique_ptr<LineCache> line_;

    ErrorPair fc_from_pairs(std::span<const ErrorPair> pairs) const;
};

struct LineSearchResult {
    double gamma;
    double loss;
};

/// Minimize the full-system expected loss over one cluster's grid, all other
/// thresholds fixed; ties break toward the smallest gamma.
LineSearchResult line_search(SystemEvaluator& evaluator, const ThresholdGrid& grid,
                             std::span<const double> gammas);

struct OptimizationReport {
    std::vector<double> thresholds;
    double loss = 0.0;
    std::size_t sweeps = 0;
    std::vector<Method> method_per_cluster;
    Method fc_method = Method::exact;
    bool converged = false;
    /// Loss after every accepted coordinate update; nonincreasing.
    std::vector<double> loss_history;
};

inline constexpr double kDefaultGaussSeidelTol = 1e-9;
inline constexpr std::size_t kDefaultMaxSweeps = 50;

/// Coordinate descent over cluster thresholds in index order. Stops when a
/// full pass improves the loss by less than `tol`, changes no threshold, or
/// `max_sweeps` is reached. A coordinate update is kept only if it improves
/// the loss, so the reported sequence never increases.
OptimizationReport gauss_seidel(const SystemSpec& system, const MethodPlan& plan,
                                std::span<const ThresholdGrid> grids,
                                double tol = kDefaultGaussSeidelTol,
                                std::size_t max_sweeps = kDefaultMaxSweeps,
                                const Caps& caps = Caps{});

/// Shared-threshold sweep for systems of identical clusters, using the
/// exchangeable exact reduction (any cluster count) or the bounds per the
/// plan. Throws std::invalid_argument if the clusters differ.
OptimizationReport homogeneous_equal_threshold_search(const SystemSpec& system,
                                                      const MethodPlan& plan,
                                                      const ThresholdGrid& grid,
                                                      const Caps& caps = Caps{});

/// Majority count rule: declare 1 iff at least floor(n/2)+1 ones.
std::size_t majority_count(std::size_t cluster_size);

/// Exact error pair of the majority rule (count domain; Poisson-binomial
/// for heterogeneous clusters, so no size cap).
ErrorPair majority_error_probs(const ClusterSpec& cluster);

/// Weighted-domain threshold equivalent to the majority rule for a
/// homogeneous cluster: halfway between the statistic at k*-1 and k* ones.
double majority_gamma(const ClusterSpec& cluster);

/// Initial thresholds per the homogeneous-proxy recipe: for each cluster,
/// solve the shared-threshold problem for a system of cluster_count copies
/// of that cluster (its sensors replaced by their average spec when they
/// differ, methods per the size switch), then clamp into the cluster's own
/// range.
std::vector<double> initialize_thresholds(const SystemSpec& system,
                                          std::size_t points_per_sensor = kDefaultPointsPerSensor,
                                          const Caps& caps = Caps{});

}  // namespace cloudcluster
