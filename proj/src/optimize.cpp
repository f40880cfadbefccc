#include "cloudcluster/optimize.hpp"

#include <algorithm>
#include <optional>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cloudcluster/bennett.hpp"
#include "cloudcluster/detection.hpp"

namespace cloudcluster {

ThresholdGrid build_grid(const ClusterSpec& cluster, std::size_t cluster_index,
                         std::size_t points_per_sensor) {
    if (points_per_sensor < 2)
        throw std::invalid_argument("build_grid: at least two points per sensor required");
    const std::size_t count = points_per_sensor * cluster.size();
    const double lo = cluster.l_min();
    const double hi = cluster.l_max();
    ThresholdGrid grid;
    grid.cluster_index = cluster_index;
    grid.points.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double t = double(i) / double(count - 1);
        grid.points[i] = std::clamp(lo + t * (hi - lo), lo, hi);
    }
    grid.points.front() = lo;
    grid.points.back() = hi;
    return grid;
}

MethodPlan select_method(std::span<const std::size_t> cluster_sizes, std::size_t cluster_count,
                         const Caps& caps) {
    MethodPlan plan;
    plan.cluster_methods.reserve(cluster_sizes.size());
    for (const std::size_t n : cluster_sizes)
        plan.cluster_methods.push_back(n <= caps.cluster ? Method::exact : Method::bennett);
    plan.fc_method = cluster_count <= caps.fc ? Method::exact : Method::bennett;
    return plan;
}

MethodPlan select_method(const SystemSpec& system, const Caps& caps) {
    std::vector<std::size_t> sizes;
    sizes.reserve(system.cluster_count());
    for (const ClusterSpec& c : system.clusters()) sizes.push_back(c.size());
    return select_method(sizes, system.cluster_count(), caps);
}

// ---------------------------------------------------------------------------
// SystemEvaluator

struct SystemEvaluator::ClusterEval {
    Method method;
    // exact side
    std::optional<ClusterDistribution> dist;
    // bound side
    std::optional<ClusterBoundMoments> moments;
};

struct SystemEvaluator::LineCache {
    std::size_t moving = 0;
    std::vector<ErrorPair> pairs;  // slot `moving` is rewritten per query
    // exact FC: statistic distribution of the fixed clusters
    std::optional<FcStatDistribution> others;
    // bound FC: per-hypothesis moment sums over the fixed clusters
    double mean_h0 = 0.0, mean_h1 = 0.0;
    double var_h0 = 0.0, var_h1 = 0.0;
    double m_h0 = 0.0, m_h1 = 0.0;
};

namespace {

struct FcClusterMoment {
    double mu0, mu1, var0, var1, m0, m1;
};

FcClusterMoment fc_cluster_moment(const ErrorPair& e, double pc) {
    const FusionWeights w = cluster_fusion_weights(e);
    const double p0 = e.p_fa;
    const double p1 = 1.0 - e.p_md;
    FcClusterMoment m{};
    m.mu0 = pc * (w.w1 * p0 - w.w0 * (1.0 - p0));
    m.mu1 = pc * (w.w1 * p1 - w.w0 * (1.0 - p1));
    m.var0 = pc * (w.w1 * w.w1 * p0 + w.w0 * w.w0 * (1.0 - p0)) - m.mu0 * m.mu0;
    m.var1 = pc * (w.w1 * w.w1 * p1 + w.w0 * w.w0 * (1.0 - p1)) - m.mu1 * m.mu1;
    m.m0 = m.m1 = 0.0;
    if (pc > 0.0) {
        m.m0 = std::max(std::fabs(w.w1 - m.mu0), std::fabs(w.w0 + m.mu0));
        m.m1 = std::max(std::fabs(w.w1 - m.mu1), std::fabs(w.w0 + m.mu1));
    }
    if (pc < 1.0) {
        m.m0 = std::max(m.m0, std::fabs(m.mu0));
        m.m1 = std::max(m.m1, std::fabs(m.mu1));
    }
    return m;
}

BoundResult fc_bound_side(std::uint64_t n, double alpha, double m, double sigma2) {
    if (!(m > 0.0) || !(sigma2 > 0.0)) return BoundResult{1.0, false, 0.0, 0.0, 0.0, 1.0};
    return bennett_u({n, alpha, m, sigma2});
}

double clamp_prob(double p) { return std::min(1.0, std::max(0.0, p)); }

}  // namespace

SystemEvaluator::~SystemEvaluator() = default;

SystemEvaluator::SystemEvaluator(const SystemSpec& system, MethodPlan plan, Caps caps)
    : system_(system), plan_(std::move(plan)), caps_(caps) {
    if (plan_.cluster_methods.size() != system_.cluster_count())
        throw std::invalid_argument("SystemEvaluator: one cluster method per cluster required");
    p_com_.reserve(system_.cluster_count());
    clusters_.reserve(system_.cluster_count());
    for (std::size_t j = 0; j < system_.cluster_count(); ++j) {
        const ClusterSpec& c = system_.clusters()[j];
        p_com_.push_back(cluster_com_prob(c));
        ClusterEval eval;
        eval.method = plan_.cluster_methods[j];
        if (eval.method == Method::exact) {
            eval.dist = c.homogeneous() ? ClusterDistribution::binomial(c)
                                        : ClusterDistribution::enumerate(c, caps_.cluster);
        } else {
            eval.moments = cluster_bound_moments(c);
        }
        clusters_.push_back(std::move(eval));
    }
}

ErrorPair SystemEvaluator::cluster_pair(std::size_t cluster_index, double gamma) const {
    const ClusterEval& eval = clusters_.at(cluster_index);
    if (eval.method == Method::exact) return eval.dist->error_probs(gamma);
    return cluster_error_bounds_at(*eval.moments, gamma);
}

ErrorPair SystemEvaluator::fc_from_pairs(std::span<const ErrorPair> pairs) const {
    if (plan_.fc_method == Method::exact)
        return fc_error_probs_exact(system_, pairs, caps_.fc);
    return fc_error_bounds(system_, pairs);
}

ErrorPair SystemEvaluator::fc_pair(std::span<const double> gammas) const {
    if (gammas.size() != system_.cluster_count())
        throw std::invalid_argument("SystemEvaluator: one threshold per cluster required");
    std::vector<ErrorPair> pairs;
    pairs.reserve(gammas.size());
    for (std::size_t j = 0; j < gammas.size(); ++j) pairs.push_back(cluster_pair(j, gammas[j]));
    return fc_from_pairs(pairs);
}

double SystemEvaluator::loss(std::span<const double> gammas) const {
    return expected_loss(system_, fc_pair(gammas));
}

void SystemEvaluator::begin_line(std::size_t cluster_index, std::span<const double> gammas) {
    if (cluster_index >= system_.cluster_count())
        throw std::invalid_argument("begin_line: cluster index out of range");
    LineCache cache;
    cache.moving = cluster_index;
    cache.pairs.reserve(system_.cluster_count());
    for (std::size_t j = 0; j < system_.cluster_count(); ++j)
        cache.pairs.push_back(cluster_pair(j, gammas[j]));

    if (plan_.fc_method == Method::exact) {
        std::vector<std::size_t> fixed;
        fixed.reserve(system_.cluster_count() - 1);
        for (std::size_t j = 0; j < system_.cluster_count(); ++j)
            if (j != cluster_index) fixed.push_back(j);
        cache.others = FcStatDistribution::build(system_, cache.pairs, fixed, caps_.fc);
    } else {
        for (std::size_t j = 0; j < system_.cluster_count(); ++j) {
            if (j == cluster_index) continue;
            const FcClusterMoment m = fc_cluster_moment(cache.pairs[j], p_com_[j]);
            cache.mean_h0 += m.mu0;
            cache.mean_h1 += m.mu1;
            cache.var_h0 += m.var0;
            cache.var_h1 += m.var1;
            cache.m_h0 = std::max(cache.m_h0, m.m0);
            cache.m_h1 = std::max(cache.m_h1, m.m1);
        }
    }
    line_ = std::make_unique<LineCache>(std::move(cache));
}

double SystemEvaluator::line_loss(double gamma) const {
    if (!line_) throw std::logic_error("line_loss: begin_line must run first");
    const LineCache& cache = *line_;
    const std::size_t j = cache.moving;
    const ErrorPair pair = cluster_pair(j, gamma);
    const double gamma_fc = system_.fc_gamma();

    ErrorPair fc{};
    if (plan_.fc_method == Method::exact) {
        const FusionWeights w = cluster_fusion_weights(pair);
        const double pc = p_com_[j];
        double p_fa = 0.0;
        double p_d = 0.0;
        if (pc > 0.0) {
            p_fa += pc * pair.p_fa * cache.others->tail_h0(gamma_fc - w.w1);
            p_fa += pc * (1.0 - pair.p_fa) * cache.others->tail_h0(gamma_fc + w.w0);
            p_d += pc * (1.0 - pair.p_md) * cache.others->tail_h1(gamma_fc - w.w1);
            p_d += pc * pair.p_md * cache.others->tail_h1(gamma_fc + w.w0);
        }
        if (pc < 1.0) {
            p_fa += (1.0 - pc) * cache.others->tail_h0(gamma_fc);
            p_d += (1.0 - pc) * cache.others->tail_h1(gamma_fc);
        }
        fc = {clamp_prob(p_fa), clamp_prob(1.0 - p_d), Method::exact};
    } else {
        const FcClusterMoment m = fc_cluster_moment(pair, p_com_[j]);
        const std::uint64_t count = system_.cluster_count();
        const BoundResult fa =
            fc_bound_side(count, gamma_fc - (cache.mean_h0 + m.mu0), std::max(cache.m_h0, m.m0),
                          (cache.var_h0 + m.var0) / double(count));
        const BoundResult md =
            fc_bound_side(count, (cache.mean_h1 + m.mu1) - gamma_fc, std::max(cache.m_h1, m.m1),
                          (cache.var_h1 + m.var1) / double(count));
        fc = {fa.value, md.value, Method::bennett};
    }
    return expected_loss(system_, fc);
}

LineSearchResult line_search(SystemEvaluator& evaluator, const ThresholdGrid& grid,
                             std::span<const double> gammas) {
    evaluator.begin_line(grid.cluster_index, gammas);
    LineSearchResult best{grid.points.front(), 0.0};
    bool first = true;
    for (const double gamma : grid.points) {
        const double loss = evaluator.line_loss(gamma);
        if (first || loss < best.loss) {
            best = {gamma, loss};
            first = false;
        }
    }
    return best;
}

OptimizationReport gauss_seidel(const SystemSpec& system, const MethodPlan& plan,
                                std::span<const ThresholdGrid> grids, double tol,
                                std::size_t max_sweeps, const Caps& caps) {
    if (max_sweeps < 1) throw std::invalid_argument("gauss_seidel: max_sweeps must be >= 1");
    if (grids.size() != system.cluster_count())
        throw std::invalid_argument("gauss_seidel: one grid per cluster required");
    for (std::size_t j = 0; j < grids.size(); ++j)
        if (grids[j].cluster_index != j)
            throw std::invalid_argument("gauss_seidel: grids must be in cluster order");

    SystemEvaluator evaluator(system, plan, caps);
    std::vector<double> gammas;
    gammas.reserve(system.cluster_count());
    for (const ClusterSpec& c : system.clusters()) gammas.push_back(c.gamma());

    OptimizationReport report;
    double current = evaluator.loss(gammas);
    report.loss_history.push_back(current);
    bool converged = false;
    std::size_t sweeps = 0;
    while (sweeps < max_sweeps && !converged) {
        ++sweeps;
        const double sweep_start = current;
        bool changed = false;
        for (std::size_t j = 0; j < gammas.size(); ++j) {
            const LineSearchResult best = line_search(evaluator, grids[j], gammas);
            // adopt ties too: the line search returns a canonical (smallest)
            // minimizer, so repeated sweeps reach a fixed point
            if (best.loss <= current) {
                current = best.loss;
                if (gammas[j] != best.gamma) changed = true;
                gammas[j] = best.gamma;
            }
            report.loss_history.push_back(current);
        }
        if (!changed || sweep_start - current < tol) converged = true;
    }

    report.thresholds = gammas;
    report.loss = evaluator.loss(gammas);
    report.sweeps = sweeps;
    report.method_per_cluster = plan.cluster_methods;
    report.fc_method = plan.fc_method;
    report.converged = converged;
    return report;
}

namespace {

bool clusters_identical(const SystemSpec& system) {
    const ClusterSpec& first = system.clusters().front();
    for (const ClusterSpec& c : system.clusters()) {
        if (c.size() != first.size()) return false;
        for (std::size_t i = 0; i < c.size(); ++i) {
            const SensorSpec& a = c.sensors()[i];
            const SensorSpec& b = first.sensors()[i];
            if (a.p_fa != b.p_fa || a.p_md != b.p_md || a.p_com != b.p_com) return false;
        }
    }
    return true;
}

}  // namespace

OptimizationReport homogeneous_equal_threshold_search(const SystemSpec& system,
                                                      const MethodPlan& plan,
                                                      const ThresholdGrid& grid,
                                                      const Caps& caps) {
    if (!clusters_identical(system))
        throw std::invalid_argument(
            "homogeneous_equal_threshold_search: clusters must be identical");
    if (plan.cluster_methods.size() != system.cluster_count())
        throw std::invalid_argument("homogeneous_equal_threshold_search: bad method plan");

    const ClusterSpec& proto = system.clusters().front();
    const Method cluster_method = plan.cluster_methods.front();
    std::optional<ClusterDistribution> dist;
    std::optional<ClusterBoundMoments> moments;
    if (cluster_method == Method::exact) {
        dist = proto.homogeneous() ? ClusterDistribution::binomial(proto)
                                   : ClusterDistribution::enumerate(proto, caps.cluster);
    } else {
        moments = cluster_bound_moments(proto);
    }

    OptimizationReport report;
    bool first = true;
    double best_gamma = grid.points.front();
    double best_loss = 0.0;
    std::vector<ErrorPair> pairs(system.cluster_count());
    ErrorPair last_pair{-1.0, -1.0, Method::exact};
    double last_loss = 0.0;
    for (const double gamma : grid.points) {
        const ErrorPair pair = cluster_method == Method::exact
                                   ? dist->error_probs(gamma)
                                   : cluster_error_bounds_at(*moments, gamma);
        double loss;
        if (!first && pair.p_fa == last_pair.p_fa && pair.p_md == last_pair.p_md) {
            // exact pairs are piecewise constant in gamma; skip repeats
            loss = last_loss;
        } else {
            ErrorPair fc{};
            if (plan.fc_method == Method::exact) {
                fc = fc_error_probs_exchangeable(system, pair);
            } else {
                std::fill(pairs.begin(), pairs.end(), pair);
                fc = fc_error_bounds(system, pairs);
            }
            loss = expected_loss(system, fc);
        }
        last_pair = pair;
        last_loss = loss;
        if (first || loss < best_loss) {
            best_gamma = gamma;
            best_loss = loss;
            first = false;
        }
    }

    report.thresholds.assign(system.cluster_count(), best_gamma);
    report.loss = best_loss;
    report.sweeps = 1;
    report.method_per_cluster = plan.cluster_methods;
    report.fc_method = plan.fc_method;
    report.converged = true;
    report.loss_history.push_back(best_loss);
    return report;
}

std::size_t majority_count(std::size_t cluster_size) { return cluster_size / 2 + 1; }

ErrorPair majority_error_probs(const ClusterSpec& cluster) {
    const ClusterDistribution counts = ClusterDistribution::count_domain(cluster);
    const double k_star = double(majority_count(cluster.size()));
    return counts.error_probs(k_star);
}

double majority_gamma(const ClusterSpec& cluster) {
    if (!cluster.homogeneous())
        throw std::invalid_argument("majority_gamma: homogeneous cluster required");
    const SensorSpec& s = cluster.sensors().front();
    const FusionWeights w = fusion_weights(s.p_fa, s.p_md);
    const double k_star = double(majority_count(cluster.size()));
    // halfway between the statistic at k*-1 and k* ones
    return (k_star - 0.5) * (w.w1 + w.w0) - double(cluster.size()) * w.w0;
}

std::vector<double> initialize_thresholds(const SystemSpec& system,
                                          std::size_t points_per_sensor, const Caps& caps) {
    std::vector<double> gammas;
    gammas.reserve(system.cluster_count());
    for (const ClusterSpec& cluster : system.clusters()) {
        // homogeneous proxy: this cluster replicated across the system, its
        // sensors replaced by their average spec when they differ
        std::vector<SensorSpec> sensors;
        if (cluster.homogeneous()) {
            sensors = cluster.sensors();
        } else {
            double p_fa = 0.0, p_md = 0.0, p_com = 0.0;
            for (const SensorSpec& s : cluster.sensors()) {
                p_fa += s.p_fa;
                p_md += s.p_md;
                p_com += s.p_com;
            }
            const double n = double(cluster.size());
            sensors.assign(cluster.size(), SensorSpec(p_fa / n, p_md / n, p_com / n));
        }
        const ClusterSpec proxy(std::move(sensors), 0.0);
        const SystemSpec proxy_system(
            std::vector<ClusterSpec>(system.cluster_count(), proxy), system.p1(),
            system.loss_fa(), system.loss_md());
        const MethodPlan proxy_plan = select_method(proxy_system, caps);
        const ThresholdGrid grid = build_grid(proxy, 0, points_per_sensor);
        const OptimizationReport report =
            homogeneous_equal_threshold_search(proxy_system, proxy_plan, grid, caps);
        gammas.push_back(std::clamp(report.thresholds.front(), cluster.l_min(), cluster.l_max()));
    }
    return gammas;
}

}  // namespace cloudcluster
