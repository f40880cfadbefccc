#include "cloudcluster/detection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cloudcluster {

namespace {

// Probabilities fed to logs are kept away from 0 and 1 so degenerate error
// pairs (e.g. P_FA = 1 at gamma = l_min) stay finite.
constexpr double kProbClamp = 1e-12;

double clamp_prob(double p) { return std::min(1.0, std::max(0.0, p)); }

double clamp_open(double p) { return std::min(1.0 - kProbClamp, std::max(kProbClamp, p)); }

}  // namespace

namespace detail {

double log_choose(std::uint64_t n, std::uint64_t k) {
    return std::lgamma(double(n) + 1.0) - std::lgamma(double(k) + 1.0) -
           std::lgamma(double(n - k) + 1.0);
}

double binom_pmf(std::uint64_t n, std::uint64_t k, double p) {
    if (p <= 0.0) return k == 0 ? 1.0 : 0.0;
    if (p >= 1.0) return k == n ? 1.0 : 0.0;
    return std::exp(log_choose(n, k) + double(k) * std::log(p) +
                    double(n - k) * std::log1p(-p));
}

}  // namespace detail

FusionWeights fusion_weights(double p_fa, double p_md) {
    if (!(std::isfinite(p_fa) && p_fa > 0.0 && p_fa < 0.5) ||
        !(std::isfinite(p_md) && p_md > 0.0 && p_md < 0.5))
        throw std::invalid_argument("fusion_weights: probabilities must lie in (0, 0.5)");
    return {std::log((1.0 - p_md) / p_fa), std::log((1.0 - p_fa) / p_md)};
}

FusionWeights cluster_fusion_weights(const ErrorPair& pair) {
    const double p_fa = clamp_open(pair.p_fa);
    const double p_md = clamp_open(pair.p_md);
    return {std::max(0.0, std::log((1.0 - p_md) / p_fa)),
            std::max(0.0, std::log((1.0 - p_fa) / p_md))};
}

double cluster_com_prob(const ClusterSpec& cluster) {
    double miss = 1.0;
    for (const SensorSpec& s : cluster.sensors()) miss *= 1.0 - s.p_com;
    return 1.0 - miss;
}

double cluster_statistic(std::span<const int> bits, const ClusterSpec& cluster) {
    if (bits.size() != cluster.size())
        throw std::invalid_argument("cluster_statistic: one bit per sensor required");
    double stat = 0.0;
    for (std::size_t i = 0; i < bits.size(); ++i) {
        const SensorSpec& s = cluster.sensors()[i];
        const FusionWeights w = fusion_weights(s.p_fa, s.p_md);
        stat += bits[i] ? w.w1 : -w.w0;
    }
    return stat;
}

int cluster_decide(std::span<const int> bits, const ClusterSpec& cluster) {
    return cluster_statistic(bits, cluster) >= cluster.gamma() ? 1 : 0;
}

double fc_statistic(std::span<const int> tau, std::span<const int> verdicts,
                    std::span<const FusionWeights> weights) {
    if (tau.size() != verdicts.size() || tau.size() != weights.size())
        throw std::invalid_argument("fc_statistic: mismatched vector lengths");
    double stat = 0.0;
    for (std::size_t j = 0; j < tau.size(); ++j) {
        if (!tau[j]) continue;
        stat += verdicts[j] ? weights[j].w1 : -weights[j].w0;
    }
    return stat;
}

double expected_loss(const SystemSpec& system, const ErrorPair& fc_errors) {
    return system.p0() * fc_errors.p_fa * system.loss_fa() +
           system.p1() * fc_errors.p_md * system.loss_md();
}

void ClusterDistribution::finalize(std::vector<double> stat, std::vector<double> p0,
                                   std::vector<double> p1) {
    std::vector<std::size_t> order(stat.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return stat[a] < stat[b]; });
    stat_.resize(stat.size());
    tail_h0_.assign(stat.size() + 1, 0.0);
    tail_h1_.assign(stat.size() + 1, 0.0);
    for (std::size_t i = 0; i < order.size(); ++i) stat_[i] = stat[order[i]];
    for (std::size_t i = order.size(); i-- > 0;) {
        tail_h0_[i] = tail_h0_[i + 1] + p0[order[i]];
        tail_h1_[i] = tail_h1_[i + 1] + p1[order[i]];
    }
}

ClusterDistribution ClusterDistribution::enumerate(const ClusterSpec& cluster, std::size_t cap) {
    const std::size_t n = cluster.size();
    if (n > cap)
        throw cap_exceeded("cluster enumeration above cap; use the Bennett bound instead");
    std::vector<FusionWeights> w;
    w.reserve(n);
    for (const SensorSpec& s : cluster.sensors()) w.push_back(fusion_weights(s.p_fa, s.p_md));

    const std::size_t patterns = std::size_t{1} << n;
    std::vector<double> stat(patterns), p0(patterns), p1(patterns);
    for (std::size_t mask = 0; mask < patterns; ++mask) {
        double s = 0.0, q0 = 1.0, q1 = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const SensorSpec& spec = cluster.sensors()[i];
            if (mask >> i & 1) {
                s += w[i].w1;
                q0 *= spec.p_fa;
                q1 *= 1.0 - spec.p_md;
            } else {
                s -= w[i].w0;
                q0 *= 1.0 - spec.p_fa;
                q1 *= spec.p_md;
            }
        }
        stat[mask] = s;
        p0[mask] = q0;
        p1[mask] = q1;
    }
    ClusterDistribution dist;
    dist.finalize(std::move(stat), std::move(p0), std::move(p1));
    return dist;
}

ClusterDistribution ClusterDistribution::binomial(const ClusterSpec& cluster) {
    if (!cluster.homogeneous())
        throw std::invalid_argument("binomial shortcut requires a homogeneous cluster");
    const std::size_t n = cluster.size();
    const SensorSpec& s = cluster.sensors().front();
    const FusionWeights w = fusion_weights(s.p_fa, s.p_md);
    std::vector<double> stat(n + 1), p0(n + 1), p1(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        stat[k] = double(k) * w.w1 - double(n - k) * w.w0;
        p0[k] = detail::binom_pmf(n, k, s.p_fa);
        p1[k] = detail::binom_pmf(n, k, 1.0 - s.p_md);
    }
    ClusterDistribution dist;
    dist.finalize(std::move(stat), std::move(p0), std::move(p1));
    return dist;
}

ClusterDistribution ClusterDistribution::count_domain(const ClusterSpec& cluster) {
    const std::size_t n = cluster.size();
    // Poisson-binomial recursion over the count of ones.
    std::vector<double> p0(n + 1, 0.0), p1(n + 1, 0.0);
    p0[0] = 1.0;
    p1[0] = 1.0;
    std::size_t filled = 0;
    for (const SensorSpec& s : cluster.sensors()) {
        ++filled;
        for (std::size_t k = filled + 1; k-- > 0;) {
            const double hit0 = k > 0 ? p0[k - 1] : 0.0;
            const double hit1 = k > 0 ? p1[k - 1] : 0.0;
            p0[k] = hit0 * s.p_fa + p0[k] * (1.0 - s.p_fa);
            p1[k] = hit1 * (1.0 - s.p_md) + p1[k] * s.p_md;
        }
    }
    std::vector<double> stat(n + 1);
    std::iota(stat.begin(), stat.end(), 0.0);
    ClusterDistribution dist;
    dist.finalize(std::move(stat), std::move(p0), std::move(p1));
    return dist;
}

double ClusterDistribution::tail_h0(double t) const {
    const auto it = std::lower_bound(stat_.begin(), stat_.end(), t);
    return clamp_prob(tail_h0_[std::size_t(it - stat_.begin())]);
}

double ClusterDistribution::tail_h1(double t) const {
    const auto it = std::lower_bound(stat_.begin(), stat_.end(), t);
    return clamp_prob(tail_h1_[std::size_t(it - stat_.begin())]);
}

ErrorPair ClusterDistribution::error_probs(double gamma) const {
    return {tail_h0(gamma), clamp_prob(1.0 - tail_h1(gamma)), Method::exact};
}

ErrorPair cluster_error_probs_exact(const ClusterSpec& cluster, std::size_t cap) {
    if (cluster.homogeneous())
        return ClusterDistribution::binomial(cluster).error_probs(cluster.gamma());
    return ClusterDistribution::enumerate(cluster, cap).error_probs(cluster.gamma());
}

ErrorPair cluster_error_probs_enumerated(const ClusterSpec& cluster, std::size_t cap) {
    return ClusterDistribution::enumerate(cluster, cap).error_probs(cluster.gamma());
}

ErrorPair cluster_error_probs_binomial(const ClusterSpec& cluster) {
    return ClusterDistribution::binomial(cluster).error_probs(cluster.gamma());
}

FcStatDistribution FcStatDistribution::build(const SystemSpec& system,
                                             std::span<const ErrorPair> cluster_errors,
                                             std::span<const std::size_t> cluster_indices,
                                             std::size_t cap) {
    if (cluster_errors.size() != system.cluster_count())
        throw std::invalid_argument("fc distribution: one error pair per cluster required");
    if (cluster_indices.size() > cap)
        throw cap_exceeded("fc enumeration above cap; use the Bennett bound instead");

    struct Atom {
        double stat, p0, p1;
    };
    std::vector<Atom> atoms{{0.0, 1.0, 1.0}};
    for (const std::size_t j : cluster_indices) {
        if (j >= system.cluster_count())
            throw std::invalid_argument("fc distribution: cluster index out of range");
        const ErrorPair& e = cluster_errors[j];
        const FusionWeights w = cluster_fusion_weights(e);
        const double pc = cluster_com_prob(system.clusters()[j]);
        Atom contrib[3];
        std::size_t m = 0;
        if (pc > 0.0) {
            contrib[m++] = {w.w1, pc * e.p_fa, pc * (1.0 - e.p_md)};
            contrib[m++] = {-w.w0, pc * (1.0 - e.p_fa), pc * e.p_md};
        }
        if (pc < 1.0) contrib[m++] = {0.0, 1.0 - pc, 1.0 - pc};
        std::vector<Atom> next;
        next.reserve(atoms.size() * m);
        for (const Atom& a : atoms)
            for (std::size_t i = 0; i < m; ++i)
                next.push_back({a.stat + contrib[i].stat, a.p0 * contrib[i].p0,
                                a.p1 * contrib[i].p1});
        atoms = std::move(next);
    }

    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& a, const Atom& b) { return a.stat < b.stat; });
    FcStatDistribution dist;
    dist.stat_.resize(atoms.size());
    dist.tail_h0_.assign(atoms.size() + 1, 0.0);
    dist.tail_h1_.assign(atoms.size() + 1, 0.0);
    for (std::size_t i = 0; i < atoms.size(); ++i) dist.stat_[i] = atoms[i].stat;
    for (std::size_t i = atoms.size(); i-- > 0;) {
        dist.tail_h0_[i] = dist.tail_h0_[i + 1] + atoms[i].p0;
        dist.tail_h1_[i] = dist.tail_h1_[i + 1] + atoms[i].p1;
    }
    return dist;
}

double FcStatDistribution::tail_h0(double t) const {
    const auto it = std::lower_bound(stat_.begin(), stat_.end(), t);
    return clamp_prob(tail_h0_[std::size_t(it - stat_.begin())]);
}

double FcStatDistribution::tail_h1(double t) const {
    const auto it = std::lower_bound(stat_.begin(), stat_.end(), t);
    return clamp_prob(tail_h1_[std::size_t(it - stat_.begin())]);
}

ErrorPair fc_error_probs_enumerated(const SystemSpec& system,
                                    std::span<const ErrorPair> cluster_errors, std::size_t cap) {
    std::vector<std::size_t> all(system.cluster_count());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const FcStatDistribution dist = FcStatDistribution::build(system, cluster_errors, all, cap);
    const double gamma = system.fc_gamma();
    return {dist.tail_h0(gamma), clamp_prob(1.0 - dist.tail_h1(gamma)), Method::exact};
}

ErrorPair fc_error_probs_exchangeable(const SystemSpec& system, const ErrorPair& shared_errors) {
    const std::size_t count = system.cluster_count();
    const double pc = cluster_com_prob(system.clusters().front());
    const FusionWeights w = cluster_fusion_weights(shared_errors);
    const double gamma = system.fc_gamma();

    // Condition on k communicating clusters, then on the number of ones
    // among their verdicts; the statistic is m*w1 - (k-m)*w0.
    double p_fa = 0.0;
    double p_d = 0.0;
    for (std::size_t k = 0; k <= count; ++k) {
        const double pk = detail::binom_pmf(count, k, pc);
        if (pk == 0.0) continue;
        double t0 = 0.0, t1 = 0.0;
        for (std::size_t m = 0; m <= k; ++m) {
            const double stat = double(m) * w.w1 - double(k - m) * w.w0;
            if (stat < gamma) continue;
            t0 += detail::binom_pmf(k, m, shared_errors.p_fa);
            t1 += detail::binom_pmf(k, m, 1.0 - shared_errors.p_md);
        }
        p_fa += pk * t0;
        p_d += pk * t1;
    }
    return {clamp_prob(p_fa), clamp_prob(1.0 - p_d), Method::exact};
}

bool fc_exchangeable(const SystemSpec& system, std::span<const ErrorPair> cluster_errors) {
    if (cluster_errors.size() != system.cluster_count()) return false;
    const ErrorPair& first = cluster_errors[0];
    const double pc0 = cluster_com_prob(system.clusters().front());
    for (std::size_t j = 0; j < system.cluster_count(); ++j) {
        if (cluster_errors[j].p_fa != first.p_fa || cluster_errors[j].p_md != first.p_md)
            return false;
        if (cluster_com_prob(system.clusters()[j]) != pc0) return false;
    }
    return true;
}

ErrorPair fc_error_probs_exact(const SystemSpec& system, std::span<const ErrorPair> cluster_errors,
                               std::size_t cap) {
    if (fc_exchangeable(system, cluster_errors))
        return fc_error_probs_exchangeable(system, cluster_errors[0]);
    return fc_error_probs_enumerated(system, cluster_errors, cap);
}

}  // namespace cloudcluster
