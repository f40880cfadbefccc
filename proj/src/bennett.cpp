#include "cloudcluster/bennett.hpp"

#include <cmath>
#include <stdexcept>

#include "cloudcluster/detection.hpp"
#include "cloudcluster/lambert.hpp"

namespace cloudcluster {

namespace {

BoundResult trivial_bound() { return {1.0, false, 0.0, 0.0, 0.0, 1.0}; }

// One side of the cluster/FC tail bounds: trivial unless the window holds and the
// summands are nondegenerate.
BoundResult bound_side(std::uint64_t n, double alpha, double m, double sigma2) {
    if (!(m > 0.0) || !(sigma2 > 0.0)) return trivial_bound();
    return bennett_u({n, alpha, m, sigma2});
}

}  // namespace

BoundResult bennett_u(const BennettInput& input) {
    if (input.n < 1) throw std::invalid_argument("bennett_u: n must be at least 1");
    if (!(std::isfinite(input.m) && input.m > 0.0))
        throw std::invalid_argument("bennett_u: range bound M must be positive");
    if (!(std::isfinite(input.sigma2) && input.sigma2 > 0.0))
        throw std::invalid_argument("bennett_u: variance must be positive");

    const double n = double(input.n);
    const double alpha = input.alpha;
    const double m = input.m;
    const double sigma2 = input.sigma2;
    // alpha = 0 leaves B undefined and the deviation probability can be
    // close to 1, so only the trivial bound is safe.
    if (!(alpha > 0.0) || alpha >= n * m) return trivial_bound();

    const double a = m * m / sigma2 + n * m / alpha - 1.0;
    const double b = n * m / alpha - 1.0;
    // B <= A, hence W(B e^A) <= A and Lambda >= 0 up to roundoff.
    const double lambda = std::max(0.0, a - lambert_w0_exp(std::log(b) + a));

    double log_term;
    if (lambda < 700.0) {
        log_term = std::log1p(sigma2 / (m * m) * (std::expm1(lambda) - lambda));
    } else {
        // e^Lambda dwarfs everything else in the logarithm
        log_term = std::log(sigma2 / (m * m)) + lambda;
    }
    const double exponent = -lambda * alpha / m + n * log_term;
    const double raw = std::exp(exponent);
    const double value = std::isfinite(raw) ? std::min(raw, 1.0) : 1.0;
    return {value, true, lambda, a, b, raw};
}

ClusterBoundMoments cluster_bound_moments(const ClusterSpec& cluster) {
    ClusterBoundMoments mom{};
    mom.n = cluster.size();
    double var0 = 0.0, var1 = 0.0;
    for (const SensorSpec& s : cluster.sensors()) {
        const FusionWeights w = fusion_weights(s.p_fa, s.p_md);
        const double p0 = s.p_fa;        // P(y = 1 | H0)
        const double p1 = 1.0 - s.p_md;  // P(y = 1 | H1)
        const double mu0 = w.w1 * p0 - w.w0 * (1.0 - p0);
        const double mu1 = w.w1 * p1 - w.w0 * (1.0 - p1);
        mom.mean_h0 += mu0;
        mom.mean_h1 += mu1;
        var0 += (w.w1 - mu0) * (w.w1 - mu0) * p0 + (w.w0 + mu0) * (w.w0 + mu0) * (1.0 - p0);
        var1 += (w.w1 - mu1) * (w.w1 - mu1) * p1 + (w.w0 + mu1) * (w.w0 + mu1) * (1.0 - p1);
        mom.m_h0 = std::max(mom.m_h0, std::max(std::fabs(w.w1 - mu0), std::fabs(w.w0 + mu0)));
        mom.m_h1 = std::max(mom.m_h1, std::max(std::fabs(w.w1 - mu1), std::fabs(w.w0 + mu1)));
    }
    mom.sigma2_h0 = var0 / double(mom.n);
    mom.sigma2_h1 = var1 / double(mom.n);
    return mom;
}

ErrorPair cluster_error_bounds_at(const ClusterBoundMoments& moments, double gamma) {
    const BoundResult fa =
        bound_side(moments.n, gamma - moments.mean_h0, moments.m_h0, moments.sigma2_h0);
    const BoundResult md =
        bound_side(moments.n, moments.mean_h1 - gamma, moments.m_h1, moments.sigma2_h1);
    return {fa.value, md.value, Method::bennett};
}

ErrorPair cluster_error_bounds(const ClusterSpec& cluster) {
    return cluster_error_bounds_at(cluster_bound_moments(cluster), cluster.gamma());
}

BoundPairDetail cluster_error_bounds_detailed(const ClusterSpec& cluster) {
    const ClusterBoundMoments mom = cluster_bound_moments(cluster);
    return {bound_side(mom.n, cluster.gamma() - mom.mean_h0, mom.m_h0, mom.sigma2_h0),
            bound_side(mom.n, mom.mean_h1 - cluster.gamma(), mom.m_h1, mom.sigma2_h1)};
}

namespace {

struct FcMoments {
    double mean_h0 = 0.0, mean_h1 = 0.0;
    double var_h0 = 0.0, var_h1 = 0.0;
    double m_h0 = 0.0, m_h1 = 0.0;
};

FcMoments fc_bound_moments(const SystemSpec& system, std::span<const ErrorPair> cluster_errors) {
    FcMoments mom;
    for (std::size_t j = 0; j < system.cluster_count(); ++j) {
        const ErrorPair& e = cluster_errors[j];
        const FusionWeights w = cluster_fusion_weights(e);
        const double pc = cluster_com_prob(system.clusters()[j]);
        const double p0 = e.p_fa;        // P(z = 1 | H0)
        const double p1 = 1.0 - e.p_md;  // P(z = 1 | H1)
        const double mu0 = pc * (w.w1 * p0 - w.w0 * (1.0 - p0));
        const double mu1 = pc * (w.w1 * p1 - w.w0 * (1.0 - p1));
        const double e2_0 = pc * (w.w1 * w.w1 * p0 + w.w0 * w.w0 * (1.0 - p0));
        const double e2_1 = pc * (w.w1 * w.w1 * p1 + w.w0 * w.w0 * (1.0 - p1));
        mom.mean_h0 += mu0;
        mom.mean_h1 += mu1;
        mom.var_h0 += e2_0 - mu0 * mu0;
        mom.var_h1 += e2_1 - mu1 * mu1;
        // the range bound covers only atoms that actually occur: the two
        // verdict atoms when the cluster can communicate, the silent atom
        // when it can stay silent
        double m0 = 0.0, m1 = 0.0;
        if (pc > 0.0) {
            m0 = std::max(std::fabs(w.w1 - mu0), std::fabs(w.w0 + mu0));
            m1 = std::max(std::fabs(w.w1 - mu1), std::fabs(w.w0 + mu1));
        }
        if (pc < 1.0) {
            m0 = std::max(m0, std::fabs(mu0));
            m1 = std::max(m1, std::fabs(mu1));
        }
        mom.m_h0 = std::max(mom.m_h0, m0);
        mom.m_h1 = std::max(mom.m_h1, m1);
    }
    const double count = double(system.cluster_count());
    mom.var_h0 /= count;
    mom.var_h1 /= count;
    return mom;
}

}  // namespace

ErrorPair fc_error_bounds(const SystemSpec& system, std::span<const ErrorPair> cluster_errors) {
    const BoundPairDetail detail = fc_error_bounds_detailed(system, cluster_errors);
    return {detail.fa.value, detail.md.value, Method::bennett};
}

BoundPairDetail fc_error_bounds_detailed(const SystemSpec& system,
                                         std::span<const ErrorPair> cluster_errors) {
    if (cluster_errors.size() != system.cluster_count())
        throw std::invalid_argument("fc_error_bounds: one error pair per cluster required");
    const FcMoments mom = fc_bound_moments(system, cluster_errors);
    const std::uint64_t count = system.cluster_count();
    const double gamma = system.fc_gamma();
    return {bound_side(count, gamma - mom.mean_h0, mom.m_h0, mom.var_h0),
            bound_side(count, mom.mean_h1 - gamma, mom.m_h1, mom.var_h1)};
}

}  // namespace cloudcluster
