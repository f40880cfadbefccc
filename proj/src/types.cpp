#include "cloudcluster/types.hpp"

#include <cmath>

#include "cloudcluster/detection.hpp"

namespace cloudcluster {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

bool probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

}  // namespace

const char* method_name(Method m) {
    switch (m) {
        case Method::exact: return "exact";
        case Method::bennett: return "bennett";
        case Method::monte_carlo: return "monte_carlo";
    }
    return "unknown";
}

SensorSpec::SensorSpec(double p_fa, double p_md, double p_com)
    : p_fa(p_fa), p_md(p_md), p_com(p_com) {
    require(std::isfinite(p_fa) && p_fa > 0.0 && p_fa < 0.5, "sensor p_fa must lie in (0, 0.5)");
    require(std::isfinite(p_md) && p_md > 0.0 && p_md < 0.5, "sensor p_md must lie in (0, 0.5)");
    require(probability(p_com), "sensor p_com must lie in [0, 1]");
}

ClusterSpec::ClusterSpec(std::vector<SensorSpec> sensors, double gamma)
    : sensors_(std::move(sensors)), gamma_(gamma) {
    require(!sensors_.empty(), "cluster must contain at least one sensor");
    double lo = 0.0;
    double hi = 0.0;
    homogeneous_ = true;
    for (const SensorSpec& s : sensors_) {
        const FusionWeights w = fusion_weights(s.p_fa, s.p_md);
        lo -= w.w0;
        hi += w.w1;
        homogeneous_ = homogeneous_ && s.p_fa == sensors_.front().p_fa &&
                       s.p_md == sensors_.front().p_md;
    }
    l_min_ = lo;
    l_max_ = hi;
    require(std::isfinite(gamma_) && gamma_ >= l_min_ && gamma_ <= l_max_,
            "cluster threshold must lie in [l_min, l_max]");
}

ClusterSpec ClusterSpec::with_gamma(double gamma) const {
    ClusterSpec copy = *this;
    require(std::isfinite(gamma) && gamma >= copy.l_min_ && gamma <= copy.l_max_,
            "cluster threshold must lie in [l_min, l_max]");
    copy.gamma_ = gamma;
    return copy;
}

SystemSpec::SystemSpec(std::vector<ClusterSpec> clusters, double p1, double loss_fa,
                       double loss_md)
    : clusters_(std::move(clusters)), p1_(p1), loss_fa_(loss_fa), loss_md_(loss_md) {
    require(!clusters_.empty(), "system must contain at least one cluster");
    require(std::isfinite(p1) && p1 > 0.0 && p1 < 1.0, "prior p1 must lie in (0, 1)");
    require(std::isfinite(loss_fa) && loss_fa > 0.0, "loss_fa must be positive");
    require(std::isfinite(loss_md) && loss_md > 0.0, "loss_md must be positive");
    fc_gamma_ = std::log(loss_fa_ * (1.0 - p1_) / (loss_md_ * p1_));
    require(std::isfinite(fc_gamma_), "fusion-center threshold must be finite");
}

SystemSpec SystemSpec::with_gamma(std::size_t cluster_index, double gamma) const {
    if (cluster_index >= clusters_.size())
        throw std::invalid_argument("with_gamma: cluster index out of range");
    SystemSpec copy = *this;
    copy.clusters_[cluster_index] = copy.clusters_[cluster_index].with_gamma(gamma);
    return copy;
}

SystemSpec SystemSpec::with_gammas(const std::vector<double>& gammas) const {
    if (gammas.size() != clusters_.size())
        throw std::invalid_argument("with_gammas: one threshold per cluster required");
    SystemSpec copy = *this;
    for (std::size_t j = 0; j < gammas.size(); ++j)
        copy.clusters_[j] = copy.clusters_[j].with_gamma(gammas[j]);
    return copy;
}

}  // namespace cloudcluster
