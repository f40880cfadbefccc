#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace cloudcluster {

/// Thrown when an exact computation is requested above the configured
/// enumeration cap; callers should fall back to the concentration bounds.
class cap_exceeded : public std::runtime_error {
public:
    explicit cap_exceeded(const std::string& what) : std::runtime_error(what) {}
};

/// How an error-probability pair was obtained.
enum class Method { exact, bennett, monte_carlo };

const char* method_name(Method m);

/// Default switch points between exact computation and the Bennett bounds:
/// exact per-cluster enumeration up to 20 sensors, exact fusion-center
/// enumeration up to 10 clusters.
struct Caps {
    std::size_t cluster = 20;
    std::size_t fc = 10;
};

/// A binary sensor: false-alarm / missed-detection probabilities and the
/// probability of seeing a communication opportunity to the cloud.
struct SensorSpec {
    double p_fa;
    double p_md;
    double p_com;

    SensorSpec(double p_fa, double p_md, double p_com);
};

/// Log-likelihood-ratio weights of a binary report: w1 is the evidence
/// carried by a 1, w0 by a 0, both in nats.
struct FusionWeights {
    double w1;
    double w0;
};

/// A cluster: its member sensors plus the local decision threshold (nats).
/// The threshold must lie in [l_min, l_max], the reachable range of the
/// weighted sum statistic.
class ClusterSpec {
public:
    ClusterSpec(std::vector<SensorSpec> sensors, double gamma);

    const std::vector<SensorSpec>& sensors() const { return sensors_; }
    double gamma() const { return gamma_; }
    std::size_t size() const { return sensors_.size(); }

    double l_min() const { return l_min_; }
    double l_max() const { return l_max_; }

    /// All sensors share bitwise-identical (p_fa, p_md); enables the
    /// binomial shortcut. No epsilon tolerance on purpose.
    bool homogeneous() const { return homogeneous_; }

    /// Copy with a different threshold.
    ClusterSpec with_gamma(double gamma) const;

private:
    std::vector<SensorSpec> sensors_;
    double gamma_;
    double l_min_;
    double l_max_;
    bool homogeneous_;
};

/// The whole system: clusters, the prior on the event hypothesis and the
/// two loss weights of Bayes risk.
class SystemSpec {
public:
    SystemSpec(std::vector<ClusterSpec> clusters, double p1, double loss_fa, double loss_md);

    const std::vector<ClusterSpec>& clusters() const { return clusters_; }
    std::size_t cluster_count() const { return clusters_.size(); }
    double p1() const { return p1_; }
    double p0() const { return 1.0 - p1_; }
    double loss_fa() const { return loss_fa_; }
    double loss_md() const { return loss_md_; }

    /// Fusion-center threshold ln(L10*p0 / (L01*p1)).
    double fc_gamma() const { return fc_gamma_; }

    SystemSpec with_gamma(std::size_t cluster_index, double gamma) const;
    SystemSpec with_gammas(const std::vector<double>& gammas) const;

private:
    std::vector<ClusterSpec> clusters_;
    double p1_;
    double loss_fa_;
    double loss_md_;
    double fc_gamma_;
};

/// A (P_FA, P_MD) pair tagged with how it was computed.
struct ErrorPair {
    double p_fa;
    double p_md;
    Method method;
};

}  // namespace cloudcluster
