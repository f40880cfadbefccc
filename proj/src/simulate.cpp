#include "cloudcluster/simulate.hpp"

#include <cmath>
#include <stdexcept>

#include "cloudcluster/detection.hpp"

namespace cloudcluster {

namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

std::uint64_t finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t SplitMix64::next() {
    state_ += kGamma;
    return finalize(state_);
}

double SplitMix64::next_double() {
    return double(next() >> 11) * 0x1.0p-53;
}

std::uint64_t SplitMix64::mix(std::uint64_t seed, std::uint64_t index) {
    return finalize(seed + (index + 1) * kGamma);
}

namespace {

struct FrozenSystem {
    std::vector<std::vector<FusionWeights>> sensor_weights;  // per cluster, per sensor
    std::vector<double> gammas;
    std::vector<FusionWeights> verdict_weights;
    double fc_gamma;
};

FrozenSystem freeze(const SystemSpec& system) {
    FrozenSystem f;
    f.fc_gamma = system.fc_gamma();
    for (const ClusterSpec& c : system.clusters()) {
        std::vector<FusionWeights> w;
        w.reserve(c.size());
        for (const SensorSpec& s : c.sensors()) w.push_back(fusion_weights(s.p_fa, s.p_md));
        f.sensor_weights.push_back(std::move(w));
        f.gammas.push_back(c.gamma());
        f.verdict_weights.push_back(cluster_fusion_weights(cluster_error_probs_exact(c)));
    }
    return f;
}

}  // namespace

SimSummary run_trials(const SystemSpec& system, std::uint64_t trials, std::uint64_t seed,
                      const TrialSink& sink) {
    if (trials < 1) throw std::invalid_argument("run_trials: at least one trial required");
    const FrozenSystem frozen = freeze(system);
    const std::size_t count = system.cluster_count();

    std::uint64_t n0 = 0, n1 = 0, false_alarms = 0, misses = 0;
    TrialRecord record;
    for (std::uint64_t t = 0; t < trials; ++t) {
        SplitMix64 rng(SplitMix64::mix(seed, t));
        const int truth = rng.next_bernoulli(system.p1()) ? 1 : 0;

        double fc_stat = 0.0;
        if (sink) {
            record.truth = truth;
            record.sensor_bits.assign(count, {});
            record.tau.assign(count, 0);
            record.verdicts.assign(count, 0);
        }
        for (std::size_t j = 0; j < count; ++j) {
            const ClusterSpec& cluster = system.clusters()[j];
            double stat = 0.0;
            int tau = 0;
            if (sink) record.sensor_bits[j].resize(cluster.size());
            for (std::size_t i = 0; i < cluster.size(); ++i) {
                const SensorSpec& s = cluster.sensors()[i];
                const int bit = rng.next_bernoulli(truth ? 1.0 - s.p_md : s.p_fa) ? 1 : 0;
                stat += bit ? frozen.sensor_weights[j][i].w1 : -frozen.sensor_weights[j][i].w0;
                if (sink) record.sensor_bits[j][i] = bit;
            }
            for (const SensorSpec& s : cluster.sensors())
                if (rng.next_bernoulli(s.p_com)) tau = 1;
            const int verdict = stat >= frozen.gammas[j] ? 1 : 0;
            if (tau)
                fc_stat += verdict ? frozen.verdict_weights[j].w1 : -frozen.verdict_weights[j].w0;
            if (sink) {
                record.tau[j] = tau;
                record.verdicts[j] = verdict;
            }
        }
        const int decision = fc_stat >= frozen.fc_gamma ? 1 : 0;
        if (truth) {
            ++n1;
            if (!decision) ++misses;
        } else {
            ++n0;
            if (decision) ++false_alarms;
        }
        if (sink) {
            record.fc_decision = decision;
            sink(record);
        }
    }

    SimSummary summary{};
    summary.trials = trials;
    summary.seed = seed;
    summary.empirical_p_fa = n0 ? double(false_alarms) / double(n0) : 0.0;
    summary.empirical_p_md = n1 ? double(misses) / double(n1) : 0.0;
    summary.empirical_loss = system.p0() * summary.empirical_p_fa * system.loss_fa() +
                             system.p1() * summary.empirical_p_md * system.loss_md();
    return summary;
}

bool replay(const TrialRecord& record, const SystemSpec& system) {
    const std::size_t count = system.cluster_count();
    if (record.sensor_bits.size() != count || record.tau.size() != count ||
        record.verdicts.size() != count)
        throw std::invalid_argument("replay: record shape does not match the system");
    for (std::size_t j = 0; j < count; ++j)
        if (record.sensor_bits[j].size() != system.clusters()[j].size())
            throw std::invalid_argument("replay: record shape does not match the system");

    std::vector<int> verdicts(count);
    std::vector<FusionWeights> weights(count);
    for (std::size_t j = 0; j < count; ++j) {
        verdicts[j] = cluster_decide(record.sensor_bits[j], system.clusters()[j]);
        weights[j] = cluster_fusion_weights(cluster_error_probs_exact(system.clusters()[j]));
        if (verdicts[j] != record.verdicts[j]) return false;
    }
    const double stat = fc_statistic(record.tau, verdicts, weights);
    const int decision = stat >= system.fc_gamma() ? 1 : 0;
    return decision == record.fc_decision;
}

}  // namespace cloudcluster
