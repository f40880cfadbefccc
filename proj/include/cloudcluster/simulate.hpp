#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "cloudcluster/types.hpp"

namespace cloudcluster {

/// SplitMix64: tiny, portable, explicitly seeded generator. The output
/// sequence is fully determined by the 64-bit seed, independently of
/// platform or standard library, which is what makes simulation runs
/// reproducible byte for byte.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next();

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double();

    /// Bernoulli(p) as next_double() < p.
    bool next_bernoulli(double p) { return next_double() < p; }

    /// Derive an unrelated stream for (seed, index) pairs; used so each
    /// trial draws from its own substream and execution order is free.
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t index);

private:
    std::uint64_t state_;
};

/// One simulated trial, raw enough to recheck every decision.
struct TrialRecord {
    int truth;                                  // realized hypothesis
    std::vector<std::vector<int>> sensor_bits;  // per cluster, per sensor
    std::vector<int> tau;                       // cluster connectivity
    std::vector<int> verdicts;                  // cluster decisions
    int fc_decision;
};

struct SimSummary {
    std::uint64_t trials;
    double empirical_p_fa;   // false-alarm rate among H0 trials
    double empirical_p_md;   // missed-detection rate among H1 trials
    double empirical_loss;   // configured prior, empirical conditional rates
    std::uint64_t seed;
};

using TrialSink = std::function<void(const TrialRecord&)>;

/// Monte Carlo over the full generative process: hypothesis, sensor bit
/// flips, per-sensor links (a cluster communicates if any link is up),
/// local verdicts and the fusion-center decision. Trial t draws from the
/// substream mix(seed, t), so a fixed seed reproduces results exactly.
/// FC verdict weights come from the exact cluster error pairs.
SimSummary run_trials(const SystemSpec& system, std::uint64_t trials, std::uint64_t seed,
                      const TrialSink& sink = nullptr);

/// Recompute verdicts and the FC decision from the recorded raw bits;
/// true iff they match the record. Throws std::invalid_argument when the
/// record's shape does not fit the system.
bool replay(const TrialRecord& record, const SystemSpec& system);

}  // namespace cloudcluster
