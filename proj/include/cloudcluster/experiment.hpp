#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cloudcluster/types.hpp"

namespace cloudcluster {

/// Config problem with the offending field attached.
class config_error : public std::runtime_error {
public:
    config_error(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

enum class CurveKind {
    exact,                       // optimized shared threshold, exact loss
    majority,                    // majority baseline, exact loss
    bennett_optimized,           // threshold from the approximated loss, exact loss
    bennett_loss_homogeneous,    // approximated loss itself
    bennett_loss_heterogeneous,  // approximated loss, averaged over noise draws
};

const char* curve_name(CurveKind c);

struct NoiseSpec {
    double p_fa = 0.2;
    double p_md = 0.3;
    bool heterogeneous = false;
    double rel_deviation = 0.2;     // sensors drawn from U[b(1-d), b(1+d)]
    std::size_t realizations = 100;
};

enum class SweepAxis { cluster_count, p_com };

struct ExperimentConfig {
    std::size_t total_sensors = 60;
    SweepAxis axis = SweepAxis::cluster_count;
    std::vector<std::size_t> cluster_counts;  // >= 1 values; sweep when axis matches
    std::vector<double> p_coms;
    double prior_p1 = 0.4;
    double loss_fa = 150.0;
    double loss_md = 100.0;
    NoiseSpec noise;
    std::size_t points_per_sensor = 75;
    std::vector<CurveKind> curves;
    std::uint64_t seed = 0;
    Caps caps;
};

/// Parse and validate a JSON config. Unknown fields are rejected; every
/// complaint names its field. See README for the schema.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

/// Default cluster-count sweep: divisors of the sensor total, smallest
/// architecture four clusters.
std::vector<std::size_t> default_cluster_grid(std::size_t total_sensors);

struct CurvePoint {
    double x;
    CurveKind curve;
    double loss;
    double p_fa;
    double p_md;
    Method method;
    bool skipped = false;                // infeasible sweep point (warning row)
    std::optional<double> mc_loss;       // Monte Carlo cross-check, if requested
};

/// Run every requested curve at every sweep point. `mc_trials` > 0 adds a
/// Monte Carlo loss column for the rows that describe a concrete system.
std::vector<CurvePoint> run_experiment(const ExperimentConfig& config, std::uint64_t mc_trials = 0);

/// CSV with header x,curve,loss,p_fa,p_md,method (plus mc_loss when
/// present), 12 significant digits, rows ordered by curve name then x.
void emit_csv(std::vector<CurvePoint> points, std::ostream& out);
void emit_csv(std::vector<CurvePoint> points, const std::string& path);

}  // namespace cloudcluster
