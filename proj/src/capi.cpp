#include "cloudcluster/cloudcluster.h"

#include <algorithm>
#include <exception>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cloudcluster/bennett.hpp"
#include "cloudcluster/detection.hpp"
#include "cloudcluster/experiment.hpp"
#include "cloudcluster/lambert.hpp"
#include "cloudcluster/optimize.hpp"
#include "cloudcluster/simulate.hpp"
#include "cloudcluster/types.hpp"

namespace cc = cloudcluster;

namespace {

thread_local std::string g_last_error = "no error";

cc_status fail(cc_status status, const std::string& message) {
    g_last_error = message;
    return status;
}

// Runs `body` and maps thrown errors onto status codes.
template <typename Fn>
cc_status guarded(Fn&& body) {
    try {
        return body();
    } catch (const cc::cap_exceeded& e) {
        return fail(CC_ERROR_CAP_EXCEEDED, e.what());
    } catch (const cc::config_error& e) {
        return fail(CC_ERROR_CONFIG, e.what());
    } catch (const std::domain_error& e) {
        return fail(CC_ERROR_DOMAIN, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(CC_ERROR_INVALID_ARGUMENT, e.what());
    } catch (const std::ios_base::failure& e) {
        return fail(CC_ERROR_IO, e.what());
    } catch (const std::exception& e) {
        return fail(CC_ERROR_INTERNAL, e.what());
    } catch (...) {
        return fail(CC_ERROR_INTERNAL, "unknown error");
    }
}

struct RawCluster {
    std::vector<cc::SensorSpec> sensors;
    double gamma = 0.0;
};

}  // namespace

// Mutable builder behind the opaque handle; validated specs are materialized
// per operation.
struct cc_system {
    double p1;
    double loss_fa;
    double loss_md;
    std::vector<RawCluster> clusters;

    cc::SystemSpec materialize() const {
        std::vector<cc::ClusterSpec> specs;
        specs.reserve(clusters.size());
        for (const RawCluster& raw : clusters) specs.emplace_back(raw.sensors, raw.gamma);
        return cc::SystemSpec(std::move(specs), p1, loss_fa, loss_md);
    }
};

namespace {

cc_status require_cluster(const cc_system* system, size_t cluster) {
    if (!system) return fail(CC_ERROR_INVALID_ARGUMENT, "system handle is NULL");
    if (cluster >= system->clusters.size())
        return fail(CC_ERROR_INVALID_ARGUMENT, "cluster index out of range");
    return CC_OK;
}

cc::Caps make_caps(size_t cluster_cap, size_t fc_cap) {
    cc::Caps caps;
    if (cluster_cap) caps.cluster = cluster_cap;
    if (fc_cap) caps.fc = fc_cap;
    return caps;
}

std::vector<cc::ErrorPair> cluster_pairs(const cc::SystemSpec& spec, cc_method method,
                                         const cc::Caps& caps) {
    std::vector<cc::ErrorPair> pairs;
    pairs.reserve(spec.cluster_count());
    for (const cc::ClusterSpec& c : spec.clusters())
        pairs.push_back(method == CC_METHOD_EXACT ? cc::cluster_error_probs_exact(c, caps.cluster)
                                                  : cc::cluster_error_bounds(c));
    return pairs;
}

}  // namespace

extern "C" {

const char* cc_status_name(cc_status status) {
    switch (status) {
        case CC_OK: return "ok";
        case CC_ERROR_INVALID_ARGUMENT: return "invalid argument";
        case CC_ERROR_DOMAIN: return "domain error";
        case CC_ERROR_CAP_EXCEEDED: return "enumeration cap exceeded";
        case CC_ERROR_CONFIG: return "config error";
        case CC_ERROR_IO: return "io error";
        case CC_ERROR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* cc_last_error(void) { return g_last_error.c_str(); }

cc_status cc_system_create(double p1, double loss_fa, double loss_md, cc_system** out) {
    if (!out) return fail(CC_ERROR_INVALID_ARGUMENT, "output pointer is NULL");
    return guarded([&] {
        if (!(p1 > 0.0 && p1 < 1.0))
            return fail(CC_ERROR_INVALID_ARGUMENT, "prior p1 must lie in (0, 1)");
        if (!(loss_fa > 0.0) || !(loss_md > 0.0))
            return fail(CC_ERROR_INVALID_ARGUMENT, "losses must be positive");
        *out = new cc_system{p1, loss_fa, loss_md, {}};
        return CC_OK;
    });
}

void cc_system_free(cc_system* system) { delete system; }

cc_status cc_system_add_cluster(cc_system* system, size_t* out_index) {
    if (!system) return fail(CC_ERROR_INVALID_ARGUMENT, "system handle is NULL");
    system->clusters.push_back(RawCluster{});
    if (out_index) *out_index = system->clusters.size() - 1;
    return CC_OK;
}

cc_status cc_system_add_sensor(cc_system* system, size_t cluster, double p_fa, double p_md,
                               double p_com) {
    const cc_status st = require_cluster(system, cluster);
    if (st != CC_OK) return st;
    return guarded([&] {
        system->clusters[cluster].sensors.emplace_back(p_fa, p_md, p_com);
        return CC_OK;
    });
}

cc_status cc_system_set_threshold(cc_system* system, size_t cluster, double gamma) {
    const cc_status st = require_cluster(system, cluster);
    if (st != CC_OK) return st;
    return guarded([&] {
        // validate against the current sensor set
        cc::ClusterSpec(system->clusters[cluster].sensors, gamma);
        system->clusters[cluster].gamma = gamma;
        return CC_OK;
    });
}

cc_status cc_system_get_threshold(const cc_system* system, size_t cluster, double* out) {
    const cc_status st = require_cluster(system, cluster);
    if (st != CC_OK) return st;
    if (!out) return fail(CC_ERROR_INVALID_ARGUMENT, "output pointer is NULL");
    *out = system->clusters[cluster].gamma;
    return CC_OK;
}

cc_status cc_system_cluster_count(const cc_system* system, size_t* out) {
    if (!system || !out) return fail(CC_ERROR_INVALID_ARGUMENT, "NULL argument");
    *out = system->clusters.size();
    return CC_OK;
}

cc_status cc_system_threshold_range(const cc_system* system, size_t cluster, double* l_min,
                                    double* l_max) {
    const cc_status st = require_cluster(system, cluster);
    if (st != CC_OK) return st;
    if (!l_min || !l_max) return fail(CC_ERROR_INVALID_ARGUMENT, "output pointer is NULL");
    return guarded([&] {
        const cc::ClusterSpec spec(system->clusters[cluster].sensors, 0.0);
        *l_min = spec.l_min();
        *l_max = spec.l_max();
        return CC_OK;
    });
}

cc_status cc_system_fc_threshold(const cc_system* system, double* gamma) {
    if (!system || !gamma) return fail(CC_ERROR_INVALID_ARGUMENT, "NULL argument");
    return guarded([&] {
        *gamma = system->materialize().fc_gamma();
        return CC_OK;
    });
}

cc_status cc_fusion_weights(double p_fa, double p_md, double* w1, double* w0) {
    if (!w1 || !w0) return fail(CC_ERROR_INVALID_ARGUMENT, "output pointer is NULL");
    return guarded([&] {
        const cc::FusionWeights w = cc::fusion_weights(p_fa, p_md);
        *w1 = w.w1;
        *w0 = w.w0;
        return CC_OK;
    });
}

cc_status cc_cluster_com_prob(const cc_system* system, size_t cluster, double* p_com) {
    const cc_status st = require_cluster(system, cluster);
    if (st != CC_OK) return st;
    if (!p_com) return fail(CC_ERROR_INVALID_ARGUMENT, "output pointer is NULL");
    return guarded([&] {
        *p_com = cc::cluster_com_prob(
            cc::ClusterSpec(system->clusters[cluster].sensors, system->clusters[cluster].gamma));
        return CC_OK;
    });
}

cc_status cc_cluster_error_probs(const cc_system* system, size_t cluster, cc_method method,
                                 size_t cap, double* p_fa, double* p_md) {
    const cc_status st = require_cluster(system, cluster);
    if (st != CC_OK) return st;
    if (!p_fa || !p_md) return fail(CC_ERROR_INVALID_ARGUMENT, "output pointer is NULL");
    return guarded([&] {
        const cc::ClusterSpec spec(system->clusters[cluster].sensors,
                                   system->clusters[cluster].gamma);
        const cc::ErrorPair pair =
            method == CC_METHOD_EXACT
                ? cc::cluster_error_probs_exact(spec, cap ? cap : cc::Caps{}.cluster)
                : cc::cluster_error_bounds(spec);
        *p_fa = pair.p_fa;
        *p_md = pair.p_md;
        return CC_OK;
    });
}

cc_status cc_fc_error_probs(const cc_system* system, cc_method cluster_method,
                            cc_method fc_method, size_t cluster_cap, size_t fc_cap,
                            double* p_fa, double* p_md) {
    if (!system || !p_fa || !p_md) return fail(CC_ERROR_INVALID_ARGUMENT, "NULL argument");
    return guarded([&] {
        const cc::SystemSpec spec = system->materialize();
        const cc::Caps caps = make_caps(cluster_cap, fc_cap);
        const std::vector<cc::ErrorPair> pairs = cluster_pairs(spec, cluster_method, caps);
        const cc::ErrorPair fc = fc_method == CC_METHOD_EXACT
                                     ? cc::fc_error_probs_exact(spec, pairs, caps.fc)
                                     : cc::fc_error_bounds(spec, pairs);
        *p_fa = fc.p_fa;
        *p_md = fc.p_md;
        return CC_OK;
    });
}

cc_status cc_expected_loss(const cc_system* system, double p_fa, double p_md, double* loss) {
    if (!system || !loss) return fail(CC_ERROR_INVALID_ARGUMENT, "NULL argument");
    return guarded([&] {
        const cc::SystemSpec spec = system->materialize();
        *loss = cc::expected_loss(spec, {p_fa, p_md, cc::Method::exact});
        return CC_OK;
    });
}

cc_status cc_lambert_w0(double x, double* w) {
    if (!w) return fail(CC_ERROR_INVALID_ARGUMENT, "output pointer is NULL");
    return guarded([&] {
        *w = cc::lambert_w0(x);
        return CC_OK;
    });
}

cc_status cc_bennett_u(uint64_t n, double alpha, double m, double sigma2, double* value,
                       int* valid) {
    if (!value) return fail(CC_ERROR_INVALID_ARGUMENT, "output pointer is NULL");
    return guarded([&] {
        const cc::BoundResult result = cc::bennett_u({n, alpha, m, sigma2});
        *value = result.value;
        if (valid) *valid = result.valid ? 1 : 0;
        return CC_OK;
    });
}

cc_status cc_optimize_thresholds(cc_system* system, size_t points_per_sensor,
                                 size_t cluster_cap, size_t fc_cap, cc_opt_result* out) {
    if (!system) return fail(CC_ERROR_INVALID_ARGUMENT, "system handle is NULL");
    return guarded([&] {
        const cc::SystemSpec spec = system->materialize();
        const cc::Caps caps = make_caps(cluster_cap, fc_cap);
        const std::size_t pps =
            points_per_sensor ? points_per_sensor : cc::kDefaultPointsPerSensor;
        const cc::MethodPlan plan = cc::select_method(spec, caps);
        std::vector<cc::ThresholdGrid> grids;
        grids.reserve(spec.cluster_count());
        for (std::size_t j = 0; j < spec.cluster_count(); ++j)
            grids.push_back(cc::build_grid(spec.clusters()[j], j, pps));
        const cc::OptimizationReport report = cc::gauss_seidel(
            spec, plan, grids, cc::kDefaultGaussSeidelTol, cc::kDefaultMaxSweeps, caps);
        for (std::size_t j = 0; j < report.thresholds.size(); ++j)
            system->clusters[j].gamma = report.thresholds[j];
        if (out) {
            out->loss = report.loss;
            out->sweeps = report.sweeps;
            out->converged = report.converged ? 1 : 0;
        }
        return CC_OK;
    });
}

cc_status cc_optimize_equal_threshold(cc_system* system, size_t points_per_sensor,
                                      size_t cluster_cap, size_t fc_cap, cc_opt_result* out) {
    if (!system) return fail(CC_ERROR_INVALID_ARGUMENT, "system handle is NULL");
    return guarded([&] {
        const cc::SystemSpec spec = system->materialize();
        const cc::Caps caps = make_caps(cluster_cap, fc_cap);
        const std::size_t pps =
            points_per_sensor ? points_per_sensor : cc::kDefaultPointsPerSensor;
        const cc::MethodPlan plan = cc::select_method(spec, caps);
        const cc::ThresholdGrid grid = cc::build_grid(spec.clusters().front(), 0, pps);
        const cc::OptimizationReport report =
            cc::homogeneous_equal_threshold_search(spec, plan, grid, caps);
        for (std::size_t j = 0; j < report.thresholds.size(); ++j)
            system->clusters[j].gamma = report.thresholds[j];
        if (out) {
            out->loss = report.loss;
            out->sweeps = report.sweeps;
            out->converged = report.converged ? 1 : 0;
        }
        return CC_OK;
    });
}

cc_status cc_simulate(const cc_system* system, uint64_t trials, uint64_t seed,
                      const char* trace_path, cc_sim_result* out) {
    if (!system || !out) return fail(CC_ERROR_INVALID_ARGUMENT, "NULL argument");
    return guarded([&] {
        const cc::SystemSpec spec = system->materialize();
        std::ofstream trace;
        cc::TrialSink sink;
        if (trace_path) {
            trace.open(trace_path);
            if (!trace)
                return fail(CC_ERROR_IO, std::string("cannot open trace file: ") + trace_path);
            sink = [&trace](const cc::TrialRecord& record) {
                nlohmann::json line;
                line["truth"] = record.truth;
                line["bits"] = record.sensor_bits;
                line["tau"] = record.tau;
                line["verdicts"] = record.verdicts;
                line["fc"] = record.fc_decision;
                trace << line.dump() << '\n';
            };
        }
        const cc::SimSummary summary = cc::run_trials(spec, trials, seed, sink);
        if (trace_path && !trace)
            return fail(CC_ERROR_IO, std::string("failed while writing trace: ") + trace_path);
        out->trials = summary.trials;
        out->p_fa = summary.empirical_p_fa;
        out->p_md = summary.empirical_p_md;
        out->loss = summary.empirical_loss;
        return CC_OK;
    });
}

cc_status cc_run_experiment(const char* config_path, const char* csv_path,
                            const cc_run_options* options) {
    if (!config_path || !csv_path) return fail(CC_ERROR_INVALID_ARGUMENT, "NULL path");
    return guarded([&] {
        cc::ExperimentConfig config = cc::load_config(config_path);
        uint64_t mc_trials = 0;
        if (options) {
            if (options->has_seed) config.seed = options->seed;
            if (options->cluster_cap) config.caps.cluster = options->cluster_cap;
            if (options->fc_cap) config.caps.fc = options->fc_cap;
            if (options->curves) {
                std::vector<cc::CurveKind> curves;
                std::stringstream names(options->curves);
                std::string name;
                while (std::getline(names, name, ',')) {
                    bool found = false;
                    for (const cc::CurveKind c :
                         {cc::CurveKind::exact, cc::CurveKind::majority,
                          cc::CurveKind::bennett_optimized,
                          cc::CurveKind::bennett_loss_homogeneous,
                          cc::CurveKind::bennett_loss_heterogeneous}) {
                        if (name == cc::curve_name(c)) {
                            curves.push_back(c);
                            found = true;
                        }
                    }
                    if (!found)
                        return fail(CC_ERROR_INVALID_ARGUMENT, "unknown curve: " + name);
                }
                if (curves.empty())
                    return fail(CC_ERROR_INVALID_ARGUMENT, "empty curve selection");
                if (!config.noise.heterogeneous &&
                    std::find(curves.begin(), curves.end(),
                              cc::CurveKind::bennett_loss_heterogeneous) != curves.end())
                    return fail(CC_ERROR_INVALID_ARGUMENT,
                                "bennett_loss_heterogeneous requires heterogeneous sensor_noise");
                config.curves = std::move(curves);
            }
            mc_trials = options->mc_trials;
        }
        cc::emit_csv(cc::run_experiment(config, mc_trials), std::string(csv_path));
        return CC_OK;
    });
}

cc_status cc_config_build_system(const char* config_path, size_t sweep_index, cc_system** out) {
    if (!config_path || !out) return fail(CC_ERROR_INVALID_ARGUMENT, "NULL argument");
    return guarded([&] {
        const cc::ExperimentConfig config = cc::load_config(config_path);
        const bool cluster_axis = config.axis == cc::SweepAxis::cluster_count;
        const std::size_t axis_size =
            cluster_axis ? config.cluster_counts.size() : config.p_coms.size();
        if (sweep_index >= axis_size)
            return fail(CC_ERROR_INVALID_ARGUMENT, "sweep index out of range");
        const std::size_t cluster_count =
            cluster_axis ? config.cluster_counts[sweep_index] : config.cluster_counts.front();
        const double p_com = cluster_axis ? config.p_coms.front() : config.p_coms[sweep_index];
        if (config.total_sensors % cluster_count != 0)
            return fail(CC_ERROR_CONFIG, "cluster count does not divide total_sensors");

        auto system = std::make_unique<cc_system>();
        system->p1 = config.prior_p1;
        system->loss_fa = config.loss_fa;
        system->loss_md = config.loss_md;
        const std::size_t per_cluster = config.total_sensors / cluster_count;
        for (std::size_t j = 0; j < cluster_count; ++j) {
            RawCluster raw;
            raw.sensors.assign(per_cluster,
                               cc::SensorSpec(config.noise.p_fa, config.noise.p_md, p_com));
            system->clusters.push_back(std::move(raw));
        }
        system->materialize();  // validate
        *out = system.release();
        return CC_OK;
    });
}

}  // extern "C"
