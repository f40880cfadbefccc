#include "cloudcluster/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "cloudcluster/bennett.hpp"
#include "cloudcluster/detection.hpp"
#include "cloudcluster/optimize.hpp"
#include "cloudcluster/simulate.hpp"

namespace cloudcluster {

using nlohmann::json;

const char* curve_name(CurveKind c) {
    switch (c) {
        case CurveKind::exact: return "exact";
        case CurveKind::majority: return "majority";
        case CurveKind::bennett_optimized: return "bennett_optimized";
        case CurveKind::bennett_loss_homogeneous: return "bennett_loss_homogeneous";
        case CurveKind::bennett_loss_heterogeneous: return "bennett_loss_heterogeneous";
    }
    return "unknown";
}

namespace {

constexpr std::uint64_t kHetStreamTag = 0x6865746572ULL;
constexpr std::uint64_t kMcStreamTag = 0x6d63636865636bULL;

CurveKind curve_from_name(const std::string& name) {
    for (const CurveKind c :
         {CurveKind::exact, CurveKind::majority, CurveKind::bennett_optimized,
          CurveKind::bennett_loss_homogeneous, CurveKind::bennett_loss_heterogeneous})
        if (name == curve_name(c)) return c;
    throw config_error("curves", "unknown curve '" + name + "'");
}

double as_probability(const json& j, const char* field, bool open_interval = false) {
    if (!j.is_number()) throw config_error(field, "expected a number");
    const double v = j.get<double>();
    if (open_interval ? (v <= 0.0 || v >= 1.0) : (v < 0.0 || v > 1.0))
        throw config_error(field, "probability out of range");
    return v;
}

std::size_t as_count(const json& j, const char* field, std::size_t min_value = 1) {
    if (!j.is_number_unsigned())
        throw config_error(field, "expected a nonnegative integer");
    const std::size_t v = j.get<std::size_t>();
    if (v < min_value) throw config_error(field, "value too small");
    return v;
}

}  // namespace

std::vector<std::size_t> default_cluster_grid(std::size_t total_sensors) {
    std::vector<std::size_t> divisors;
    for (std::size_t d = 1; d <= total_sensors; ++d)
        if (total_sensors % d == 0) divisors.push_back(d);
    // the smallest architecture studied is four clusters; fall back to all
    // divisors for tiny systems
    std::vector<std::size_t> grid;
    for (const std::size_t d : divisors)
        if (d >= 4) grid.push_back(d);
    return grid.empty() ? divisors : grid;
}

ExperimentConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw config_error("<root>", std::string("invalid JSON: ") + e.what());
    }
    if (!root.is_object()) throw config_error("<root>", "config must be a JSON object");

    static const std::vector<std::string> known = {
        "total_sensors", "cluster_count", "p_com",  "prior_p1",          "loss_fa",
        "loss_md",       "sensor_noise",  "curves", "points_per_sensor", "seed",
        "caps"};
    for (const auto& [key, value] : root.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw config_error(key, "unknown field");

    ExperimentConfig cfg;
    if (root.contains("total_sensors"))
        cfg.total_sensors = as_count(root["total_sensors"], "total_sensors");

    bool cluster_swept = false;
    if (root.contains("cluster_count")) {
        const json& cc = root["cluster_count"];
        if (cc.is_string() && cc.get<std::string>() == "divisors") {
            cfg.cluster_counts = default_cluster_grid(cfg.total_sensors);
            cluster_swept = true;
        } else if (cc.is_array()) {
            if (cc.empty()) throw config_error("cluster_count", "sweep list must be nonempty");
            for (const json& v : cc) cfg.cluster_counts.push_back(as_count(v, "cluster_count"));
            cluster_swept = true;
        } else {
            const std::size_t n = as_count(cc, "cluster_count");
            if (cfg.total_sensors % n != 0)
                throw config_error("cluster_count",
                                   "must divide total_sensors for equal-size clusters");
            cfg.cluster_counts = {n};
        }
    } else {
        cfg.cluster_counts = default_cluster_grid(cfg.total_sensors);
        cluster_swept = true;
    }

    bool pcom_swept = false;
    if (root.contains("p_com")) {
        const json& pc = root["p_com"];
        if (pc.is_array()) {
            if (pc.empty()) throw config_error("p_com", "sweep list must be nonempty");
            for (const json& v : pc) cfg.p_coms.push_back(as_probability(v, "p_com"));
            pcom_swept = true;
        } else {
            cfg.p_coms = {as_probability(pc, "p_com")};
        }
    } else {
        cfg.p_coms = {0.1};
    }

    if (cluster_swept && pcom_swept)
        throw config_error("p_com", "only one of cluster_count and p_com may be swept");
    cfg.axis = pcom_swept ? SweepAxis::p_com : SweepAxis::cluster_count;
    if (cfg.axis == SweepAxis::p_com && cfg.cluster_counts.size() != 1)
        throw config_error("cluster_count", "must be a single value when p_com is swept");
    if (cfg.axis == SweepAxis::cluster_count && cfg.p_coms.size() != 1)
        throw config_error("p_com", "must be a single value when cluster_count is swept");
    if (cfg.axis == SweepAxis::cluster_count &&
        std::none_of(cfg.cluster_counts.begin(), cfg.cluster_counts.end(),
                     [&](std::size_t n) { return cfg.total_sensors % n == 0; }))
        throw config_error("cluster_count", "no sweep value divides total_sensors");

    if (root.contains("prior_p1")) cfg.prior_p1 = as_probability(root["prior_p1"], "prior_p1", true);
    if (root.contains("loss_fa")) {
        if (!root["loss_fa"].is_number() || root["loss_fa"].get<double>() <= 0.0)
            throw config_error("loss_fa", "must be a positive number");
        cfg.loss_fa = root["loss_fa"].get<double>();
    }
    if (root.contains("loss_md")) {
        if (!root["loss_md"].is_number() || root["loss_md"].get<double>() <= 0.0)
            throw config_error("loss_md", "must be a positive number");
        cfg.loss_md = root["loss_md"].get<double>();
    }

    if (root.contains("sensor_noise")) {
        const json& noise = root["sensor_noise"];
        if (!noise.is_object()) throw config_error("sensor_noise", "expected an object");
        for (const auto& [key, value] : noise.items())
            if (key != "kind" && key != "p_fa" && key != "p_md" && key != "rel_deviation" &&
                key != "realizations")
                throw config_error("sensor_noise." + key, "unknown field");
        const std::string kind = noise.value("kind", std::string("homogeneous"));
        if (kind != "homogeneous" && kind != "heterogeneous")
            throw config_error("sensor_noise.kind", "must be homogeneous or heterogeneous");
        cfg.noise.heterogeneous = kind == "heterogeneous";
        if (noise.contains("p_fa")) cfg.noise.p_fa = as_probability(noise["p_fa"], "sensor_noise.p_fa");
        if (noise.contains("p_md")) cfg.noise.p_md = as_probability(noise["p_md"], "sensor_noise.p_md");
        if (noise.contains("rel_deviation")) {
            if (!noise["rel_deviation"].is_number())
                throw config_error("sensor_noise.rel_deviation", "expected a number");
            cfg.noise.rel_deviation = noise["rel_deviation"].get<double>();
            if (cfg.noise.rel_deviation < 0.0 || cfg.noise.rel_deviation >= 1.0)
                throw config_error("sensor_noise.rel_deviation", "must lie in [0, 1)");
        }
        if (noise.contains("realizations"))
            cfg.noise.realizations = as_count(noise["realizations"], "sensor_noise.realizations");
    }
    if (!(cfg.noise.p_fa > 0.0 && cfg.noise.p_fa < 0.5))
        throw config_error("sensor_noise.p_fa", "must lie in (0, 0.5)");
    if (!(cfg.noise.p_md > 0.0 && cfg.noise.p_md < 0.5))
        throw config_error("sensor_noise.p_md", "must lie in (0, 0.5)");
    if (cfg.noise.heterogeneous) {
        const double d = cfg.noise.rel_deviation;
        if (cfg.noise.p_fa * (1.0 + d) >= 0.5 || cfg.noise.p_md * (1.0 + d) >= 0.5)
            throw config_error("sensor_noise.rel_deviation",
                               "sampled probabilities would leave (0, 0.5)");
    }

    if (root.contains("points_per_sensor"))
        cfg.points_per_sensor = as_count(root["points_per_sensor"], "points_per_sensor", 2);
    if (root.contains("seed")) {
        if (!root["seed"].is_number_unsigned()) throw config_error("seed", "expected a nonnegative integer");
        cfg.seed = root["seed"].get<std::uint64_t>();
    }
    if (root.contains("caps")) {
        const json& caps = root["caps"];
        if (!caps.is_object()) throw config_error("caps", "expected an object");
        for (const auto& [key, value] : caps.items())
            if (key != "cluster" && key != "fc") throw config_error("caps." + key, "unknown field");
        if (caps.contains("cluster")) cfg.caps.cluster = as_count(caps["cluster"], "caps.cluster", 0);
        if (caps.contains("fc")) cfg.caps.fc = as_count(caps["fc"], "caps.fc", 0);
    }

    if (root.contains("curves")) {
        const json& curves = root["curves"];
        if (!curves.is_array() || curves.empty())
            throw config_error("curves", "expected a nonempty list of curve names");
        for (const json& c : curves) {
            if (!c.is_string()) throw config_error("curves", "curve names must be strings");
            cfg.curves.push_back(curve_from_name(c.get<std::string>()));
        }
    } else {
        cfg.curves = {CurveKind::exact, CurveKind::majority, CurveKind::bennett_optimized,
                      CurveKind::bennett_loss_homogeneous};
        if (cfg.noise.heterogeneous) cfg.curves.push_back(CurveKind::bennett_loss_heterogeneous);
    }
    if (!cfg.noise.heterogeneous &&
        std::find(cfg.curves.begin(), cfg.curves.end(), CurveKind::bennett_loss_heterogeneous) !=
            cfg.curves.end())
        throw config_error("curves",
                           "bennett_loss_heterogeneous requires heterogeneous sensor_noise");
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("<file>", "cannot open config: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

namespace {

struct SweepPoint {
    double x;
    std::size_t cluster_count;
    double p_com;
    bool feasible;
    std::size_t index;
};

std::vector<SweepPoint> sweep_points(const ExperimentConfig& cfg) {
    std::vector<SweepPoint> points;
    if (cfg.axis == SweepAxis::cluster_count) {
        for (std::size_t i = 0; i < cfg.cluster_counts.size(); ++i) {
            const std::size_t n = cfg.cluster_counts[i];
            points.push_back({double(n), n, cfg.p_coms.front(),
                              cfg.total_sensors % n == 0, i});
        }
    } else {
        for (std::size_t i = 0; i < cfg.p_coms.size(); ++i)
            points.push_back({cfg.p_coms[i], cfg.cluster_counts.front(), cfg.p_coms[i],
                              cfg.total_sensors % cfg.cluster_counts.front() == 0, i});
    }
    return points;
}

SystemSpec homogeneous_system(const ExperimentConfig& cfg, std::size_t cluster_count,
                              double p_com) {
    const std::size_t per_cluster = cfg.total_sensors / cluster_count;
    const std::vector<SensorSpec> sensors(per_cluster,
                                          SensorSpec(cfg.noise.p_fa, cfg.noise.p_md, p_com));
    const ClusterSpec cluster(sensors, 0.0);
    return SystemSpec(std::vector<ClusterSpec>(cluster_count, cluster), cfg.prior_p1,
                      cfg.loss_fa, cfg.loss_md);
}

Method aggregate_method(const MethodPlan& plan) {
    for (const Method m : plan.cluster_methods)
        if (m == Method::bennett) return Method::bennett;
    return plan.fc_method;
}

ErrorPair plan_fc_pair(const SystemSpec& system, const MethodPlan& plan, const Caps& caps) {
    std::vector<ErrorPair> pairs;
    pairs.reserve(system.cluster_count());
    for (std::size_t j = 0; j < system.cluster_count(); ++j) {
        const ClusterSpec& c = system.clusters()[j];
        pairs.push_back(plan.cluster_methods[j] == Method::exact
                            ? cluster_error_probs_exact(c, caps.cluster)
                            : cluster_error_bounds(c));
    }
    if (plan.fc_method == Method::exact) return fc_error_probs_exact(system, pairs, caps.fc);
    return fc_error_bounds(system, pairs);
}

CurvePoint make_point(const ExperimentConfig& cfg, double x, CurveKind curve,
                      const ErrorPair& fc, Method method) {
    CurvePoint p{};
    p.x = x;
    p.curve = curve;
    p.p_fa = fc.p_fa;
    p.p_md = fc.p_md;
    p.loss = (1.0 - cfg.prior_p1) * fc.p_fa * cfg.loss_fa + cfg.prior_p1 * fc.p_md * cfg.loss_md;
    p.method = method;
    return p;
}

CurvePoint heterogeneous_point(const ExperimentConfig& cfg, const SweepPoint& at) {
    const std::size_t per_cluster = cfg.total_sensors / at.cluster_count;
    double sum_fa = 0.0, sum_md = 0.0;
    Method method = Method::exact;
    for (std::size_t r = 0; r < cfg.noise.realizations; ++r) {
        SplitMix64 rng(SplitMix64::mix(SplitMix64::mix(cfg.seed, kHetStreamTag + at.index), r));
        const double d = cfg.noise.rel_deviation;
        std::vector<ClusterSpec> clusters;
        clusters.reserve(at.cluster_count);
        for (std::size_t j = 0; j < at.cluster_count; ++j) {
            std::vector<SensorSpec> sensors;
            sensors.reserve(per_cluster);
            for (std::size_t i = 0; i < per_cluster; ++i) {
                const double p_fa = cfg.noise.p_fa * (1.0 - d + 2.0 * d * rng.next_double());
                const double p_md = cfg.noise.p_md * (1.0 - d + 2.0 * d * rng.next_double());
                sensors.emplace_back(p_fa, p_md, at.p_com);
            }
            clusters.emplace_back(std::move(sensors), 0.0);
        }
        SystemSpec system(std::move(clusters), cfg.prior_p1, cfg.loss_fa, cfg.loss_md);
        const MethodPlan plan = select_method(system, cfg.caps);
        method = aggregate_method(plan);

        system = system.with_gammas(
            initialize_thresholds(system, cfg.points_per_sensor, cfg.caps));
        std::vector<ThresholdGrid> grids;
        grids.reserve(system.cluster_count());
        for (std::size_t j = 0; j < system.cluster_count(); ++j)
            grids.push_back(build_grid(system.clusters()[j], j, cfg.points_per_sensor));
        const OptimizationReport report =
            gauss_seidel(system, plan, grids, kDefaultGaussSeidelTol, kDefaultMaxSweeps, cfg.caps);

        const ErrorPair fc =
            plan_fc_pair(system.with_gammas(report.thresholds), plan, cfg.caps);
        sum_fa += fc.p_fa;
        sum_md += fc.p_md;
    }
    const double count = double(cfg.noise.realizations);
    return make_point(cfg, at.x, CurveKind::bennett_loss_heterogeneous,
                      {sum_fa / count, sum_md / count, Method::bennett}, method);
}

}  // namespace

std::vector<CurvePoint> run_experiment(const ExperimentConfig& config, std::uint64_t mc_trials) {
    std::vector<CurvePoint> points;
    const std::vector<SweepPoint> sweep = sweep_points(config);

    for (const SweepPoint& at : sweep) {
        if (!at.feasible) {
            for (const CurveKind curve : config.curves) {
                CurvePoint p{};
                p.x = at.x;
                p.curve = curve;
                p.loss = p.p_fa = p.p_md = std::numeric_limits<double>::quiet_NaN();
                p.method = Method::exact;
                p.skipped = true;
                points.push_back(p);
            }
            continue;
        }

        const SystemSpec base = homogeneous_system(config, at.cluster_count, at.p_com);
        const ClusterSpec& proto = base.clusters().front();
        const ThresholdGrid grid = build_grid(proto, 0, config.points_per_sensor);
        const MethodPlan plan_exact{std::vector<Method>(base.cluster_count(), Method::exact),
                                    Method::exact};
        const MethodPlan plan_switch = select_method(base, config.caps);

        // the two optimizations are shared across curves at this point
        std::optional<OptimizationReport> exact_report;
        std::optional<OptimizationReport> switch_report;
        const auto exact_opt = [&]() -> const OptimizationReport& {
            if (!exact_report)
                exact_report = homogeneous_equal_threshold_search(base, plan_exact, grid);
            return *exact_report;
        };
        const auto switch_opt = [&]() -> const OptimizationReport& {
            if (!switch_report)
                switch_report = homogeneous_equal_threshold_search(base, plan_switch, grid);
            return *switch_report;
        };

        for (const CurveKind curve : config.curves) {
            CurvePoint row{};
            std::optional<SystemSpec> mc_system;
            switch (curve) {
                case CurveKind::exact: {
                    const SystemSpec tuned = base.with_gammas(exact_opt().thresholds);
                    const ErrorPair fc = fc_error_probs_exchangeable(
                        tuned, cluster_error_probs_exact(tuned.clusters().front()));
                    row = make_point(config, at.x, curve, fc, Method::exact);
                    if (mc_trials) mc_system = tuned;
                    break;
                }
                case CurveKind::majority: {
                    const ErrorPair pair = majority_error_probs(proto);
                    const ErrorPair fc = fc_error_probs_exchangeable(base, pair);
                    row = make_point(config, at.x, curve, fc, Method::exact);
                    if (mc_trials)
                        mc_system = base.with_gammas(std::vector<double>(
                            base.cluster_count(), majority_gamma(proto)));
                    break;
                }
                case CurveKind::bennett_optimized: {
                    const SystemSpec tuned = base.with_gammas(switch_opt().thresholds);
                    const ErrorPair fc = fc_error_probs_exchangeable(
                        tuned, cluster_error_probs_exact(tuned.clusters().front()));
                    row = make_point(config, at.x, curve, fc, aggregate_method(plan_switch));
                    if (mc_trials) mc_system = tuned;
                    break;
                }
                case CurveKind::bennett_loss_homogeneous: {
                    const SystemSpec tuned = base.with_gammas(switch_opt().thresholds);
                    const ErrorPair fc = plan_fc_pair(tuned, plan_switch, config.caps);
                    row = make_point(config, at.x, curve, fc, aggregate_method(plan_switch));
                    break;
                }
                case CurveKind::bennett_loss_heterogeneous: {
                    row = heterogeneous_point(config, at);
                    break;
                }
            }
            if (mc_system) {
                const std::uint64_t mc_seed = SplitMix64::mix(
                    SplitMix64::mix(config.seed, kMcStreamTag),
                    at.index * 8 + std::size_t(curve));
                row.mc_loss = run_trials(*mc_system, mc_trials, mc_seed).empirical_loss;
            }
            points.push_back(row);
        }
    }
    return points;
}

namespace {

std::string format_value(double v) {
    if (!std::isfinite(v)) return "nan";
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.12g", v);
    return buffer;
}

}  // namespace

void emit_csv(std::vector<CurvePoint> points, std::ostream& out) {
    std::sort(points.begin(), points.end(), [](const CurvePoint& a, const CurvePoint& b) {
        const int c = std::strcmp(curve_name(a.curve), curve_name(b.curve));
        if (c != 0) return c < 0;
        return a.x < b.x;
    });
    const bool with_mc = std::any_of(points.begin(), points.end(),
                                     [](const CurvePoint& p) { return p.mc_loss.has_value(); });
    out << "x,curve,loss,p_fa,p_md,method";
    if (with_mc) out << ",mc_loss";
    out << "\n";
    for (const CurvePoint& p : points) {
        out << format_value(p.x) << ',' << curve_name(p.curve) << ',' << format_value(p.loss)
            << ',' << format_value(p.p_fa) << ',' << format_value(p.p_md) << ','
            << (p.skipped ? "skipped" : method_name(p.method));
        if (with_mc) out << ',' << (p.mc_loss ? format_value(*p.mc_loss) : "nan");
        out << "\n";
    }
}

void emit_csv(std::vector<CurvePoint> points, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    emit_csv(std::move(points), static_cast<std::ostream&>(out));
    out.flush();
    if (!out) throw std::runtime_error("failed while writing: " + path);
}

}  // namespace cloudcluster
