#pragma once

// Shared builders for the unit and acceptance suites: tiny hand-sized
// networks plus a seeded random-case generator for property sweeps.

#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "cpmhs/model.hpp"

namespace cpmhs::testing {

/// Fresh per-test scratch directory under the system temp root.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("cpmhs_tests_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline Reservoir make_reservoir(std::string id, double elevation_m, double volume_max_m3,
                                double volume_init_m3, double volume_min_m3 = 0.0,
                                double loss_alpha = 0.0) {
    Reservoir r;
    r.id = std::move(id);
    r.name = r.id;
    r.elevation_m = elevation_m;
    r.surface_area_m2 = 1.0e4;
    r.volume_min_m3 = volume_min_m3;
    r.volume_max_m3 = volume_max_m3;
    r.volume_init_m3 = volume_init_m3;
    r.loss_alpha = loss_alpha;
    return r;
}

inline Stage make_stage(std::string id, const Reservoir& upper, const Reservoir& lower,
                        double q_turbine_max_m3s, double p_pump_max_w,
                        double q_turbine_min_m3s = 0.0) {
    Stage s;
    s.id = std::move(id);
    s.upper_id = upper.id;
    s.lower_id = lower.id;
    s.head_m = derive_head(upper.elevation_m, lower.elevation_m);
    s.distance_km = 1.0;
    s.q_turbine_min_m3s = q_turbine_min_m3s;
    s.q_turbine_max_m3s = q_turbine_max_m3s;
    s.p_pump_max_w = p_pump_max_w;
    return s;
}

/// Two reservoirs, one stage, generous grid caps: the smallest network that
/// can both generate and pump.
inline CascadeNetwork two_reservoir_network(double head_m = 50.0,
                                            double upper_init_m3 = 1.0e6,
                                            double lower_init_m3 = 0.0) {
    CascadeNetwork net;
    net.reservoirs.push_back(make_reservoir("upper", 100.0 + head_m, 2.0e6, upper_init_m3));
    net.reservoirs.push_back(make_reservoir("lower", 100.0, 2.0e6, lower_init_m3));
    net.stages.push_back(make_stage("s1", net.reservoirs[0], net.reservoirs[1], 10.0, 5.0e6));
    net.grid_import_max_w = 1.0e7;
    net.grid_export_max_w = 1.0e7;
    return net;
}

inline TimeSeries flat_series(int n_steps, double value, double dt_s = 3600.0,
                              SeriesUnit unit = SeriesUnit::watts) {
    TimeSeries t;
    t.step_seconds = dt_s;
    t.unit = unit;
    t.values.assign(static_cast<size_t>(n_steps), value);
    return t;
}

/// A randomly shaped but always-valid simulation case: a reservoir tree of
/// 2..6 nodes with consistent heads, mixed ratings and grid caps, and load,
/// renewable, and natural-inflow series of up to 168 steps.
struct RandomCase {
    CascadeNetwork network;
    TimeSeries load;
    TimeSeries renewable;
    std::map<std::string, TimeSeries> inflows;
    double dt_s = 3600.0;
};

inline RandomCase make_random_case(std::mt19937_64& rng) {
    auto uni = [&](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    };
    auto pick = [&](int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(rng);
    };

    RandomCase c;
    const int n_res = pick(2, 6);
    std::vector<double> elevation(n_res);
    std::vector<int> parent(n_res, -1);
    for (int i = 0; i < n_res; ++i) {
        if (i == 0) {
            elevation[i] = uni(150.0, 400.0);
        } else {
            parent[i] = pick(0, i - 1);
            elevation[i] = elevation[parent[i]] - uni(2.0, 60.0);
        }
        Reservoir r;
        r.id = "r" + std::to_string(i);
        r.name = r.id;
        r.elevation_m = elevation[i];
        r.surface_area_m2 = uni(1.0e3, 1.0e6);
        const bool lossy = pick(0, 2) == 0;
        r.loss_alpha = lossy ? uni(0.0, 0.05) : 0.0;
        // A positive floor combined with fractional decay can sink a reservoir
        // below the floor with no outflow at all, so the two never mix here.
        r.volume_min_m3 = (!lossy && pick(0, 2) == 0) ? uni(0.0, 1.0e4) : 0.0;
        r.volume_max_m3 = r.volume_min_m3 + uni(1.0e4, 2.0e6);
        r.volume_init_m3 = uni(r.volume_min_m3, r.volume_max_m3);
        if (pick(0, 3) == 0) {
            r.natural_inflow_id = "inflow_" + r.id;
        }
        c.network.reservoirs.push_back(r);
    }
    for (int i = 1; i < n_res; ++i) {
        Stage s;
        s.id = "s" + std::to_string(i);
        s.upper_id = "r" + std::to_string(parent[i]);
        s.lower_id = "r" + std::to_string(i);
        s.head_m = derive_head(elevation[parent[i]], elevation[i]);
        s.distance_km = uni(0.1, 5.0);
        s.eta_turbine = uni(0.7, 0.95);
        s.eta_pump = uni(0.7, 0.95);
        s.q_turbine_min_m3s = pick(0, 1) == 0 ? 0.0 : uni(0.0, 0.3);
        s.q_turbine_max_m3s = s.q_turbine_min_m3s + uni(0.5, 20.0);
        s.p_pump_max_w = pick(0, 4) == 0 ? 0.0 : uni(1.0e5, 5.0e6);
        c.network.stages.push_back(s);
    }
    c.network.grid_import_max_w = pick(0, 3) == 0 ? 0.0 : uni(0.0, 5.0e6);
    c.network.grid_export_max_w = pick(0, 3) == 0 ? 0.0 : uni(0.0, 5.0e6);

    const int n_steps = pick(1, 168);
    c.dt_s = pick(0, 3) == 0 ? 900.0 : 3600.0;
    auto series = [&](double lo, double hi, SeriesUnit unit) {
        TimeSeries t;
        t.step_seconds = c.dt_s;
        t.unit = unit;
        t.values.resize(static_cast<size_t>(n_steps));
        for (double& v : t.values) v = uni(lo, hi);
        return t;
    };
    c.load = series(0.0, 8.0e6, SeriesUnit::watts);
    c.renewable = series(0.0, 8.0e6, SeriesUnit::watts);
    for (const Reservoir& r : c.network.reservoirs) {
        if (!r.natural_inflow_id.empty()) {
            c.inflows[r.natural_inflow_id] =
                series(0.0, 2.0, SeriesUnit::cubic_meters_per_second);
        }
    }
    return c;
}

} // namespace cpmhs::testing
