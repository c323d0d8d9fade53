#include "cpmhs/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cpmhs {

namespace {

// Absolute-plus-relative window inside which a below-minimum result is
// treated as rounding noise (a drawdown computed as avail/dt re-multiplied by
// dt can land an ulp past the bound) rather than a controller bug.
double undershoot_tolerance_m3(const ReservoirState& state, const Reservoir& reservoir) {
    return 1e-6 + 1e-9 * (std::abs(state.volume_m3) + std::abs(reservoir.volume_min_m3));
}

const TimeSeries* find_inflow(const std::map<std::string, TimeSeries>& natural_inflows,
                              const Reservoir& reservoir) {
    if (reservoir.natural_inflow_id.empty()) return nullptr;
    auto it = natural_inflows.find(reservoir.natural_inflow_id);
    if (it == natural_inflows.end()) {
        throw SeriesError("reservoir '" + reservoir.id + "' references missing inflow series '" +
                          reservoir.natural_inflow_id + "'");
    }
    return &it->second;
}

void check_series(const TimeSeries& series, const char* label, SeriesUnit unit,
                  std::size_t n_steps, double dt_s) {
    if (series.unit != unit) {
        throw SeriesError(std::string(label) + " series has the wrong unit");
    }
    if (series.values.size() != n_steps) {
        std::ostringstream msg;
        msg << label << " series has " << series.values.size() << " steps, expected " << n_steps;
        throw SeriesError(msg.str());
    }
    if (series.step_seconds != dt_s) {
        std::ostringstream msg;
        msg << label << " series step is " << series.step_seconds << " s, expected " << dt_s;
        throw SeriesError(msg.str());
    }
    for (std::size_t i = 0; i < series.values.size(); ++i) {
        if (!std::isfinite(series.values[i])) {
            std::ostringstream msg;
            msg << label << " series value at step " << i << " is not finite";
            throw SeriesError(msg.str());
        }
    }
}

} // namespace

ReservoirState step_reservoir(const ReservoirState& state, const Reservoir& reservoir,
                              double q_in_m3s, double q_out_m3s, double natural_inflow_m3s,
                              double dt_s) {
    if (!(dt_s > 0.0)) throw std::invalid_argument("dt_s must be positive");
    if (q_in_m3s < 0.0 || q_out_m3s < 0.0 || natural_inflow_m3s < 0.0) {
        throw std::invalid_argument("flows must be non-negative");
    }

    const double loss_m3 = state.volume_m3 * reservoir.loss_alpha;
    double volume = state.volume_m3 - loss_m3 +
                    (q_in_m3s + natural_inflow_m3s - q_out_m3s) * dt_s;

    ReservoirState next = state;
    next.evap_leak_m3_cum += loss_m3;

    if (volume > reservoir.volume_max_m3) {
        next.spilled_m3_cum += volume - reservoir.volume_max_m3;
        volume = reservoir.volume_max_m3;
    }
    if (volume < reservoir.volume_min_m3) {
        const double shortfall = reservoir.volume_min_m3 - volume;
        if (shortfall > undershoot_tolerance_m3(state, reservoir)) {
            std::ostringstream msg;
            msg << "reservoir '" << reservoir.id << "' drawn " << shortfall
                << " m^3 below its minimum volume";
            throw InfeasibilityError(msg.str(), reservoir.id);
        }
        volume = reservoir.volume_min_m3;
    }
    next.volume_m3 = volume;
    return next;
}

RunResult run_simulation(const CascadeNetwork& network, const DispatchPolicy& policy,
                         const TimeSeries& load_w, const TimeSeries& renewable_w, double dt_s,
                         const std::map<std::string, TimeSeries>& natural_inflows) {
    auto report = validate_network(network);
    if (!report.empty()) {
        throw ValidationError("network failed validation", std::move(report));
    }
    const NetworkIndex index = build_index(network);

    const std::size_t n_steps = load_w.values.size();
    check_series(load_w, "load", SeriesUnit::watts, n_steps, dt_s);
    check_series(renewable_w, "renewable", SeriesUnit::watts, n_steps, dt_s);

    const std::size_t n_res = network.reservoirs.size();
    const std::size_t n_stages = network.stages.size();
    std::vector<const TimeSeries*> inflow_of(n_res, nullptr);
    for (std::size_t r = 0; r < n_res; ++r) {
        inflow_of[r] = find_inflow(natural_inflows, network.reservoirs[r]);
        if (inflow_of[r] != nullptr) {
            check_series(*inflow_of[r], "natural inflow", SeriesUnit::cubic_meters_per_second,
                         n_steps, dt_s);
        }
    }

    RunResult result;
    result.initial = initial_states(network);
    result.records.reserve(n_steps);
    result.summary.n_steps = static_cast<long>(n_steps);
    result.summary.dt_s = dt_s;

    const double hours = dt_s / 3600.0;
    std::vector<ReservoirState> states = result.initial;
    std::vector<double> q_in(n_res), q_out(n_res);

    for (std::size_t t = 0; t < n_steps; ++t) {
        const double load = load_w.values[t];
        const double renewable = renewable_w.values[t];
        const DispatchDecision decision = policy(network, index, states, load - renewable, dt_s);

        std::fill(q_in.begin(), q_in.end(), 0.0);
        std::fill(q_out.begin(), q_out.end(), 0.0);
        StepRecord record;
        record.step_index = static_cast<long>(t);
        record.stages.resize(n_stages);
        for (std::size_t si = 0; si < n_stages; ++si) {
            const StageAction& a = decision.actions[si];
            StageStep& ss = record.stages[si];
            switch (a.kind) {
            case StageActionKind::generate:
                ss.q_turbine_m3s = a.flow_m3s;
                ss.p_gen_w = a.power_w;
                q_out[index.stage_upper[si]] += a.flow_m3s;
                q_in[index.stage_lower[si]] += a.flow_m3s;
                break;
            case StageActionKind::pump:
                ss.q_pump_m3s = a.flow_m3s;
                ss.p_pump_w = a.power_w;
                q_out[index.stage_lower[si]] += a.flow_m3s;
                q_in[index.stage_upper[si]] += a.flow_m3s;
                break;
            case StageActionKind::idle:
                break;
            }
            result.summary.generated_wh += ss.p_gen_w * hours;
            result.summary.pumped_wh += ss.p_pump_w * hours;
        }

        record.reservoirs.resize(n_res);
        for (std::size_t r = 0; r < n_res; ++r) {
            const double natural = inflow_of[r] != nullptr ? inflow_of[r]->values[t] : 0.0;
            try {
                states[r] = step_reservoir(states[r], network.reservoirs[r], q_in[r], q_out[r],
                                           natural, dt_s);
            } catch (const InfeasibilityError& e) {
                std::ostringstream msg;
                msg << e.what() << " at step " << t;
                throw InfeasibilityError(msg.str(), e.reservoir_id, static_cast<long>(t));
            }
            record.reservoirs[r] = {states[r], natural};
        }

        record.load_w = load;
        record.renewable_w = renewable;
        record.grid_import_w = decision.grid_import_w;
        record.grid_export_w = decision.grid_export_w;
        record.unserved_w = decision.unserved_w;
        record.curtailed_w = decision.curtailed_w;
        result.records.push_back(std::move(record));

        result.summary.load_wh += load * hours;
        result.summary.renewable_wh += renewable * hours;
        result.summary.imported_wh += decision.grid_import_w * hours;
        result.summary.exported_wh += decision.grid_export_w * hours;
        result.summary.unserved_wh += decision.unserved_w * hours;
        result.summary.curtailed_wh += decision.curtailed_w * hours;
    }

    result.summary.final_volume_m3.resize(n_res);
    for (std::size_t r = 0; r < n_res; ++r) {
        result.summary.final_volume_m3[r] = states[r].volume_m3;
        result.summary.spilled_m3 += states[r].spilled_m3_cum;
        result.summary.evap_leak_m3 += states[r].evap_leak_m3_cum;
    }
    return result;
}

RunResult run_simulation(const CascadeNetwork& network, const TimeSeries& load_w,
                         const TimeSeries& renewable_w, double dt_s,
                         const std::map<std::string, TimeSeries>& natural_inflows,
                         const PhysicalConstants& constants) {
    DispatchPolicy policy = [constants](const CascadeNetwork& net, const NetworkIndex& index,
                                        const std::vector<ReservoirState>& states,
                                        double net_load_w, double step_s) {
        return dispatch_step(net, index, states, net_load_w, step_s, constants);
    };
    return run_simulation(network, policy, load_w, renewable_w, dt_s, natural_inflows);
}

double MassBalanceReport::max_reservoir_residual_rel() const {
    double worst = 0.0;
    for (const auto& entry : per_reservoir) {
        worst = std::max(worst, entry.residual_rel);
    }
    return worst;
}

MassBalanceReport mass_balance_report(const CascadeNetwork& network, const RunResult& result) {
    const NetworkIndex index = build_index(network);
    const std::size_t n_res = network.reservoirs.size();
    const double dt_s = result.summary.dt_s;

    // Re-summed per reservoir from the records alone.
    std::vector<double> stage_in_m3(n_res, 0.0), stage_out_m3(n_res, 0.0);
    std::vector<double> natural_m3(n_res, 0.0);
    for (const StepRecord& record : result.records) {
        for (std::size_t si = 0; si < record.stages.size(); ++si) {
            const StageStep& ss = record.stages[si];
            stage_out_m3[index.stage_upper[si]] += ss.q_turbine_m3s * dt_s;
            stage_in_m3[index.stage_lower[si]] += ss.q_turbine_m3s * dt_s;
            stage_out_m3[index.stage_lower[si]] += ss.q_pump_m3s * dt_s;
            stage_in_m3[index.stage_upper[si]] += ss.q_pump_m3s * dt_s;
        }
        for (std::size_t r = 0; r < n_res; ++r) {
            natural_m3[r] += record.reservoirs[r].natural_inflow_m3s * dt_s;
        }
    }

    MassBalanceReport report;
    report.per_reservoir.resize(n_res);
    double system_delta = 0.0, system_external = 0.0, system_turnover = 0.0;
    for (std::size_t r = 0; r < n_res; ++r) {
        const ReservoirState& init = result.initial[r];
        const ReservoirState last =
            result.records.empty() ? init : result.records.back().reservoirs[r].state;
        const double spilled = last.spilled_m3_cum - init.spilled_m3_cum;
        const double lost = last.evap_leak_m3_cum - init.evap_leak_m3_cum;
        const double net_in = stage_in_m3[r] + natural_m3[r] - stage_out_m3[r];
        const double residual =
            std::abs(last.volume_m3 - init.volume_m3 - net_in + spilled + lost);
        const double turnover = std::abs(init.volume_m3) + stage_in_m3[r] + stage_out_m3[r] +
                                natural_m3[r] + spilled + lost;

        MassBalanceEntry& entry = report.per_reservoir[r];
        entry.reservoir_id = network.reservoirs[r].id;
        entry.residual_m3 = residual;
        entry.residual_rel = residual / std::max(1.0, turnover);

        system_delta += last.volume_m3 - init.volume_m3;
        system_external += natural_m3[r] - spilled - lost;
        system_turnover += turnover;
    }

    report.system_residual_m3 = std::abs(system_delta - system_external);
    report.system_residual_rel = report.system_residual_m3 / std::max(1.0, system_turnover);
    return report;
}

double max_power_balance_residual(const RunResult& result) {
    double worst = 0.0;
    for (const StepRecord& record : result.records) {
        double p_gen = 0.0, p_pump = 0.0;
        for (const StageStep& ss : record.stages) {
            p_gen += ss.p_gen_w;
            p_pump += ss.p_pump_w;
        }
        const double sources =
            record.renewable_w + p_gen + record.grid_import_w + record.unserved_w;
        const double sinks =
            record.load_w + p_pump + record.grid_export_w + record.curtailed_w;
        const double scale = std::max({1.0, std::abs(sources), std::abs(sinks)});
        worst = std::max(worst, std::abs(sources - sinks) / scale);
    }
    return worst;
}

} // namespace cpmhs
