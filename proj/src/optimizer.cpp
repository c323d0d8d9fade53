#include "cpmhs/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <unordered_map>

namespace cpmhs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Axis sizes in enumeration order: one axis per branch (intermediate count),
// then volume cap, turbine rating, pump rating. Row-major, last axis fastest.
std::vector<std::uint64_t> axis_sizes(const SearchSpace& space) {
    std::vector<std::uint64_t> sizes;
    sizes.reserve(space.n_intermediate.size() + 3);
    for (const auto& list : space.n_intermediate) sizes.push_back(list.size());
    sizes.push_back(space.intermediate_volume_max_m3.size());
    sizes.push_back(space.q_turbine_max_m3s.size());
    sizes.push_back(space.p_pump_max_w.size());
    return sizes;
}

std::uint64_t saturating_product(const std::vector<std::uint64_t>& sizes) {
    std::uint64_t total = 1;
    for (std::uint64_t s : sizes) {
        if (s == 0) return 0;
        if (total > std::numeric_limits<std::uint64_t>::max() / s) {
            return std::numeric_limits<std::uint64_t>::max();
        }
        total *= s;
    }
    return total;
}

std::uint64_t position_to_index(const std::vector<std::uint64_t>& sizes,
                                const std::vector<std::uint64_t>& pos) {
    std::uint64_t index = 0;
    for (std::size_t a = 0; a < sizes.size(); ++a) {
        index = index * sizes[a] + pos[a];
    }
    return index;
}

std::vector<std::uint64_t> index_to_position(const std::vector<std::uint64_t>& sizes,
                                             std::uint64_t index) {
    std::vector<std::uint64_t> pos(sizes.size());
    for (std::size_t a = sizes.size(); a-- > 0;) {
        pos[a] = index % sizes[a];
        index /= sizes[a];
    }
    return pos;
}

CandidateConfig candidate_from_position(const SearchSpace& space,
                                        const std::vector<std::uint64_t>& pos) {
    CandidateConfig c;
    const std::size_t n_branches = space.n_intermediate.size();
    c.n_intermediate.resize(n_branches);
    for (std::size_t b = 0; b < n_branches; ++b) {
        c.n_intermediate[b] = space.n_intermediate[b][pos[b]];
    }
    c.intermediate_volume_max_m3 = space.intermediate_volume_max_m3[pos[n_branches]];
    c.q_turbine_max_m3s = space.q_turbine_max_m3s[pos[n_branches + 1]];
    c.p_pump_max_w = space.p_pump_max_w[pos[n_branches + 2]];
    return c;
}

// Evenly spaced sites over one branch: n intermediates split the span and the
// head into n+1 equal segments.
CascadePlan even_plan(const BranchTemplate& branch, int n_intermediate) {
    CascadePlan plan;
    const int n_segments = n_intermediate + 1;
    const double total_head = branch.upper.elevation_m - branch.lower.elevation_m;
    for (int k = 0; k <= n_segments; ++k) {
        const double f = static_cast<double>(k) / n_segments;
        plan.sites.push_back({branch.span_km * f, branch.upper.elevation_m - total_head * f});
    }
    plan.sites.front() = {0.0, branch.upper.elevation_m};
    plan.sites.back() = {branch.span_km, branch.lower.elevation_m};
    for (int k = 0; k < n_segments; ++k) {
        plan.segments.push_back(
            {plan.sites[k + 1].distance_km - plan.sites[k].distance_km,
             plan.sites[k].elevation_m - plan.sites[k + 1].elevation_m});
    }
    plan.total_head_m = total_head;
    plan.n_intermediate = n_intermediate;
    return plan;
}

} // namespace

std::uint64_t SearchSpace::size() const {
    return saturating_product(axis_sizes(*this));
}

CandidateConfig candidate_at(const SearchSpace& space, std::uint64_t index) {
    const auto sizes = axis_sizes(space);
    const std::uint64_t total = saturating_product(sizes);
    if (index >= total) {
        throw std::out_of_range("candidate index exceeds the search space size");
    }
    return candidate_from_position(space, index_to_position(sizes, index));
}

CascadeNetwork instantiate_config(const ConfigTemplate& tmpl, const CandidateConfig& candidate) {
    if (candidate.n_intermediate.size() != tmpl.branches.size()) {
        throw std::invalid_argument("candidate branch count does not match the template");
    }

    CascadeNetwork net;
    net.grid_import_max_w = tmpl.grid_import_max_w;
    net.grid_export_max_w = tmpl.grid_export_max_w;

    for (std::size_t b = 0; b < tmpl.branches.size(); ++b) {
        const BranchTemplate& branch = tmpl.branches[b];
        const int n = candidate.n_intermediate[b];
        if (n < 0) throw std::invalid_argument("n_intermediate must be non-negative");

        StageDefaults defaults = branch.defaults;
        defaults.volume_max_m3 = candidate.intermediate_volume_max_m3;
        defaults.q_turbine_max_m3s = candidate.q_turbine_max_m3s;
        defaults.p_pump_max_w = candidate.p_pump_max_w;

        CascadeNetwork fragment =
            plan_to_network(even_plan(branch, n), branch.upper, branch.lower, defaults);

        // Merge on shared lake ids: a reservoir that already exists (same id,
        // same definition) is reused; a conflicting redefinition is kept so
        // validation reports the duplicate.
        for (const Reservoir& r : fragment.reservoirs) {
            auto it = std::find_if(net.reservoirs.begin(), net.reservoirs.end(),
                                   [&](const Reservoir& seen) { return seen.id == r.id; });
            if (it == net.reservoirs.end() || !(*it == r)) {
                net.reservoirs.push_back(r);
            }
        }
        for (const Stage& s : fragment.stages) {
            net.stages.push_back(s);
        }
    }
    return net;
}

ConfigTemplate derive_config_template(const CascadeNetwork& network,
                                      const StageDefaults& defaults) {
    const NetworkIndex index = build_index(network);
    const std::size_t n_res = network.reservoirs.size();

    std::vector<bool> has_parent(n_res, false);
    std::vector<std::vector<int>> stages_below(n_res); // stage indices, declaration order
    for (std::size_t si = 0; si < network.stages.size(); ++si) {
        has_parent[index.stage_lower[si]] = true;
        stages_below[index.stage_upper[si]].push_back(static_cast<int>(si));
    }

    ConfigTemplate tmpl;
    tmpl.grid_import_max_w = network.grid_import_max_w;
    tmpl.grid_export_max_w = network.grid_export_max_w;

    // Depth-first walk from each root; every root-to-leaf chain becomes one
    // branch whose efficiencies and flow floor come from its first stage.
    struct Frame {
        int reservoir;
        int first_stage;
        double span_km;
    };
    for (std::size_t root = 0; root < n_res; ++root) {
        if (has_parent[root] || stages_below[root].empty()) continue;
        std::vector<Frame> stack{{static_cast<int>(root), -1, 0.0}};
        while (!stack.empty()) {
            Frame frame = stack.back();
            stack.pop_back();
            const auto& below = stages_below[frame.reservoir];
            if (below.empty()) {
                BranchTemplate branch;
                branch.upper = network.reservoirs[root];
                branch.lower = network.reservoirs[frame.reservoir];
                branch.span_km = frame.span_km;
                branch.defaults = defaults;
                const Stage& first = network.stages[frame.first_stage];
                branch.defaults.eta_turbine = first.eta_turbine;
                branch.defaults.eta_pump = first.eta_pump;
                branch.defaults.q_turbine_min_m3s = first.q_turbine_min_m3s;
                tmpl.branches.push_back(std::move(branch));
                continue;
            }
            // Reverse push so declaration order pops first.
            for (auto it = below.rbegin(); it != below.rend(); ++it) {
                const Stage& s = network.stages[*it];
                stack.push_back({index.stage_lower[*it],
                                 frame.first_stage < 0 ? *it : frame.first_stage,
                                 frame.span_km + s.distance_km});
            }
        }
    }
    return tmpl;
}

FitnessResult evaluate_fitness(const ConfigTemplate& tmpl, const CandidateConfig& candidate,
                               const SimulationInputs& inputs, const FitnessWeights& weights) {
    FitnessResult fr;
    for (std::size_t b = 0; b < candidate.n_intermediate.size(); ++b) {
        if (candidate.n_intermediate[b] < 0) {
            fr.fitness = kInf;
            fr.violations.push_back({tmpl.branches.size() > b ? tmpl.branches[b].lower.id
                                                              : "<branch>",
                                     "n_intermediate >= 0 failed"});
            return fr;
        }
    }

    CascadeNetwork net;
    try {
        net = instantiate_config(tmpl, candidate);
    } catch (const ValidationError& e) {
        // plan_to_network refuses to materialize an invalid fragment; an
        // unbuildable candidate is a score, not an error, during a search.
        fr.fitness = kInf;
        fr.violations = e.report;
        return fr;
    }
    auto report = validate_network(net);
    if (!report.empty()) {
        fr.fitness = kInf;
        fr.violations = std::move(report);
        return fr;
    }

    const RunResult run = run_simulation(net, inputs.load_w, inputs.renewable_w, inputs.dt_s,
                                         inputs.natural_inflows, inputs.constants);
    fr.valid = true;
    fr.summary = run.summary;
    fr.fitness = weights.w_unserved * run.summary.unserved_wh +
                 weights.w_import * run.summary.imported_wh +
                 weights.w_spill * run.summary.spilled_m3 -
                 weights.w_export_credit * run.summary.exported_wh +
                 weights.w_reservoir * static_cast<double>(net.reservoirs.size());
    return fr;
}

OptimizeResult optimize(const ConfigTemplate& tmpl, const SearchSpace& space,
                        const SimulationInputs& inputs, const FitnessWeights& weights,
                        std::uint64_t budget, std::uint64_t seed) {
    const auto sizes = axis_sizes(space);
    const std::uint64_t total = saturating_product(sizes);
    if (total == 0) throw std::invalid_argument("search space is empty");
    if (budget == 0) throw std::invalid_argument("budget must be positive");

    OptimizeResult out;
    out.exhaustive = total <= budget;
    out.best_fitness = kInf;

    std::unordered_map<std::uint64_t, double> cache;
    bool have_best = false;
    std::uint64_t best_index = 0;

    auto evaluate_index = [&](std::uint64_t index) {
        auto it = cache.find(index);
        if (it != cache.end()) return;
        const CandidateConfig candidate = candidate_from_position(
            space, index_to_position(sizes, index));
        const double fitness = evaluate_fitness(tmpl, candidate, inputs, weights).fitness;
        cache.emplace(index, fitness);
        out.log.push_back({candidate, fitness});
        if (!have_best || fitness < out.best_fitness) {
            have_best = true;
            out.best_fitness = fitness;
            out.best = candidate;
            best_index = index;
        }
    };

    if (out.exhaustive) {
        for (std::uint64_t index = 0; index < total; ++index) evaluate_index(index);
        return out;
    }

    // Seeded sampling over half the budget, then coordinate descent around
    // the incumbent until a full sweep brings no improvement or the budget
    // runs out. The cache keeps each configuration's single evaluation.
    std::mt19937_64 rng(seed);
    const std::uint64_t sample_budget = std::max<std::uint64_t>(1, budget / 2);
    for (std::uint64_t draw = 0; draw < sample_budget; ++draw) {
        evaluate_index(rng() % total);
    }

    bool improved = true;
    while (improved && cache.size() < budget) {
        improved = false;
        const std::uint64_t sweep_start = best_index;
        std::vector<std::uint64_t> pos = index_to_position(sizes, sweep_start);
        for (std::size_t a = 0; a < sizes.size() && cache.size() < budget; ++a) {
            for (std::uint64_t v = 0; v < sizes[a] && cache.size() < budget; ++v) {
                std::vector<std::uint64_t> neighbor = pos;
                neighbor[a] = v;
                evaluate_index(position_to_index(sizes, neighbor));
            }
            // Continue the sweep from the best point found so far.
            pos = index_to_position(sizes, best_index);
        }
        improved = best_index != sweep_start;
    }
    return out;
}

} // namespace cpmhs
