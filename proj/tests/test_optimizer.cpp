#include <doctest.h>

#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

#include "cpmhs/optimizer.hpp"
#include "test_support.hpp"

using namespace cpmhs;
using namespace cpmhs::testing;

namespace {

// One rebuildable branch: lake at 150 m down to a basin at 100 m over 3 km.
ConfigTemplate one_branch_template() {
    ConfigTemplate tmpl;
    BranchTemplate branch;
    branch.upper = make_reservoir("lake", 150.0, 2.0e6, 1.0e6);
    branch.lower = make_reservoir("basin", 100.0, 2.0e6, 0.0);
    branch.span_km = 3.0;
    tmpl.branches.push_back(branch);
    tmpl.grid_import_max_w = 1.0e7;
    tmpl.grid_export_max_w = 1.0e7;
    return tmpl;
}

SimulationInputs flat_inputs(int n_steps, double load_w) {
    SimulationInputs in;
    in.load_w = flat_series(n_steps, load_w);
    in.renewable_w = flat_series(n_steps, 0.0);
    in.dt_s = 3600.0;
    return in;
}

CandidateConfig candidate(std::vector<int> n, double vol, double q, double p) {
    return CandidateConfig{std::move(n), vol, q, p};
}

std::string key_of(const CandidateConfig& c) {
    std::string k;
    for (int n : c.n_intermediate) k += std::to_string(n) + "|";
    k += std::to_string(c.intermediate_volume_max_m3) + "|";
    k += std::to_string(c.q_turbine_max_m3s) + "|" + std::to_string(c.p_pump_max_w);
    return k;
}

} // namespace

TEST_CASE("search space size and row-major candidate enumeration") {
    SearchSpace space;
    space.n_intermediate = {{1, 2}};
    space.intermediate_volume_max_m3 = {100.0, 200.0, 300.0};
    space.q_turbine_max_m3s = {5.0};
    space.p_pump_max_w = {1.0e6, 2.0e6};
    REQUIRE(space.size() == 12);

    CHECK(candidate_at(space, 0) == candidate({1}, 100.0, 5.0, 1.0e6));
    CHECK(candidate_at(space, 1) == candidate({1}, 100.0, 5.0, 2.0e6)); // last axis fastest
    CHECK(candidate_at(space, 2) == candidate({1}, 200.0, 5.0, 1.0e6));
    CHECK(candidate_at(space, 6) == candidate({2}, 100.0, 5.0, 1.0e6));
    CHECK(candidate_at(space, 11) == candidate({2}, 300.0, 5.0, 2.0e6));
    CHECK_THROWS_AS(candidate_at(space, 12), std::out_of_range);

    SUBCASE("an empty axis empties the space") {
        space.q_turbine_max_m3s.clear();
        CHECK(space.size() == 0);
    }
}

TEST_CASE("instantiate_config builds evenly split branches") {
    const ConfigTemplate tmpl = one_branch_template();
    const CascadeNetwork net = instantiate_config(tmpl, candidate({2}, 5.0e4, 8.0, 2.0e6));

    REQUIRE(net.reservoirs.size() == 4);
    REQUIRE(net.stages.size() == 3);
    CHECK(net.reservoirs[0].id == "lake");
    CHECK(net.reservoirs[1].id == "basin_i1");
    CHECK(net.reservoirs[3].id == "basin");
    CHECK(net.reservoirs[1].volume_max_m3 == 5.0e4);
    for (const auto& s : net.stages) {
        CHECK(s.head_m == doctest::Approx(50.0 / 3.0).epsilon(1e-12));
        CHECK(s.distance_km == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(s.q_turbine_max_m3s == 8.0);
        CHECK(s.p_pump_max_w == 2.0e6);
    }
    CHECK(validate_network(net).empty());
}

TEST_CASE("branches sharing a lake are merged on its id") {
    ConfigTemplate tmpl = one_branch_template();
    BranchTemplate second = tmpl.branches[0];
    second.lower = make_reservoir("sump", 80.0, 2.0e6, 0.0);
    second.span_km = 2.0;
    tmpl.branches.push_back(second);

    const CascadeNetwork net = instantiate_config(tmpl, candidate({1, 1}, 5.0e4, 8.0, 2.0e6));
    int lake_count = 0;
    for (const auto& r : net.reservoirs) {
        if (r.id == "lake") ++lake_count;
    }
    CHECK(lake_count == 1);
    CHECK(net.reservoirs.size() == 5); // lake + 2 intermediates + 2 lower lakes
    CHECK(net.stages.size() == 4);
    CHECK(validate_network(net).empty());
}

TEST_CASE("instantiate_config rejects shape errors") {
    const ConfigTemplate tmpl = one_branch_template();
    CHECK_THROWS_AS(instantiate_config(tmpl, candidate({1, 1}, 1.0e4, 5.0, 1.0e6)),
                    std::invalid_argument);
    CHECK_THROWS_AS(instantiate_config(tmpl, candidate({-1}, 1.0e4, 5.0, 1.0e6)),
                    std::invalid_argument);
}

TEST_CASE("derive_config_template inverts instantiate_config") {
    ConfigTemplate tmpl = one_branch_template();
    tmpl.branches[0].defaults.eta_turbine = 0.88;
    tmpl.branches[0].defaults.q_turbine_min_m3s = 0.1;
    const CandidateConfig chosen = candidate({2}, 5.0e4, 8.0, 2.0e6);
    const CascadeNetwork net = instantiate_config(tmpl, chosen);

    StageDefaults defaults = tmpl.branches[0].defaults;
    const ConfigTemplate derived = derive_config_template(net, defaults);
    REQUIRE(derived.branches.size() == 1);
    CHECK(derived.branches[0].upper == tmpl.branches[0].upper);
    CHECK(derived.branches[0].lower == tmpl.branches[0].lower);
    CHECK(derived.branches[0].span_km == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(derived.branches[0].defaults.eta_turbine == 0.88);
    CHECK(derived.branches[0].defaults.q_turbine_min_m3s == 0.1);
    CHECK(derived.grid_import_max_w == tmpl.grid_import_max_w);

    const CascadeNetwork rebuilt = instantiate_config(derived, chosen);
    CHECK(rebuilt == net);
}

TEST_CASE("derive_config_template walks branches in stage declaration order") {
    ConfigTemplate tmpl = one_branch_template();
    BranchTemplate second = tmpl.branches[0];
    second.lower = make_reservoir("sump", 80.0, 2.0e6, 0.0);
    tmpl.branches.push_back(second);
    const CascadeNetwork net = instantiate_config(tmpl, candidate({0, 0}, 5.0e4, 8.0, 2.0e6));

    const ConfigTemplate derived = derive_config_template(net);
    REQUIRE(derived.branches.size() == 2);
    CHECK(derived.branches[0].lower.id == "basin");
    CHECK(derived.branches[1].lower.id == "sump");
}

TEST_CASE("evaluate_fitness scores a quiescent configuration by reservoir count") {
    const ConfigTemplate tmpl = one_branch_template();
    const SimulationInputs inputs = flat_inputs(6, 0.0);
    const FitnessResult fr =
        evaluate_fitness(tmpl, candidate({1}, 5.0e4, 8.0, 2.0e6), inputs, FitnessWeights{});
    CHECK(fr.valid);
    CHECK(fr.fitness == 3000.0); // 3 reservoirs, nothing else moves
    CHECK(fr.summary.unserved_wh == 0.0);
}

TEST_CASE("evaluate_fitness applies every weight term") {
    const ConfigTemplate tmpl = one_branch_template();
    const SimulationInputs inputs = flat_inputs(8, 2.0e6);
    FitnessWeights weights;
    weights.w_unserved = 2.0;
    weights.w_import = 0.5;
    weights.w_spill = 0.1;
    weights.w_export_credit = 0.25;
    weights.w_reservoir = 10.0;

    const CandidateConfig c = candidate({1}, 5.0e4, 8.0, 2.0e6);
    const FitnessResult fr = evaluate_fitness(tmpl, c, inputs, weights);
    REQUIRE(fr.valid);
    const RunSummary& s = fr.summary;
    const double expect = 2.0 * s.unserved_wh + 0.5 * s.imported_wh + 0.1 * s.spilled_m3 -
                          0.25 * s.exported_wh + 10.0 * 3.0;
    CHECK(fr.fitness == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("an invalid candidate scores infinite with the report attached") {
    const ConfigTemplate tmpl = one_branch_template();
    const SimulationInputs inputs = flat_inputs(4, 0.0);

    SUBCASE("negative intermediate count") {
        const FitnessResult fr =
            evaluate_fitness(tmpl, candidate({-2}, 5.0e4, 8.0, 2.0e6), inputs, FitnessWeights{});
        CHECK(!fr.valid);
        CHECK(std::isinf(fr.fitness));
        REQUIRE(!fr.violations.empty());
        CHECK(fr.violations[0].message == "n_intermediate >= 0 failed");
    }
    SUBCASE("sizing that fails network validation") {
        const FitnessResult fr =
            evaluate_fitness(tmpl, candidate({1}, -5.0, 8.0, 2.0e6), inputs, FitnessWeights{});
        CHECK(!fr.valid);
        CHECK(std::isinf(fr.fitness));
        CHECK(!fr.violations.empty());
    }
}

TEST_CASE("exhaustive optimization matches the brute-force argmin") {
    const ConfigTemplate tmpl = one_branch_template();
    const SimulationInputs inputs = flat_inputs(6, 1.5e6);
    SearchSpace space;
    space.n_intermediate = {{0, 1, 2}};
    space.intermediate_volume_max_m3 = {2.0e4, 5.0e4};
    space.q_turbine_max_m3s = {2.0, 8.0};
    space.p_pump_max_w = {1.0e6};
    REQUIRE(space.size() == 12);

    const OptimizeResult result =
        optimize(tmpl, space, inputs, FitnessWeights{}, /*budget=*/100);
    CHECK(result.exhaustive);
    REQUIRE(result.log.size() == 12);

    double best_fitness = std::numeric_limits<double>::infinity();
    CandidateConfig best;
    for (std::uint64_t i = 0; i < space.size(); ++i) {
        const CandidateConfig c = candidate_at(space, i);
        CHECK(result.log[i].config == c); // log preserves enumeration order
        const double f = evaluate_fitness(tmpl, c, inputs, FitnessWeights{}).fitness;
        CHECK(result.log[i].fitness == f);
        if (f < best_fitness) {
            best_fitness = f;
            best = c;
        }
    }
    CHECK(result.best_fitness == best_fitness);
    CHECK(result.best == best);
}

TEST_CASE("fitness ties resolve to the earliest enumerated candidate") {
    const ConfigTemplate tmpl = one_branch_template();
    const SimulationInputs inputs = flat_inputs(2, 0.0);
    SearchSpace space;
    space.n_intermediate = {{1, 2}};
    space.intermediate_volume_max_m3 = {5.0e4};
    space.q_turbine_max_m3s = {8.0};
    space.p_pump_max_w = {1.0e6};

    FitnessWeights zero{0.0, 0.0, 0.0, 0.0, 0.0};
    const OptimizeResult result = optimize(tmpl, space, inputs, zero, 10);
    CHECK(result.best == candidate_at(space, 0));
    CHECK(result.best_fitness == 0.0);
}

TEST_CASE("optimize rejects empty spaces and zero budgets") {
    const ConfigTemplate tmpl = one_branch_template();
    const SimulationInputs inputs = flat_inputs(2, 0.0);
    SearchSpace space;
    space.n_intermediate = {{1}};
    space.intermediate_volume_max_m3 = {5.0e4};
    space.q_turbine_max_m3s = {8.0};
    space.p_pump_max_w = {1.0e6};

    CHECK_THROWS_AS(optimize(tmpl, space, inputs, FitnessWeights{}, 0), std::invalid_argument);
    space.p_pump_max_w.clear();
    CHECK_THROWS_AS(optimize(tmpl, space, inputs, FitnessWeights{}, 10), std::invalid_argument);
}

TEST_CASE("sampled optimization is budget-bounded, deduplicated, and seed-reproducible") {
    const ConfigTemplate tmpl = one_branch_template();
    const SimulationInputs inputs = flat_inputs(4, 1.0e6);
    SearchSpace space;
    space.n_intermediate = {{0, 1, 2, 3}};
    space.intermediate_volume_max_m3 = {2.0e4, 5.0e4, 1.0e5};
    space.q_turbine_max_m3s = {1.0, 4.0, 8.0};
    space.p_pump_max_w = {0.0, 1.0e6};
    REQUIRE(space.size() == 72);

    const std::uint64_t budget = 20;
    const OptimizeResult a = optimize(tmpl, space, inputs, FitnessWeights{}, budget, 42);
    CHECK(!a.exhaustive);
    CHECK(a.log.size() <= budget);
    CHECK(!a.log.empty());

    // Every configuration is evaluated at most once.
    std::set<std::string> seen;
    double log_min = std::numeric_limits<double>::infinity();
    for (const auto& e : a.log) {
        CHECK(seen.insert(key_of(e.config)).second);
        log_min = std::min(log_min, e.fitness);
    }
    CHECK(a.best_fitness == log_min);

    const OptimizeResult b = optimize(tmpl, space, inputs, FitnessWeights{}, budget, 42);
    REQUIRE(a.log.size() == b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) {
        CHECK(a.log[i].config == b.log[i].config);
        CHECK(a.log[i].fitness == b.log[i].fitness);
    }
    CHECK(a.best == b.best);
    CHECK(a.best_fitness == b.best_fitness);
}
