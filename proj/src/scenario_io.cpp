#include "cpmhs/scenario_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "cpmhs/hydraulics.hpp"

namespace cpmhs {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Shortest round-trip decimal form; the same value always prints the same
// bytes, which is what makes result files byte-deterministic.
std::string format_double(double value) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

double parse_double(std::string_view text, const fs::path& path, std::size_t line_no) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        std::ostringstream msg;
        msg << path.string() << ":" << line_no << ": cannot parse '" << text << "' as a number";
        throw ParseError(msg.str());
    }
    if (!std::isfinite(value)) {
        std::ostringstream msg;
        msg << path.string() << ":" << line_no << ": value '" << text << "' is not finite";
        throw ParseError(msg.str());
    }
    return value;
}

long parse_long(std::string_view text, const fs::path& path, std::size_t line_no) {
    long value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        std::ostringstream msg;
        msg << path.string() << ":" << line_no << ": cannot parse '" << text << "' as an integer";
        throw ParseError(msg.str());
    }
    return value;
}

std::string_view trim_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

// Splits one CSV line at the single expected comma.
std::pair<std::string_view, std::string_view> split2(std::string_view line, const fs::path& path,
                                                     std::size_t line_no) {
    const auto comma = line.find(',');
    if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos) {
        std::ostringstream msg;
        msg << path.string() << ":" << line_no << ": expected exactly two columns";
        throw ParseError(msg.str());
    }
    return {line.substr(0, comma), line.substr(comma + 1)};
}

std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    return in;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary); // binary keeps LF endings everywhere
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    return out;
}

const char* unit_column(SeriesUnit unit) {
    return unit == SeriesUnit::watts ? "value_w" : "value_m3s";
}

// --- scenario JSON helpers -------------------------------------------------

[[noreturn]] void field_error(const fs::path& path, const std::string& context,
                              const std::string& what) {
    throw ParseError(path.string() + ": " + context + ": " + what);
}

template <typename T>
T get_field(const json& obj, const char* key, const fs::path& path, const std::string& context) {
    if (!obj.contains(key)) field_error(path, context, std::string("missing field '") + key + "'");
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        field_error(path, context, std::string("field '") + key + "': " + e.what());
    }
}

template <typename T>
T get_field_or(const json& obj, const char* key, T fallback, const fs::path& path,
               const std::string& context) {
    if (!obj.contains(key)) return fallback;
    return get_field<T>(obj, key, path, context);
}

json reservoir_to_json(const Reservoir& r) {
    json j{{"id", r.id},
           {"name", r.name},
           {"elevation_m", r.elevation_m},
           {"surface_area_m2", r.surface_area_m2},
           {"volume_min_m3", r.volume_min_m3},
           {"volume_max_m3", r.volume_max_m3},
           {"volume_init_m3", r.volume_init_m3},
           {"loss_alpha", r.loss_alpha}};
    if (!r.natural_inflow_id.empty()) j["natural_inflow_id"] = r.natural_inflow_id;
    return j;
}

Reservoir reservoir_from_json(const json& j, const fs::path& path) {
    Reservoir r;
    r.id = get_field<std::string>(j, "id", path, "reservoir");
    const std::string context = "reservoir '" + r.id + "'";
    r.name = get_field_or<std::string>(j, "name", r.id, path, context);
    r.elevation_m = get_field<double>(j, "elevation_m", path, context);
    r.surface_area_m2 = get_field<double>(j, "surface_area_m2", path, context);
    r.volume_min_m3 = get_field_or<double>(j, "volume_min_m3", 0.0, path, context);
    r.volume_max_m3 = get_field<double>(j, "volume_max_m3", path, context);
    r.volume_init_m3 = get_field_or<double>(j, "volume_init_m3", 0.0, path, context);
    r.loss_alpha = get_field_or<double>(j, "loss_alpha", 0.0, path, context);
    r.natural_inflow_id = get_field_or<std::string>(j, "natural_inflow_id", "", path, context);
    return r;
}

json stage_to_json(const Stage& s) {
    return json{{"id", s.id},
                {"upper_id", s.upper_id},
                {"lower_id", s.lower_id},
                {"head_m", s.head_m},
                {"distance_km", s.distance_km},
                {"eta_turbine", s.eta_turbine},
                {"eta_pump", s.eta_pump},
                {"q_turbine_min_m3s", s.q_turbine_min_m3s},
                {"q_turbine_max_m3s", s.q_turbine_max_m3s},
                {"p_pump_max_w", s.p_pump_max_w}};
}

Stage stage_from_json(const json& j, const fs::path& path) {
    Stage s;
    s.id = get_field<std::string>(j, "id", path, "stage");
    const std::string context = "stage '" + s.id + "'";
    s.upper_id = get_field<std::string>(j, "upper_id", path, context);
    s.lower_id = get_field<std::string>(j, "lower_id", path, context);
    s.head_m = get_field<double>(j, "head_m", path, context);
    s.distance_km = get_field_or<double>(j, "distance_km", 0.0, path, context);
    s.eta_turbine = get_field_or<double>(j, "eta_turbine", s.eta_turbine, path, context);
    s.eta_pump = get_field_or<double>(j, "eta_pump", s.eta_pump, path, context);
    s.q_turbine_min_m3s = get_field_or<double>(j, "q_turbine_min_m3s", 0.0, path, context);
    s.q_turbine_max_m3s = get_field<double>(j, "q_turbine_max_m3s", path, context);
    s.p_pump_max_w = get_field_or<double>(j, "p_pump_max_w", 0.0, path, context);
    return s;
}

FitnessWeights weights_from_json(const json& j, const fs::path& path) {
    FitnessWeights w;
    w.w_unserved = get_field_or<double>(j, "w_unserved", w.w_unserved, path, "weights");
    w.w_import = get_field_or<double>(j, "w_import", w.w_import, path, "weights");
    w.w_spill = get_field_or<double>(j, "w_spill", w.w_spill, path, "weights");
    w.w_export_credit =
        get_field_or<double>(j, "w_export_credit", w.w_export_credit, path, "weights");
    w.w_reservoir = get_field_or<double>(j, "w_reservoir", w.w_reservoir, path, "weights");
    return w;
}

json weights_to_json(const FitnessWeights& w) {
    return json{{"w_unserved", w.w_unserved},
                {"w_import", w.w_import},
                {"w_spill", w.w_spill},
                {"w_export_credit", w.w_export_credit},
                {"w_reservoir", w.w_reservoir}};
}

SearchSpace space_from_json(const json& j, const fs::path& path) {
    SearchSpace space;
    space.n_intermediate =
        get_field<std::vector<std::vector<int>>>(j, "n_intermediate", path, "search_space");
    space.intermediate_volume_max_m3 = get_field<std::vector<double>>(
        j, "intermediate_volume_max_m3", path, "search_space");
    space.q_turbine_max_m3s =
        get_field<std::vector<double>>(j, "q_turbine_max_m3s", path, "search_space");
    space.p_pump_max_w = get_field<std::vector<double>>(j, "p_pump_max_w", path, "search_space");
    return space;
}

json space_to_json(const SearchSpace& space) {
    return json{{"n_intermediate", space.n_intermediate},
                {"intermediate_volume_max_m3", space.intermediate_volume_max_m3},
                {"q_turbine_max_m3s", space.q_turbine_max_m3s},
                {"p_pump_max_w", space.p_pump_max_w}};
}

void check_scenario_series(const Scenario& scenario) {
    const std::size_t n = scenario.load_w.values.size();
    auto check = [&](const TimeSeries& series, const std::string& label) {
        if (series.values.size() != n) {
            std::ostringstream msg;
            msg << label << " series has " << series.values.size() << " steps, load has " << n;
            throw SeriesError(msg.str());
        }
        if (series.step_seconds != scenario.dt_s) {
            std::ostringstream msg;
            msg << label << " series step " << series.step_seconds << " s does not match dt_s "
                << scenario.dt_s;
            throw SeriesError(msg.str());
        }
    };
    check(scenario.renewable_w, "renewable");
    for (const auto& [id, series] : scenario.natural_inflows) check(series, "inflow '" + id + "'");
    for (const Reservoir& r : scenario.network.reservoirs) {
        if (!r.natural_inflow_id.empty() &&
            scenario.natural_inflows.find(r.natural_inflow_id) == scenario.natural_inflows.end()) {
            throw SeriesError("reservoir '" + r.id + "' references missing inflow series '" +
                              r.natural_inflow_id + "'");
        }
    }
}

TimeSeries zero_series(std::size_t n, double dt_s, SeriesUnit unit) {
    TimeSeries ts;
    ts.step_seconds = dt_s;
    ts.unit = unit;
    ts.values.assign(n, 0.0);
    return ts;
}

} // namespace

SimulationInputs Scenario::simulation_inputs() const {
    SimulationInputs inputs;
    inputs.load_w = load_w;
    inputs.renewable_w = renewable_w;
    inputs.natural_inflows = natural_inflows;
    inputs.dt_s = dt_s;
    return inputs;
}

TimeSeries load_timeseries_csv(const fs::path& path, SeriesUnit expected_unit, double dt_s) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");

    const std::string_view header = trim_cr(line);
    const std::string expected_header = std::string("step,") + unit_column(expected_unit);
    if (header != expected_header) {
        throw ParseError(path.string() + ":1: header '" + std::string(header) + "' does not match '" +
                         expected_header + "'");
    }

    TimeSeries ts;
    ts.step_seconds = dt_s;
    ts.unit = expected_unit;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view row = trim_cr(line);
        if (row.empty()) continue;
        auto [step_text, value_text] = split2(row, path, line_no);
        const long step = parse_long(step_text, path, line_no);
        const long expected = static_cast<long>(ts.values.size());
        if (step != expected) {
            std::ostringstream msg;
            msg << path.string() << ":" << line_no << ": step index " << step << ", expected "
                << expected << " (indices must be 0-based and contiguous)";
            throw ParseError(msg.str());
        }
        ts.values.push_back(parse_double(value_text, path, line_no));
    }
    return ts;
}

void write_timeseries_csv(const fs::path& path, const TimeSeries& series) {
    std::ofstream out = open_output(path);
    out << "step," << unit_column(series.unit) << "\n";
    for (std::size_t i = 0; i < series.values.size(); ++i) {
        out << i << "," << format_double(series.values[i]) << "\n";
    }
}

TerrainProfile load_terrain_csv(const fs::path& path) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
    if (trim_cr(line) != "distance_km,elevation_m") {
        throw ParseError(path.string() + ":1: header must be 'distance_km,elevation_m'");
    }

    TerrainProfile profile;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view row = trim_cr(line);
        if (row.empty()) continue;
        auto [dist_text, elev_text] = split2(row, path, line_no);
        profile.vertices.push_back(
            {parse_double(dist_text, path, line_no), parse_double(elev_text, path, line_no)});
    }
    return profile;
}

Scenario load_scenario(const fs::path& path) {
    std::ifstream in = open_input(path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    if (!doc.is_object()) throw ParseError(path.string() + ": top level must be an object");

    Scenario scenario;
    scenario.name = get_field<std::string>(doc, "name", path, "scenario");
    scenario.description = get_field_or<std::string>(doc, "description", "", path, "scenario");
    scenario.dt_s = get_field_or<double>(doc, "dt_s", 3600.0, path, "scenario");
    if (!(scenario.dt_s > 0.0)) field_error(path, "scenario", "dt_s must be positive");

    for (const json& j : get_field<json>(doc, "reservoirs", path, "scenario")) {
        scenario.network.reservoirs.push_back(reservoir_from_json(j, path));
    }
    for (const json& j : get_field<json>(doc, "stages", path, "scenario")) {
        scenario.network.stages.push_back(stage_from_json(j, path));
    }
    const json grid = get_field<json>(doc, "grid", path, "scenario");
    scenario.network.grid_import_max_w = get_field<double>(grid, "import_max_w", path, "grid");
    scenario.network.grid_export_max_w = get_field<double>(grid, "export_max_w", path, "grid");

    const fs::path base = path.parent_path();
    const json series = get_field<json>(doc, "series", path, "scenario");
    const std::string load_file = get_field<std::string>(series, "load", path, "series");
    scenario.load_w = load_timeseries_csv(base / load_file, SeriesUnit::watts, scenario.dt_s);
    if (series.contains("renewable")) {
        const std::string renewable_file =
            get_field<std::string>(series, "renewable", path, "series");
        scenario.renewable_w =
            load_timeseries_csv(base / renewable_file, SeriesUnit::watts, scenario.dt_s);
    } else {
        scenario.renewable_w =
            zero_series(scenario.load_w.values.size(), scenario.dt_s, SeriesUnit::watts);
    }
    if (series.contains("inflows")) {
        const json inflows = get_field<json>(series, "inflows", path, "series");
        if (!inflows.is_object()) field_error(path, "series", "'inflows' must be an object");
        for (const auto& [id, file] : inflows.items()) {
            if (!file.is_string()) field_error(path, "series", "inflow '" + id + "' must be a path");
            scenario.natural_inflows[id] = load_timeseries_csv(
                base / file.get<std::string>(), SeriesUnit::cubic_meters_per_second, scenario.dt_s);
        }
    }

    if (doc.contains("weights")) {
        scenario.weights = weights_from_json(doc.at("weights"), path);
    }
    if (doc.contains("search_space")) {
        scenario.search_space = space_from_json(doc.at("search_space"), path);
    }
    if (doc.contains("reference_energy_gwh")) {
        scenario.reference_energy_gwh = get_field<std::map<std::string, double>>(
            doc, "reference_energy_gwh", path, "scenario");
    }

    auto report = validate_network(scenario.network);
    if (!report.empty()) {
        throw ValidationError("scenario '" + scenario.name + "' failed network validation",
                              std::move(report));
    }
    check_scenario_series(scenario);
    return scenario;
}

fs::path save_scenario(const Scenario& scenario, const fs::path& dir) {
    fs::create_directories(dir);

    json doc;
    doc["name"] = scenario.name;
    if (!scenario.description.empty()) doc["description"] = scenario.description;
    doc["dt_s"] = scenario.dt_s;
    doc["reservoirs"] = json::array();
    for (const Reservoir& r : scenario.network.reservoirs) {
        doc["reservoirs"].push_back(reservoir_to_json(r));
    }
    doc["stages"] = json::array();
    for (const Stage& s : scenario.network.stages) doc["stages"].push_back(stage_to_json(s));
    doc["grid"] = json{{"import_max_w", scenario.network.grid_import_max_w},
                       {"export_max_w", scenario.network.grid_export_max_w}};

    write_timeseries_csv(dir / "load.csv", scenario.load_w);
    write_timeseries_csv(dir / "renewable.csv", scenario.renewable_w);
    json series{{"load", "load.csv"}, {"renewable", "renewable.csv"}};
    if (!scenario.natural_inflows.empty()) {
        json inflows = json::object();
        for (const auto& [id, ts] : scenario.natural_inflows) {
            const std::string file = "inflow_" + id + ".csv";
            write_timeseries_csv(dir / file, ts);
            inflows[id] = file;
        }
        series["inflows"] = inflows;
    }
    doc["series"] = series;

    if (scenario.weights) doc["weights"] = weights_to_json(*scenario.weights);
    if (scenario.search_space) doc["search_space"] = space_to_json(*scenario.search_space);
    if (!scenario.reference_energy_gwh.empty()) {
        doc["reference_energy_gwh"] = scenario.reference_energy_gwh;
    }

    const fs::path out_path = dir / "scenario.json";
    open_output(out_path) << doc.dump(2) << "\n";
    return out_path;
}

const std::vector<LakeInfo>& mountain_lake_table() {
    // Elevations, distances, and areas of the case-study lakes. Pine Lake's
    // elevation is stored as 185.35 m: the published head of 72.82 m fixes it
    // to two decimals while the elevation itself is printed at one.
    static const std::vector<LakeInfo> table = {
        {"mountain", "Mountain Lake", 258.17, 0.0, 3.7439e6, 11.2316e6, std::nullopt},
        {"ives", "Ives Lake", 231.41, 3.78, 2.0000e6, 3.000e6, 1.1171},
        {"rush", "Rush Lake", 195.16, 1.09, 1.1206e6, 3.922e6, 2.0353},
        {"pine", "Pine Lake", 185.35, 1.6, 3.6653e6, std::nullopt, std::nullopt},
        {"howe", "Howe Lake", 211.52, 2.73, 0.7629e6, std::nullopt, std::nullopt},
        {"superior", "Lake Superior", 183.52, 3.06, 8.6e10, std::nullopt, std::nullopt},
    };
    return table;
}

namespace {

const LakeInfo& lake_info(const std::string& id) {
    for (const LakeInfo& lake : mountain_lake_table()) {
        if (lake.id == id) return lake;
    }
    throw std::invalid_argument("unknown lake '" + id + "'");
}

Reservoir lake_reservoir(const std::string& id) {
    const LakeInfo& info = lake_info(id);
    Reservoir r;
    r.id = info.id;
    r.name = info.name;
    r.elevation_m = info.elevation_m;
    r.surface_area_m2 = info.surface_area_m2;
    r.volume_max_m3 = info.storage_volume_m3.value_or(0.0);
    return r;
}

} // namespace

Scenario bundled_mountain_lake_scenario(bool include_superior) {
    // Mountain Lake starts full; the terminal lakes start empty so a run
    // begins with the whole storage budget at the top of the cascade.
    Reservoir mountain = lake_reservoir("mountain");
    mountain.volume_init_m3 = mountain.volume_max_m3;
    Reservoir rush = lake_reservoir("rush");
    Reservoir ives = lake_reservoir("ives");

    ConfigTemplate tmpl;
    tmpl.grid_import_max_w = 10.0e6;
    tmpl.grid_export_max_w = 10.0e6;
    tmpl.branches.push_back({mountain, rush, lake_info("rush").distance_km, StageDefaults{}});
    tmpl.branches.push_back({mountain, ives, lake_info("ives").distance_km, StageDefaults{}});

    CandidateConfig candidate;
    candidate.n_intermediate = {2, 3};
    candidate.intermediate_volume_max_m3 = StageDefaults{}.volume_max_m3;
    candidate.q_turbine_max_m3s = StageDefaults{}.q_turbine_max_m3s;
    candidate.p_pump_max_w = StageDefaults{}.p_pump_max_w;

    Scenario scenario;
    scenario.network = instantiate_config(tmpl, candidate);
    scenario.name = include_superior ? "mountain-lake-superior" : "mountain-lake";
    scenario.description =
        "Mountain Lake cascade: a 2-intermediate branch to Rush Lake and a "
        "3-intermediate branch to Ives Lake, 24 h of flat 1 MW load.";
    scenario.dt_s = 3600.0;
    scenario.load_w = zero_series(24, scenario.dt_s, SeriesUnit::watts);
    std::fill(scenario.load_w.values.begin(), scenario.load_w.values.end(), 1.0e6);
    scenario.renewable_w = zero_series(24, scenario.dt_s, SeriesUnit::watts);
    scenario.weights = FitnessWeights{};
    scenario.search_space = SearchSpace{{{1, 2}, {2, 3}},
                                        {0.05e6, 0.1e6},
                                        {5.0, 10.0},
                                        {2.0e6, 5.0e6}};
    scenario.reference_energy_gwh = {{"rush", *lake_info("rush").reference_energy_gwh},
                                     {"ives", *lake_info("ives").reference_energy_gwh}};

    if (include_superior) {
        const LakeInfo& info = lake_info("superior");
        Reservoir superior;
        superior.id = info.id;
        superior.name = info.name;
        superior.elevation_m = info.elevation_m;
        superior.surface_area_m2 = info.surface_area_m2;
        superior.volume_min_m3 = -kUnboundedVolumeM3; // unlimited sink/source
        superior.volume_max_m3 = kUnboundedVolumeM3;
        scenario.network.reservoirs.push_back(superior);

        Stage outlet;
        outlet.id = "superior_s1";
        outlet.upper_id = "rush";
        outlet.lower_id = "superior";
        outlet.head_m = derive_head(rush.elevation_m, superior.elevation_m);
        outlet.distance_km = info.distance_km - lake_info("rush").distance_km;
        outlet.q_turbine_min_m3s = StageDefaults{}.q_turbine_min_m3s;
        outlet.q_turbine_max_m3s = candidate.q_turbine_max_m3s;
        outlet.p_pump_max_w = candidate.p_pump_max_w;
        scenario.network.stages.push_back(outlet);
    }
    return scenario;
}

std::vector<std::string> bundled_scenario_names() {
    return {"mountain-lake", "mountain-lake-superior"};
}

Scenario resolve_scenario(const std::string& path_or_bundled) {
    const std::string prefix = "bundled:";
    if (path_or_bundled.rfind(prefix, 0) == 0) {
        const std::string name = path_or_bundled.substr(prefix.size());
        if (name == "mountain-lake") return bundled_mountain_lake_scenario(false);
        if (name == "mountain-lake-superior") return bundled_mountain_lake_scenario(true);
        std::ostringstream msg;
        msg << "unknown bundled scenario '" << name << "'; available:";
        for (const std::string& known : bundled_scenario_names()) msg << " " << known;
        throw ParseError(msg.str());
    }
    return load_scenario(path_or_bundled);
}

std::vector<fs::path> write_results(const CascadeNetwork& network, const RunResult& result,
                                    const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const NetworkIndex index = build_index(network);
    (void)index; // alignment is positional; the index is built to assert ids resolve

    const fs::path steps_path = out_dir / "steps.csv";
    {
        std::ofstream out = open_output(steps_path);
        out << "step,load_w,renewable_w,grid_import_w,grid_export_w,unserved_w,curtailed_w";
        for (const Stage& s : network.stages) {
            out << "," << s.id << "_q_turbine_m3s"
                << "," << s.id << "_q_pump_m3s"
                << "," << s.id << "_p_gen_w"
                << "," << s.id << "_p_pump_w";
        }
        out << "\n";
        for (const StepRecord& record : result.records) {
            out << record.step_index << "," << format_double(record.load_w) << ","
                << format_double(record.renewable_w) << "," << format_double(record.grid_import_w)
                << "," << format_double(record.grid_export_w) << ","
                << format_double(record.unserved_w) << "," << format_double(record.curtailed_w);
            for (const StageStep& ss : record.stages) {
                out << "," << format_double(ss.q_turbine_m3s) << "," << format_double(ss.q_pump_m3s)
                    << "," << format_double(ss.p_gen_w) << "," << format_double(ss.p_pump_w);
            }
            out << "\n";
        }
    }

    const fs::path reservoirs_path = out_dir / "reservoirs.csv";
    {
        std::ofstream out = open_output(reservoirs_path);
        out << "step,reservoir_id,volume_m3,spilled_m3_cum,evap_leak_m3_cum,natural_inflow_m3s\n";
        for (const StepRecord& record : result.records) {
            for (std::size_t r = 0; r < record.reservoirs.size(); ++r) {
                const ReservoirStep& rs = record.reservoirs[r];
                out << record.step_index << "," << network.reservoirs[r].id << ","
                    << format_double(rs.state.volume_m3) << ","
                    << format_double(rs.state.spilled_m3_cum) << ","
                    << format_double(rs.state.evap_leak_m3_cum) << ","
                    << format_double(rs.natural_inflow_m3s) << "\n";
            }
        }
    }

    const fs::path summary_path = out_dir / "summary.json";
    {
        const RunSummary& s = result.summary;
        json doc{{"n_steps", s.n_steps},
                 {"dt_s", s.dt_s},
                 {"load_wh", s.load_wh},
                 {"renewable_wh", s.renewable_wh},
                 {"generated_wh", s.generated_wh},
                 {"pumped_wh", s.pumped_wh},
                 {"imported_wh", s.imported_wh},
                 {"exported_wh", s.exported_wh},
                 {"unserved_wh", s.unserved_wh},
                 {"curtailed_wh", s.curtailed_wh},
                 {"spilled_m3", s.spilled_m3},
                 {"evap_leak_m3", s.evap_leak_m3}};
        json volumes = json::object();
        for (std::size_t r = 0; r < network.reservoirs.size(); ++r) {
            volumes[network.reservoirs[r].id] = s.final_volume_m3[r];
        }
        doc["final_volume_m3"] = volumes;
        open_output(summary_path) << doc.dump(2) << "\n";
    }

    return {steps_path, reservoirs_path, summary_path};
}

std::vector<fs::path> write_optimize_results(const SearchSpace& space,
                                             const OptimizeResult& result,
                                             const fs::path& out_dir) {
    fs::create_directories(out_dir);

    const fs::path log_path = out_dir / "evaluations.csv";
    {
        std::ofstream out = open_output(log_path);
        out << "evaluation";
        for (std::size_t b = 0; b < space.n_intermediate.size(); ++b) {
            out << ",n_intermediate_" << b;
        }
        out << ",intermediate_volume_max_m3,q_turbine_max_m3s,p_pump_max_w,fitness\n";
        for (std::size_t i = 0; i < result.log.size(); ++i) {
            const Evaluation& e = result.log[i];
            out << i;
            for (int n : e.config.n_intermediate) out << "," << n;
            out << "," << format_double(e.config.intermediate_volume_max_m3) << ","
                << format_double(e.config.q_turbine_max_m3s) << ","
                << format_double(e.config.p_pump_max_w) << "," << format_double(e.fitness) << "\n";
        }
    }

    const fs::path best_path = out_dir / "best_config.json";
    {
        json doc{{"best",
                  {{"n_intermediate", result.best.n_intermediate},
                   {"intermediate_volume_max_m3", result.best.intermediate_volume_max_m3},
                   {"q_turbine_max_m3s", result.best.q_turbine_max_m3s},
                   {"p_pump_max_w", result.best.p_pump_max_w}}},
                 {"best_fitness", result.best_fitness},
                 {"exhaustive", result.exhaustive},
                 {"evaluations", result.log.size()}};
        open_output(best_path) << doc.dump(2) << "\n";
    }

    return {log_path, best_path};
}

namespace {

double parse_override_double(const std::string& key, const std::string& value) {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size() || !std::isfinite(out)) {
        throw OverrideError("override '" + key + "': cannot parse '" + value + "' as a number");
    }
    return out;
}

std::vector<std::string> split_path(const std::string& key) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = key.find('.', start);
        if (dot == std::string::npos) {
            parts.push_back(key.substr(start));
            return parts;
        }
        parts.push_back(key.substr(start, dot - start));
        start = dot + 1;
    }
}

[[noreturn]] void unknown_path(const std::string& key) {
    throw OverrideError("unknown override path '" + key + "'");
}

void rederive_heads(CascadeNetwork& network) {
    NetworkIndex index = build_index(network);
    for (std::size_t si = 0; si < network.stages.size(); ++si) {
        network.stages[si].head_m =
            derive_head(network.reservoirs[index.stage_upper[si]].elevation_m,
                        network.reservoirs[index.stage_lower[si]].elevation_m);
    }
}

void override_reservoir(Scenario& scenario, const std::string& key, const std::string& id,
                        const std::string& field, const std::string& value) {
    for (Reservoir& r : scenario.network.reservoirs) {
        if (r.id != id) continue;
        if (field == "natural_inflow_id") {
            r.natural_inflow_id = value;
        } else if (field == "elevation_m") {
            r.elevation_m = parse_override_double(key, value);
            rederive_heads(scenario.network);
        } else if (field == "surface_area_m2") {
            r.surface_area_m2 = parse_override_double(key, value);
        } else if (field == "volume_min_m3") {
            r.volume_min_m3 = parse_override_double(key, value);
        } else if (field == "volume_max_m3") {
            r.volume_max_m3 = parse_override_double(key, value);
        } else if (field == "volume_init_m3") {
            r.volume_init_m3 = parse_override_double(key, value);
        } else if (field == "loss_alpha") {
            r.loss_alpha = parse_override_double(key, value);
        } else {
            unknown_path(key);
        }
        return;
    }
    throw OverrideError("override '" + key + "': no reservoir with id '" + id + "'");
}

void override_stage(Scenario& scenario, const std::string& key, const std::string& id,
                    const std::string& field, const std::string& value) {
    for (Stage& s : scenario.network.stages) {
        if (s.id != id) continue;
        if (field == "distance_km") {
            s.distance_km = parse_override_double(key, value);
        } else if (field == "eta_turbine") {
            s.eta_turbine = parse_override_double(key, value);
        } else if (field == "eta_pump") {
            s.eta_pump = parse_override_double(key, value);
        } else if (field == "q_turbine_min_m3s") {
            s.q_turbine_min_m3s = parse_override_double(key, value);
        } else if (field == "q_turbine_max_m3s") {
            s.q_turbine_max_m3s = parse_override_double(key, value);
        } else if (field == "p_pump_max_w") {
            s.p_pump_max_w = parse_override_double(key, value);
        } else {
            unknown_path(key); // head_m is derived from elevations, never set directly
        }
        return;
    }
    throw OverrideError("override '" + key + "': no stage with id '" + id + "'");
}

void override_weights(Scenario& scenario, const std::string& key, const std::string& field,
                      const std::string& value) {
    if (!scenario.weights) scenario.weights = FitnessWeights{};
    FitnessWeights& w = *scenario.weights;
    if (field == "w_unserved") {
        w.w_unserved = parse_override_double(key, value);
    } else if (field == "w_import") {
        w.w_import = parse_override_double(key, value);
    } else if (field == "w_spill") {
        w.w_spill = parse_override_double(key, value);
    } else if (field == "w_export_credit") {
        w.w_export_credit = parse_override_double(key, value);
    } else if (field == "w_reservoir") {
        w.w_reservoir = parse_override_double(key, value);
    } else {
        unknown_path(key);
    }
}

} // namespace

void apply_override(Scenario& scenario, const std::string& dotted_key, const std::string& value) {
    const std::vector<std::string> parts = split_path(dotted_key);

    if (parts.size() == 1) {
        if (parts[0] == "name") {
            scenario.name = value;
        } else if (parts[0] == "description") {
            scenario.description = value;
        } else if (parts[0] == "dt_s") {
            const double dt = parse_override_double(dotted_key, value);
            if (!(dt > 0.0)) throw OverrideError("override 'dt_s': must be positive");
            scenario.dt_s = dt;
            scenario.load_w.step_seconds = dt;
            scenario.renewable_w.step_seconds = dt;
            for (auto& [id, series] : scenario.natural_inflows) series.step_seconds = dt;
        } else {
            unknown_path(dotted_key);
        }
        return;
    }
    if (parts.size() == 2 && parts[0] == "grid") {
        if (parts[1] == "import_max_w") {
            scenario.network.grid_import_max_w = parse_override_double(dotted_key, value);
        } else if (parts[1] == "export_max_w") {
            scenario.network.grid_export_max_w = parse_override_double(dotted_key, value);
        } else {
            unknown_path(dotted_key);
        }
        return;
    }
    if (parts.size() == 2 && parts[0] == "weights") {
        override_weights(scenario, dotted_key, parts[1], value);
        return;
    }
    if (parts.size() == 3 && parts[0] == "reservoirs") {
        override_reservoir(scenario, dotted_key, parts[1], parts[2], value);
        return;
    }
    if (parts.size() == 3 && parts[0] == "stages") {
        override_stage(scenario, dotted_key, parts[1], parts[2], value);
        return;
    }
    unknown_path(dotted_key);
}

void apply_override_expr(Scenario& scenario, const std::string& expr) {
    const std::size_t eq = expr.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw OverrideError("override '" + expr + "' is not of the form key=value");
    }
    apply_override(scenario, expr.substr(0, eq), expr.substr(eq + 1));
}

std::vector<BranchEnergy> estimate_branch_energies(const Scenario& scenario,
                                                   const PhysicalConstants& constants) {
    const CascadeNetwork& network = scenario.network;
    const NetworkIndex index = build_index(network);
    const std::size_t n_res = network.reservoirs.size();

    std::vector<bool> has_parent(n_res, false);
    std::vector<std::vector<int>> stages_below(n_res);
    for (std::size_t si = 0; si < network.stages.size(); ++si) {
        has_parent[index.stage_lower[si]] = true;
        stages_below[index.stage_upper[si]].push_back(static_cast<int>(si));
    }

    std::vector<BranchEnergy> out;
    for (std::size_t root = 0; root < n_res; ++root) {
        if (has_parent[root] || stages_below[root].empty()) continue;
        const Reservoir& ur = network.reservoirs[root];

        std::vector<int> stack{static_cast<int>(root)};
        while (!stack.empty()) {
            const int at = stack.back();
            stack.pop_back();
            if (stages_below[at].empty()) {
                const Reservoir& leaf = network.reservoirs[at];
                BranchEnergy be;
                be.lake_id = leaf.id;
                be.head_m = derive_head(ur.elevation_m, leaf.elevation_m);
                be.ur_volume_m3 = ur.volume_init_m3;
                be.derived_gwh =
                    be.ur_volume_m3 > 0.0 && be.head_m > 0.0
                        ? potential_energy(1.0, constants.rho, constants.g, be.head_m,
                                           be.ur_volume_m3)
                              .gwh
                        : 0.0;
                auto it = scenario.reference_energy_gwh.find(leaf.id);
                if (it != scenario.reference_energy_gwh.end()) be.reference_gwh = it->second;
                out.push_back(std::move(be));
                continue;
            }
            for (auto it = stages_below[at].rbegin(); it != stages_below[at].rend(); ++it) {
                stack.push_back(index.stage_lower[*it]);
            }
        }
    }
    return out;
}

} // namespace cpmhs
