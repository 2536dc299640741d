// rtpg command line: solve equilibrium coefficients, simulate time zones,
// run ensembles and parameter sweeps, and emit plot-ready CSV/JSON.
//
// Subcommands: solve | simulate | ensemble | sweep
// Exit codes:  0 success, 1 runtime failure, 2 invalid configuration.
//
// Configuration comes from a flat key = value file (--config) with
// command-line overrides; defaults reproduce the reference setup
// (gamma 1.2, kappa 1, alpha 1, g_bar 30, sigma_ii 4, sigma 0, omega_bar 0,
// omega std 2, horizon 5).

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rtpg/rtpg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rtpg;

namespace {

// ---------------------------------------------------------------------------
// Configuration

struct RunConfig {
    int n = 10;
    int horizon = 5;
    std::string behavior = "S";
    std::string info = "P";
    std::vector<double> gamma{1.2};
    std::vector<double> kappa{1.0};
    std::vector<double> alpha{1.0};
    double g_bar = 30.0;
    double sigma = 0.0;       // correlation coefficient, off-diagonal / diagonal
    double sigma_diag = 4.0;  // common diagonal variance
    std::vector<double> omega_bar{0.0};
    std::vector<double> omega_std{2.0};
    std::uint64_t seed = 1;
    int runs = 100;
    int threads = 1;
    double graph_width = 3.0;
    double graph_height = 5.0;
    double graph_radius = 2.0;
    std::uint64_t graph_seed = 1;
    std::string sweep;              // omega_bar | sigma | gamma | n | behavior | info
    std::vector<std::string> sweep_values;
    std::string format = "csv";    // csv | json
    std::string out;               // output directory; stdout when empty
};

std::vector<double> parse_double_list(const std::string& text, const std::string& key) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            values.push_back(std::stod(item, &used));
            while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used])))
                ++used;
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("config: cannot parse '" + item + "' for key '" + key + "'");
        }
    }
    if (values.empty()) throw ConfigError("config: empty value for key '" + key + "'");
    return values;
}

std::vector<std::string> parse_string_list(const std::string& text) {
    std::vector<std::string> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto begin = item.find_first_not_of(" \t");
        const auto end = item.find_last_not_of(" \t");
        if (begin == std::string::npos) continue;
        values.push_back(item.substr(begin, end - begin + 1));
    }
    return values;
}

void apply_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    try {
        if (key == "n") cfg.n = std::stoi(value);
        else if (key == "horizon") cfg.horizon = std::stoi(value);
        else if (key == "behavior") cfg.behavior = value;
        else if (key == "info") cfg.info = value;
        else if (key == "gamma") cfg.gamma = parse_double_list(value, key);
        else if (key == "kappa") cfg.kappa = parse_double_list(value, key);
        else if (key == "alpha") cfg.alpha = parse_double_list(value, key);
        else if (key == "g_bar") cfg.g_bar = std::stod(value);
        else if (key == "sigma") cfg.sigma = std::stod(value);
        else if (key == "sigma_diag") cfg.sigma_diag = std::stod(value);
        else if (key == "omega_bar") cfg.omega_bar = parse_double_list(value, key);
        else if (key == "omega_std") cfg.omega_std = parse_double_list(value, key);
        else if (key == "seed") cfg.seed = std::stoull(value);
        else if (key == "runs") cfg.runs = std::stoi(value);
        else if (key == "threads") cfg.threads = std::stoi(value);
        else if (key == "graph_width") cfg.graph_width = std::stod(value);
        else if (key == "graph_height") cfg.graph_height = std::stod(value);
        else if (key == "graph_radius") cfg.graph_radius = std::stod(value);
        else if (key == "graph_seed") cfg.graph_seed = std::stoull(value);
        else if (key == "sweep") cfg.sweep = value;
        else if (key == "sweep_values") cfg.sweep_values = parse_string_list(value);
        else if (key == "format") cfg.format = value;
        else if (key == "out") cfg.out = value;
        else throw ConfigError("config: unknown key '" + key + "'");
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError("config: cannot parse value '" + value + "' for key '" + key + "'");
    }
}

void load_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw ConfigError("config: malformed line " + std::to_string(lineno) + " in " + path);
            continue;
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        apply_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

Scenario build_scenario(const RunConfig& cfg) {
    if (cfg.n < 1) throw ConfigError("config: n must be >= 1");
    if (cfg.horizon < 1) throw ConfigError("config: horizon must be >= 1");
    if (cfg.format != "csv" && cfg.format != "json")
        throw ConfigError("config: format must be csv or json");
    Scenario s;
    try {
        s.prior = PreferencePrior::sigma_correlated(cfg.n, {cfg.sigma, cfg.sigma_diag}, cfg.g_bar);
        s.policy.gamma = PerSlot(cfg.gamma);
        s.policy.kappa = PerSlot(cfg.kappa);
        s.policy.alpha = PerSlot(cfg.alpha);
        s.forecast.omega_bar = PerSlot(cfg.omega_bar);
        s.forecast.omega_std = PerSlot(cfg.omega_std);
        s.horizon = cfg.horizon;
        s.behavior = behavior_from_tag(cfg.behavior);
        s.info = info_from_tag(cfg.info);
        s.seed = cfg.seed;
        if (s.info == InfoModel::ActionSharing) {
            Rng rng(cfg.graph_seed);
            s.graph = CommunicationGraph::random_geometric(cfg.n, cfg.graph_width,
                                                           cfg.graph_height, cfg.graph_radius, rng);
        }
        s.validate();
    } catch (const InvalidParameter& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return s;
}

// ---------------------------------------------------------------------------
// Output helpers

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(12) << (v + 0.0);  // normalizes -0
    return os.str();
}

/// One output table: a header row plus string cells, mirrored to JSON.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void write_csv(std::ostream& out) const {
        for (std::size_t c = 0; c < header.size(); ++c)
            out << header[c] << (c + 1 < header.size() ? "," : "\n");
        for (const auto& row : rows)
            for (std::size_t c = 0; c < row.size(); ++c)
                out << row[c] << (c + 1 < row.size() ? "," : "\n");
    }

    json to_json() const {
        json rows_json = json::array();
        for (const auto& row : rows) {
            json obj = json::object();
            for (std::size_t c = 0; c < header.size(); ++c) obj[header[c]] = row[c];
            rows_json.push_back(std::move(obj));
        }
        return rows_json;
    }
};

/// Write a table to <out>/<name>.<ext>, or to stdout when no directory given.
void emit(const RunConfig& cfg, const std::string& name, const Table& table) {
    const bool as_json = cfg.format == "json";
    if (cfg.out.empty()) {
        if (as_json)
            std::cout << json{{name, table.to_json()}}.dump(2) << "\n";
        else
            table.write_csv(std::cout);
        return;
    }
    fs::create_directories(cfg.out);
    const fs::path path = fs::path(cfg.out) / (name + (as_json ? ".json" : ".csv"));
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    if (as_json)
        out << json{{name, table.to_json()}}.dump(2) << "\n";
    else
        table.write_csv(out);
    std::cerr << "wrote " << path.string() << "\n";
}

void export_graph(const RunConfig& cfg, const Scenario& s) {
    if (!s.graph || cfg.out.empty()) return;
    fs::create_directories(cfg.out);
    std::ofstream edges(fs::path(cfg.out) / "graph_edges.csv");
    s.graph->write_edges_csv(edges);
    std::ofstream nodes(fs::path(cfg.out) / "graph_nodes.csv");
    s.graph->write_nodes_csv(nodes);
    std::cerr << "wrote " << (fs::path(cfg.out) / "graph_edges.csv").string() << ", "
              << (fs::path(cfg.out) / "graph_nodes.csv").string() << "\n";
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_solve(const RunConfig& cfg) {
    const Scenario s = build_scenario(cfg);
    const auto constants = s.constants_at(0);
    std::vector<Matrix> weights;
    for (int i = 0; i < s.n(); ++i) weights.push_back(initial_weights(s.prior, i));
    const auto coeffs = solve_bne(constants, weights, s.forecast.omega_bar.at(0));

    Table coeff_table;
    coeff_table.header = {"agent", "r"};
    for (int c = 0; c < s.n(); ++c) coeff_table.header.push_back("v_g" + std::to_string(c + 1));
    coeff_table.header.push_back("v_gbar");
    for (int i = 0; i < s.n(); ++i) {
        std::vector<std::string> row{std::to_string(i + 1), fmt(coeffs.r[i])};
        for (int c = 0; c <= s.n(); ++c) row.push_back(fmt(coeffs.v(i, c)));
        coeff_table.rows.push_back(std::move(row));
    }
    emit(cfg, "solve", coeff_table);

    Table closed;
    closed.header = {"behavior", "info_regime", "a", "b"};
    const auto priv = closed_form_private(constants, cfg.sigma, s.n());
    closed.rows.push_back({tag(s.behavior), tag(InfoRegime::Private), fmt(priv.a), fmt(priv.b)});
    try {
        const auto comp = closed_form_complete(constants, s.n());
        closed.rows.push_back(
            {tag(s.behavior), tag(InfoRegime::Complete), fmt(comp.a), fmt(comp.b)});
    } catch (const InvalidParameter&) {
        // degenerate lambda * rho = 1; private row is still valid
    }
    emit(cfg, "closed_form", closed);

    std::cerr << "solved n=" << s.n() << " behavior=" << tag(s.behavior)
              << " residual=" << coeffs.residual << "\n";
    return 0;
}

int cmd_simulate(const RunConfig& cfg) {
    const Scenario s = build_scenario(cfg);
    const SimulationTrace trace = run_time_zone(s);
    Table t;
    t.header = {"slot", "agent", "consumption", "total", "price", "utility", "U", "NR", "W"};
    for (std::size_t h = 0; h < trace.slots.size(); ++h) {
        const SlotRecord& rec = trace.slots[h];
        for (int i = 0; i < s.n(); ++i)
            t.rows.push_back({std::to_string(h + 1), std::to_string(i + 1),
                              fmt(rec.consumption[i]), fmt(rec.total), fmt(rec.price),
                              fmt(rec.utilities[i]), fmt(rec.aggregate_utility),
                              fmt(rec.net_revenue), fmt(rec.welfare)});
    }
    emit(cfg, "trace", t);
    export_graph(cfg, s);
    if (trace.negative_consumptions > 0)
        std::cerr << "note: " << trace.negative_consumptions
                  << " negative consumption values (affine strategies are not clamped)\n";
    return 0;
}

/// Analytic predictions for one slot of a scenario, where defined: private
/// regime for P; broadcast reaches the complete regime from slot 2 onwards;
/// no closed form under action sharing.
std::optional<AnalyticReport> slot_report(const Scenario& s, const RunConfig& cfg, int slot) {
    InfoRegime regime;
    if (s.info == InfoModel::Private)
        regime = InfoRegime::Private;
    else if (s.info == InfoModel::Broadcast)
        regime = slot == 0 ? InfoRegime::Private : InfoRegime::Complete;
    else
        return std::nullopt;
    return analytic_report(s.behavior, regime, s.policy.gamma.at(slot), s.policy.kappa.at(slot),
                           s.policy.alpha.at(slot), cfg.sigma, cfg.sigma_diag, s.n(),
                           s.prior.g_bar, s.forecast.omega_bar.at(slot));
}

void ensemble_rows(Table& t, const RunConfig& cfg, const Scenario& s,
                   const std::vector<std::string>& prefix) {
    const EnsembleStats stats = ensemble(s, cfg.runs, cfg.threads);
    for (int h = 0; h < s.horizon; ++h) {
        const SlotStats& slot = stats.slots[static_cast<std::size_t>(h)];
        const auto report = slot_report(s, cfg, h);
        const auto push = [&](const std::string& metric, const RunningStat& st,
                              std::optional<double> analytic) {
            std::vector<std::string> row = prefix;
            row.push_back(std::to_string(h + 1));
            row.push_back(metric);
            row.push_back(fmt(st.mean));
            row.push_back(fmt(st.variance()));
            row.push_back(fmt(st.std_error()));
            row.push_back(std::to_string(stats.runs));
            row.push_back(analytic ? fmt(*analytic) : "");
            t.rows.push_back(std::move(row));
        };
        push("demand_per_capita", slot.demand,
             report ? std::optional<double>(report->expected_demand_per_capita) : std::nullopt);
        // the demand variance row reports the across-run variance as its value
        {
            std::vector<std::string> row = prefix;
            row.push_back(std::to_string(h + 1));
            row.push_back("demand_variance");
            row.push_back(fmt(slot.demand.variance()));
            row.push_back("");
            row.push_back("");
            row.push_back(std::to_string(stats.runs));
            row.push_back(report ? fmt(report->demand_variance) : "");
            t.rows.push_back(std::move(row));
        }
        push("utility_per_capita", slot.utility,
             report && report->expected_utility_per_capita
                 ? std::optional<double>(*report->expected_utility_per_capita)
                 : std::nullopt);
        push("welfare_per_capita", slot.welfare,
             report && report->expected_welfare_per_capita
                 ? std::optional<double>(*report->expected_welfare_per_capita)
                 : std::nullopt);
    }
}

int cmd_ensemble(const RunConfig& cfg) {
    const Scenario s = build_scenario(cfg);
    Table t;
    t.header = {"slot", "metric", "mean", "variance", "std_error", "runs", "analytic"};
    ensemble_rows(t, cfg, s, {});
    emit(cfg, "ensemble", t);
    export_graph(cfg, s);
    return 0;
}

int cmd_sweep(const RunConfig& cfg) {
    static const std::vector<std::string> axes{"omega_bar", "sigma", "gamma",
                                               "n",         "behavior", "info"};
    if (std::find(axes.begin(), axes.end(), cfg.sweep) == axes.end())
        throw ConfigError("sweep: axis must be one of omega_bar|sigma|gamma|n|behavior|info");
    if (cfg.sweep_values.empty()) throw ConfigError("sweep: no sweep_values given");

    Table t;
    t.header = {"axis", "value", "slot", "metric", "mean", "variance", "std_error", "runs",
                "analytic"};
    for (const std::string& value : cfg.sweep_values) {
        RunConfig point = cfg;  // same master seed per point: common random numbers
        apply_key(point, cfg.sweep, value);
        const Scenario s = build_scenario(point);
        ensemble_rows(t, point, s, {cfg.sweep, value});
    }
    emit(cfg, "sweep", t);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rtpg: consumption-game simulator for real-time pricing"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_path;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "flat key = value configuration file");
        sub->add_option("--seed", cfg.seed, "master RNG seed");
        sub->add_option("--runs", cfg.runs, "ensemble run count");
        sub->add_option("--out", cfg.out, "output directory (stdout when omitted)");
        sub->add_option("--format", cfg.format, "csv | json");
        sub->add_option("--n", cfg.n, "population size");
        sub->add_option("--horizon", cfg.horizon, "slots in the time zone");
        sub->add_option("--behavior", cfg.behavior, "S | U | W");
        sub->add_option("--info", cfg.info, "P | AS | B");
        sub->add_option("--gamma", cfg.gamma, "price slope (per-slot list allowed)")->delimiter(',');
        sub->add_option("--kappa", cfg.kappa, "cost coefficient (per-slot list allowed)")->delimiter(',');
        sub->add_option("--alpha", cfg.alpha, "utility decay (per-slot list allowed)")->delimiter(',');
        sub->add_option("--g-bar", cfg.g_bar, "mean preference");
        sub->add_option("--sigma", cfg.sigma, "preference correlation coefficient in [0,1]");
        sub->add_option("--sigma-diag", cfg.sigma_diag, "preference variance (diagonal)");
        sub->add_option("--omega-bar", cfg.omega_bar, "renewable mean (per-slot list allowed)")->delimiter(',');
        sub->add_option("--omega-std", cfg.omega_std, "renewable std (per-slot list allowed)")->delimiter(',');
        sub->add_option("--threads", cfg.threads, "ensemble worker threads");
        sub->add_option("--graph-width", cfg.graph_width, "geometric graph width");
        sub->add_option("--graph-height", cfg.graph_height, "geometric graph height");
        sub->add_option("--graph-radius", cfg.graph_radius, "geometric graph connect radius");
        sub->add_option("--graph-seed", cfg.graph_seed, "geometric graph seed");
    };

    CLI::App* solve = app.add_subcommand("solve", "equilibrium strategy coefficients");
    CLI::App* simulate = app.add_subcommand("simulate", "one seeded time-zone trace");
    CLI::App* ens = app.add_subcommand("ensemble", "seeded ensemble statistics");
    CLI::App* sweep = app.add_subcommand("sweep", "ensemble statistics along a parameter axis");
    for (CLI::App* sub : {solve, simulate, ens, sweep}) add_common(sub);
    sweep->add_option("--sweep", cfg.sweep, "axis: omega_bar|sigma|gamma|n|behavior|info");
    sweep->add_option("--sweep-values", cfg.sweep_values, "comma/space separated values")->delimiter(',');

    try {
        // precedence: defaults < config file < command line.  The file is
        // loaded before CLI11 assigns the parsed flag values over it.
        for (int i = 1; i < argc; ++i) {
            const std::string arg = argv[i];
            if (arg == "--config" && i + 1 < argc)
                load_config_file(cfg, argv[i + 1]);
            else if (arg.rfind("--config=", 0) == 0)
                load_config_file(cfg, arg.substr(9));
        }
        try {
            app.parse(argc, argv);
        } catch (const CLI::CallForHelp& e) {
            return app.exit(e);
        } catch (const CLI::ParseError& e) {
            app.exit(e);
            return 2;
        }

        if (solve->parsed()) return cmd_solve(cfg);
        if (simulate->parsed()) return cmd_simulate(cfg);
        if (ens->parsed()) return cmd_ensemble(cfg);
        if (sweep->parsed()) return cmd_sweep(cfg);
        std::cerr << "no subcommand\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const InvalidParameter& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
