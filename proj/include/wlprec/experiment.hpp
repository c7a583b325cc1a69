#pragma once

// Experiment runner behind the command-line tool: scenario configs, figure
// presets, validation, and CSV/JSON output with a JSON sidecar that records
// the fully resolved plan.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "wlprec/error.hpp"
#include "wlprec/precoding.hpp"
#include "wlprec/simulate.hpp"

namespace wlprec {

enum class Preset { Fig1, Fig2, Fig3, Fig4, Fig5 };
enum class OutputFormat { Csv, Json };

inline std::optional<Preset> parse_preset(std::string_view name) {
    if (name == "fig1") return Preset::Fig1;
    if (name == "fig2") return Preset::Fig2;
    if (name == "fig3") return Preset::Fig3;
    if (name == "fig4") return Preset::Fig4;
    if (name == "fig5") return Preset::Fig5;
    return std::nullopt;
}

inline std::optional<SelectionMethod> parse_selection(std::string_view name) {
    if (name == "none") return SelectionMethod::None;
    if (name == "sus") return SelectionMethod::Sus;
    if (name == "susom") return SelectionMethod::Susom;
    return std::nullopt;
}

/// One SNR-swept curve of an experiment.
struct Curve {
    std::string label;
    ScenarioConfig scenario;
};

/// Selected-user counts against the pool size K_T.
struct CensusPlan {
    std::vector<Eigen::Index> antennas;
    std::vector<Eigen::Index> pool_sizes;
    std::vector<SelectionMethod> algorithms{SelectionMethod::Sus, SelectionMethod::Susom};
    double alpha = kDefaultAlpha;
    std::size_t trials = 1000;
    std::uint64_t seed = 1;
};

struct ExperimentPlan {
    std::vector<Curve> curves;
    std::optional<CensusPlan> census;
};

/// Command-line overrides applied on top of a preset or config file.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::optional<std::size_t> symbols;
    std::optional<double> alpha;
    std::optional<double> snr_min;
    std::optional<double> snr_max;
    std::optional<double> snr_step;
    std::optional<unsigned> threads;
};

struct ExperimentSpec {
    std::optional<Preset> preset;
    ExperimentPlan plan;  ///< used when no preset is given
    Overrides overrides;
    std::filesystem::path output_path = "results.csv";
    OutputFormat output_format = OutputFormat::Csv;
};

/// One output row; SER and rate are absent for census rows.
struct Row {
    std::string method;
    double x_value = 0.0;
    std::optional<double> avg_ser;
    std::optional<double> avg_sum_rate_bits;
    double avg_selected_users = 0.0;
    std::size_t n_trials = 0;
    std::uint64_t seed = 0;
};

inline const std::vector<std::string>& output_columns() {
    static const std::vector<std::string> cols{"method",   "x_value", "avg_ser", "avg_sum_rate_bits",
                                               "avg_selected_users", "n_trials", "seed"};
    return cols;
}

struct ExperimentOutcome {
    std::vector<Row> rows;
    std::size_t skipped = 0;
    std::size_t attempted = 0;

    double failure_rate() const {
        return attempted == 0 ? 0.0 : static_cast<double>(skipped) / static_cast<double>(attempted);
    }
};

inline std::vector<double> snr_range(double lo, double hi, double step) {
    std::vector<double> out;
    if (!(step > 0.0) || hi < lo) return out;
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) out.push_back(lo + step * static_cast<double>(i));
    return out;
}

// ---------------------------------------------------------------- presets

namespace detail {

inline Curve make_curve(std::string label, Method method, Eigen::Index users, std::size_t order = 4,
                        ConstellationKind kind = ConstellationKind::Pam) {
    Curve c;
    c.label = std::move(label);
    c.scenario.method = method;
    c.scenario.users = users;
    c.scenario.order = order;
    c.scenario.constellation = kind;
    c.scenario.snr_grid_db = snr_range(0.0, 40.0, 2.0);
    return c;
}

inline Curve with_selection(Curve c, SelectionMethod sel, Eigen::Index pool) {
    c.scenario.selection = sel;
    c.scenario.available_users = pool;
    return c;
}

}  // namespace detail

/// Desk-scale versions of the published setups: 1000 channels x 200 symbols,
/// M = 4, 4-PAM, SNR 0..40 dB in 2 dB steps.
inline ExperimentPlan preset_plan(Preset preset) {
    using detail::make_curve;
    using detail::with_selection;
    constexpr auto qam = ConstellationKind::SquareQam;
    ExperimentPlan plan;
    switch (preset) {
        case Preset::Fig1:
            for (Method m : kAllMethods) plan.curves.push_back(make_curve(std::string(method_name(m)), m, 4));
            break;
        case Preset::Fig2:
            for (Method m : {Method::WlMrt, Method::WlZf, Method::WlMmse, Method::WlMmseIter, Method::WlMslnr,
                             Method::Mrt, Method::Zf, Method::Mmse, Method::MmseIter, Method::Mslnr}) {
                plan.curves.push_back(make_curve(std::string(method_name(m)), m, 4));
            }
            plan.curves.push_back(make_curve("zf_qam16", Method::Zf, 2, 16, qam));
            plan.curves.push_back(make_curve("mmse_qam16", Method::Mmse, 2, 16, qam));
            break;
        case Preset::Fig3: {
            CensusPlan census;
            census.antennas = {2, 4};
            census.pool_sizes = {1, 2, 3, 5, 10, 20, 50, 100, 200, 500, 1000};
            plan.census = census;
            break;
        }
        case Preset::Fig4:
            for (Method m : {Method::Mrt, Method::Mslnr, Method::WlZf, Method::WlMmse, Method::WlMmseIter,
                             Method::WlMslnr}) {
                plan.curves.push_back(with_selection(make_curve("susom+" + std::string(method_name(m)), m, 0),
                                                     SelectionMethod::Susom, 100));
            }
            break;
        case Preset::Fig5:
            plan.curves.push_back(
                with_selection(make_curve("sus+mmse", Method::Mmse, 0), SelectionMethod::Sus, 100));
            plan.curves.push_back(
                with_selection(make_curve("sus+wl_mmse", Method::WlMmse, 0), SelectionMethod::Sus, 100));
            plan.curves.push_back(
                with_selection(make_curve("susom+wl_mmse", Method::WlMmse, 0), SelectionMethod::Susom, 100));
            plan.curves.push_back(with_selection(make_curve("sus+mmse_qam16", Method::Mmse, 0, 16, qam),
                                                 SelectionMethod::Sus, 100));
            break;
    }
    return plan;
}

inline void apply_overrides(ExperimentPlan& plan, const Overrides& o) {
    for (Curve& c : plan.curves) {
        ScenarioConfig& s = c.scenario;
        if (o.seed) s.seed = *o.seed;
        if (o.trials) s.n_channels = *o.trials;
        if (o.symbols) s.n_symbols = *o.symbols;
        if (o.alpha) s.alpha = *o.alpha;
        if (o.threads) s.threads = *o.threads;
        if (o.snr_min || o.snr_max || o.snr_step) {
            const double lo = o.snr_min.value_or(s.snr_grid_db.empty() ? 0.0 : s.snr_grid_db.front());
            const double hi = o.snr_max.value_or(s.snr_grid_db.empty() ? lo : s.snr_grid_db.back());
            const double step = o.snr_step.value_or(s.snr_grid_db.size() > 1 ? s.snr_grid_db[1] - s.snr_grid_db[0]
                                                                              : 1.0);
            s.snr_grid_db = snr_range(lo, hi, step);
        }
    }
    if (plan.census) {
        if (o.seed) plan.census->seed = *o.seed;
        if (o.trials) plan.census->trials = *o.trials;
        if (o.alpha) plan.census->alpha = *o.alpha;
    }
}

inline ExperimentPlan resolve_plan(const ExperimentSpec& spec) {
    ExperimentPlan plan = spec.preset ? preset_plan(*spec.preset) : spec.plan;
    apply_overrides(plan, spec.overrides);
    return plan;
}

// ---------------------------------------------------------------- validation

namespace detail {

inline void validate_scenario(const std::string& where, const ScenarioConfig& s, std::vector<std::string>& out) {
    auto add = [&](const std::string& msg) { out.push_back(where + msg); };
    if (s.antennas < 1) add("antennas: need at least one transmit antenna");
    if (!(s.alpha >= 0.0 && s.alpha < 1.0)) add("alpha: must lie in [0, 1), got " + std::to_string(s.alpha));
    if (s.snr_grid_db.empty()) add("snr_grid_db: SNR grid is empty");
    if (s.n_channels < 1) add("n_channels: need at least one channel realization");
    if (s.n_symbols < 1) add("n_symbols: need at least one symbol per channel");
    if (!(s.tau > 0.0)) add("tau: total transmit power must be positive");

    if (s.constellation == ConstellationKind::Pam) {
        if (s.order < 2) add("order: PAM order must be at least 2");
    } else {
        try {
            (void)Constellation::square_qam(s.order);
        } catch (const Error&) {
            add("order: square QAM needs L^2 points with L a power of two, got " + std::to_string(s.order));
        }
        if (is_widely_linear(s.method)) {
            add("method: widely linear precoder " + std::string(method_name(s.method)) +
                " needs a PAM constellation");
        }
    }

    const Eigen::Index limit = max_users_for(s.method, s.antennas);
    const std::string rule = is_widely_linear(s.method) ? "K <= 2M" : "K <= M";
    if (s.selection == SelectionMethod::None) {
        if (s.users < 1) add("users: need at least one user");
        if (limit > 0 && s.users > limit) {
            add("users: method " + std::string(method_name(s.method)) + " needs " + rule + " (K=" +
                std::to_string(s.users) + ", M=" + std::to_string(s.antennas) + ")");
        }
    } else {
        if (s.available_users < 1) add("available_users: need at least one available user");
        const Eigen::Index most = s.selection == SelectionMethod::Susom ? 2 * s.antennas : s.antennas;
        if (limit > 0 && most > limit) {
            add("selection: " + std::string(selection_name(s.selection)) + " can select up to " +
                std::to_string(most) + " users but method " + std::string(method_name(s.method)) + " needs " +
                rule);
        }
    }
}

}  // namespace detail

/// Every rule the plan violates; empty when the plan can run.
inline std::vector<std::string> validate_plan(const ExperimentPlan& plan) {
    std::vector<std::string> out;
    if (plan.curves.empty() && !plan.census) out.push_back("plan: nothing to run");
    for (const Curve& c : plan.curves) detail::validate_scenario("[" + c.label + "] ", c.scenario, out);
    if (plan.census) {
        const CensusPlan& c = *plan.census;
        if (c.antennas.empty() || c.pool_sizes.empty()) out.push_back("[census] grids: antenna and K_T grids must be nonempty");
        for (auto m : c.antennas) {
            if (m < 1) out.push_back("[census] antennas: need at least one antenna");
        }
        for (auto k : c.pool_sizes) {
            if (k < 1) out.push_back("[census] available_users: K_T must be at least 1");
        }
        if (!(c.alpha >= 0.0 && c.alpha < 1.0)) {
            out.push_back("[census] alpha: must lie in [0, 1), got " + std::to_string(c.alpha));
        }
        if (c.trials < 1) out.push_back("[census] trials: need at least one trial");
    }
    return out;
}

inline std::vector<std::string> validate_config(const ExperimentSpec& spec) { return validate_plan(resolve_plan(spec)); }

// ---------------------------------------------------------------- config I/O

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    std::istringstream in(value);
    T out{};
    in >> out;
    if (in.fail() || !in.eof()) {
        throw Error(ErrorCode::InvalidConfig, key + ": cannot parse '" + value + "'");
    }
    return out;
}

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

/// Applies one `key = value` setting to a curve.
inline void set_field(Curve& c, const std::string& key, const std::string& value) {
    using detail::parse_number;
    ScenarioConfig& s = c.scenario;
    if (key == "label") {
        c.label = value;
    } else if (key == "antennas") {
        s.antennas = parse_number<Eigen::Index>(key, value);
    } else if (key == "users") {
        s.users = parse_number<Eigen::Index>(key, value);
    } else if (key == "available_users") {
        s.available_users = parse_number<Eigen::Index>(key, value);
    } else if (key == "constellation") {
        if (value == "pam") s.constellation = ConstellationKind::Pam;
        else if (value == "qam") s.constellation = ConstellationKind::SquareQam;
        else throw Error(ErrorCode::InvalidConfig, "constellation: expected pam or qam, got '" + value + "'");
    } else if (key == "order") {
        s.order = parse_number<std::size_t>(key, value);
    } else if (key == "method") {
        const auto m = parse_method(value);
        if (!m) throw Error(ErrorCode::InvalidConfig, "method: unknown precoder '" + value + "'");
        s.method = *m;
    } else if (key == "selection") {
        const auto sel = parse_selection(value);
        if (!sel) throw Error(ErrorCode::InvalidConfig, "selection: expected none, sus or susom, got '" + value + "'");
        s.selection = *sel;
    } else if (key == "alpha") {
        s.alpha = parse_number<double>(key, value);
    } else if (key == "snr_grid_db") {
        s.snr_grid_db.clear();
        std::istringstream in(value);
        std::string item;
        while (std::getline(in, item, ',')) {
            const std::string t = detail::trim(item);
            if (!t.empty()) s.snr_grid_db.push_back(parse_number<double>(key, t));
        }
    } else if (key == "n_channels") {
        s.n_channels = parse_number<std::size_t>(key, value);
    } else if (key == "n_symbols") {
        s.n_symbols = parse_number<std::size_t>(key, value);
    } else if (key == "tau") {
        s.tau = parse_number<double>(key, value);
    } else if (key == "seed") {
        s.seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "threads") {
        s.threads = parse_number<unsigned>(key, value);
    } else if (key == "dual_initial_mu") {
        s.dual.initial_mu = parse_number<double>(key, value);
    } else if (key == "dual_initial_step") {
        s.dual.initial_step = parse_number<double>(key, value);
    } else if (key == "dual_step_decay") {
        s.dual.step_decay = parse_number<double>(key, value);
    } else if (key == "dual_tolerance") {
        s.dual.tolerance = parse_number<double>(key, value);
    } else if (key == "dual_max_iterations") {
        s.dual.max_iterations = parse_number<int>(key, value);
    } else {
        throw Error(ErrorCode::InvalidConfig, key + ": unknown config key");
    }
}

/// Flat key-value form of a curve, in a fixed key order.
inline std::vector<std::pair<std::string, std::string>> curve_fields(const Curve& c) {
    const ScenarioConfig& s = c.scenario;
    std::string grid;
    for (std::size_t i = 0; i < s.snr_grid_db.size(); ++i) {
        if (i) grid += ",";
        grid += detail::format_double(s.snr_grid_db[i]);
    }
    std::vector<std::pair<std::string, std::string>> out{
        {"label", c.label},
        {"antennas", std::to_string(s.antennas)},
        {"users", std::to_string(s.users)},
        {"available_users", std::to_string(s.available_users)},
        {"constellation", s.constellation == ConstellationKind::Pam ? "pam" : "qam"},
        {"order", std::to_string(s.order)},
        {"method", std::string(method_name(s.method))},
        {"selection", std::string(selection_name(s.selection))},
        {"alpha", detail::format_double(s.alpha)},
        {"snr_grid_db", grid},
        {"n_channels", std::to_string(s.n_channels)},
        {"n_symbols", std::to_string(s.n_symbols)},
        {"tau", detail::format_double(s.tau)},
        {"seed", std::to_string(s.seed)},
        {"threads", std::to_string(s.threads)},
        {"dual_step_decay", detail::format_double(s.dual.step_decay)},
        {"dual_tolerance", detail::format_double(s.dual.tolerance)},
        {"dual_max_iterations", std::to_string(s.dual.max_iterations)},
    };
    if (s.dual.initial_mu) out.emplace_back("dual_initial_mu", detail::format_double(*s.dual.initial_mu));
    if (s.dual.initial_step) out.emplace_back("dual_initial_step", detail::format_double(*s.dual.initial_step));
    return out;
}

/// Parses a flat `key = value` document describing one curve. `#` starts a
/// comment; snr_min/snr_max/snr_step may replace snr_grid_db.
inline Curve parse_config_text(std::string_view text) {
    Curve c;
    c.label.clear();
    std::optional<double> lo, hi, step;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = detail::trim(t.substr(0, eq));
        const std::string value = detail::trim(t.substr(eq + 1));
        if (key == "snr_min") lo = detail::parse_number<double>(key, value);
        else if (key == "snr_max") hi = detail::parse_number<double>(key, value);
        else if (key == "snr_step") step = detail::parse_number<double>(key, value);
        else set_field(c, key, value);
    }
    if (lo || hi || step) c.scenario.snr_grid_db = snr_range(lo.value_or(0.0), hi.value_or(lo.value_or(0.0)), step.value_or(1.0));
    if (c.label.empty()) {
        c.label = std::string(method_name(c.scenario.method));
        if (c.scenario.selection != SelectionMethod::None) {
            c.label = std::string(selection_name(c.scenario.selection)) + "+" + c.label;
        }
    }
    return c;
}

inline nlohmann::ordered_json plan_to_json(const ExperimentPlan& plan) {
    nlohmann::ordered_json j;
    j["curves"] = nlohmann::ordered_json::array();
    for (const Curve& c : plan.curves) {
        nlohmann::ordered_json obj;
        for (const auto& [k, v] : curve_fields(c)) obj[k] = v;
        j["curves"].push_back(obj);
    }
    if (plan.census) {
        const CensusPlan& c = *plan.census;
        nlohmann::ordered_json cj;
        cj["antennas"] = c.antennas;
        cj["pool_sizes"] = c.pool_sizes;
        std::vector<std::string> algos;
        for (auto a : c.algorithms) algos.emplace_back(selection_name(a));
        cj["algorithms"] = algos;
        cj["alpha"] = c.alpha;
        cj["trials"] = c.trials;
        cj["seed"] = c.seed;
        j["census"] = cj;
    }
    return j;
}

inline ExperimentPlan plan_from_json(const nlohmann::json& j) {
    ExperimentPlan plan;
    try {
        if (j.contains("curves")) {
            for (const auto& obj : j.at("curves")) {
                Curve c;
                for (const auto& [k, v] : obj.items()) set_field(c, k, v.get<std::string>());
                plan.curves.push_back(std::move(c));
            }
        }
        if (j.contains("census") && !j.at("census").is_null()) {
            const auto& cj = j.at("census");
            CensusPlan c;
            c.antennas = cj.at("antennas").get<std::vector<Eigen::Index>>();
            c.pool_sizes = cj.at("pool_sizes").get<std::vector<Eigen::Index>>();
            c.algorithms.clear();
            for (const auto& a : cj.at("algorithms")) {
                const auto sel = parse_selection(a.get<std::string>());
                if (!sel) throw Error(ErrorCode::InvalidConfig, "census.algorithms: unknown algorithm");
                c.algorithms.push_back(*sel);
            }
            c.alpha = cj.at("alpha").get<double>();
            c.trials = cj.at("trials").get<std::size_t>();
            c.seed = cj.at("seed").get<std::uint64_t>();
            plan.census = c;
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("sidecar: ") + e.what());
    }
    return plan;
}

/// Loads either a sidecar JSON plan or a flat key-value config file.
inline ExperimentPlan load_plan_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
        }
        return plan_from_json(j);
    }
    ExperimentPlan plan;
    plan.curves.push_back(parse_config_text(text));
    return plan;
}

/// Output format stored in a sidecar, if `path` is one.
inline std::optional<OutputFormat> recorded_format(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    const nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("format") || !j["format"].is_string()) return std::nullopt;
    const auto f = j["format"].get<std::string>();
    if (f == "csv") return OutputFormat::Csv;
    if (f == "json") return OutputFormat::Json;
    return std::nullopt;
}

// ---------------------------------------------------------------- execution

namespace detail {

inline std::string format_short(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline std::string format_value(const std::optional<double>& v) { return v ? format_short(*v) : std::string(); }

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

}  // namespace detail

inline std::string render_csv(const std::vector<Row>& rows) {
    std::string out;
    const auto& cols = output_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
    out += "\n";
    for (const Row& r : rows) {
        out += detail::csv_escape(r.method) + "," + detail::format_short(r.x_value) + "," +
               detail::format_value(r.avg_ser) + "," + detail::format_value(r.avg_sum_rate_bits) + "," +
               detail::format_short(r.avg_selected_users) + "," + std::to_string(r.n_trials) + "," +
               std::to_string(r.seed) + "\n";
    }
    return out;
}

inline std::string render_json(const std::vector<Row>& rows) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const Row& r : rows) {
        nlohmann::ordered_json o;
        o["method"] = r.method;
        o["x_value"] = r.x_value;
        o["avg_ser"] = r.avg_ser ? nlohmann::ordered_json(*r.avg_ser) : nlohmann::ordered_json(nullptr);
        o["avg_sum_rate_bits"] =
            r.avg_sum_rate_bits ? nlohmann::ordered_json(*r.avg_sum_rate_bits) : nlohmann::ordered_json(nullptr);
        o["avg_selected_users"] = r.avg_selected_users;
        o["n_trials"] = r.n_trials;
        o["seed"] = r.seed;
        arr.push_back(o);
    }
    return arr.dump(2) + "\n";
}

/// Runs a validated plan and returns its rows without writing anything.
inline ExperimentOutcome execute_plan(const ExperimentPlan& plan) {
    ExperimentOutcome out;
    for (const Curve& c : plan.curves) {
        const SweepResult res = run_sweep(c.scenario);
        out.skipped += res.skipped();
        out.attempted += res.attempted();
        for (const SweepPoint& p : res.points) {
            out.rows.push_back(Row{c.label, p.snr_db, p.avg_ser, p.avg_sum_rate, p.avg_selected_users,
                                   p.realizations, c.scenario.seed});
        }
    }
    if (plan.census) {
        const CensusPlan& c = *plan.census;
        for (Eigen::Index m : c.antennas) {
            for (const CensusPoint& p : run_selection_census(m, c.pool_sizes, c.alpha, c.trials, c.algorithms, c.seed)) {
                out.rows.push_back(Row{std::string(selection_name(p.algorithm)) + "_m" + std::to_string(m),
                                       static_cast<double>(p.available_users), std::nullopt, std::nullopt,
                                       p.mean_selected, p.trials, c.seed});
            }
        }
    }
    return out;
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& output) {
    return std::filesystem::path(output.string() + ".config.json");
}

/// Validates, runs, and writes the output file plus its JSON sidecar.
///
/// Throws InvalidConfig listing every violation, or IoError when a file
/// cannot be written.
inline ExperimentOutcome run_experiment(const ExperimentSpec& spec) {
    const ExperimentPlan plan = resolve_plan(spec);
    const auto violations = validate_plan(plan);
    if (!violations.empty()) {
        std::string msg;
        for (const auto& v : violations) msg += (msg.empty() ? "" : "; ") + v;
        throw Error(ErrorCode::InvalidConfig, msg);
    }
    ExperimentOutcome outcome = execute_plan(plan);

    const std::string body =
        spec.output_format == OutputFormat::Csv ? render_csv(outcome.rows) : render_json(outcome.rows);
    auto write = [](const std::filesystem::path& path, const std::string& text) {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw Error(ErrorCode::IoError, "cannot write " + path.string());
        f << text;
        if (!f) throw Error(ErrorCode::IoError, "write failed for " + path.string());
    };
    write(spec.output_path, body);

    nlohmann::ordered_json side = plan_to_json(plan);
    side["format"] = spec.output_format == OutputFormat::Csv ? "csv" : "json";
    side["columns"] = output_columns();
    write(sidecar_path(spec.output_path), side.dump(2) + "\n");
    return outcome;
}

}  // namespace wlprec
