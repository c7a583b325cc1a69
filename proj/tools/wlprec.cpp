// Command-line front end: run a figure preset or a config file and write the
// resulting curves as CSV or JSON.

#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "wlprec/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitInvalidConfig = 2;
constexpr int kExitTooManySkipped = 3;

// Scenario flags that only make sense without a preset.
struct ScenarioFlags {
    std::optional<Eigen::Index> antennas;
    std::optional<Eigen::Index> users;
    std::optional<Eigen::Index> available_users;
    std::optional<std::string> constellation;
    std::optional<std::size_t> order;
    std::optional<std::string> method;
    std::optional<std::string> selection;
    std::optional<double> tau;
    std::optional<std::string> label;

    bool any() const {
        return antennas || users || available_users || constellation || order || method || selection || tau || label;
    }

    void apply(wlprec::Curve& c) const {
        if (antennas) wlprec::set_field(c, "antennas", std::to_string(*antennas));
        if (users) wlprec::set_field(c, "users", std::to_string(*users));
        if (available_users) wlprec::set_field(c, "available_users", std::to_string(*available_users));
        if (constellation) wlprec::set_field(c, "constellation", *constellation);
        if (order) wlprec::set_field(c, "order", std::to_string(*order));
        if (method) wlprec::set_field(c, "method", *method);
        if (selection) wlprec::set_field(c, "selection", *selection);
        if (tau) wlprec::set_field(c, "tau", std::to_string(*tau));
        if (label) c.label = *label;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Widely linear precoding experiments for PAM broadcast channels"};

    std::string preset_name;
    std::string config_path;
    std::string out_path = "results.csv";
    std::string format = "csv";
    bool dry_run = false;
    wlprec::Overrides ov;
    ScenarioFlags sf;

    auto* preset_opt = app.add_option("--preset", preset_name, "Figure preset")
                           ->check(CLI::IsMember({"fig1", "fig2", "fig3", "fig4", "fig5"}));
    auto* config_opt = app.add_option("--config", config_path, "key=value config or a sidecar JSON")
                           ->check(CLI::ExistingFile);
    preset_opt->excludes(config_opt);
    app.add_option("--out", out_path, "Output file")->capture_default_str();
    app.add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    app.add_option("--seed", ov.seed, "Base seed");
    app.add_option("--trials", ov.trials, "Channel realizations per SNR point (census: trials per K_T)");
    app.add_option("--symbols", ov.symbols, "Symbols per realization");
    app.add_option("--alpha", ov.alpha, "Selection threshold in [0, 1)");
    app.add_option("--snr-min", ov.snr_min, "First SNR point in dB");
    app.add_option("--snr-max", ov.snr_max, "Last SNR point in dB");
    app.add_option("--snr-step", ov.snr_step, "SNR step in dB");
    app.add_option("--threads", ov.threads, "Worker threads, 0 = all cores");
    app.add_option("--antennas", sf.antennas, "Transmit antennas M");
    app.add_option("--users", sf.users, "Users K");
    app.add_option("--available-users", sf.available_users, "Pool size K_T for user selection");
    app.add_option("--constellation", sf.constellation, "pam or qam");
    app.add_option("--order", sf.order, "Constellation points");
    app.add_option("--method", sf.method, "Precoder, e.g. wl_mmse");
    app.add_option("--selection", sf.selection, "none, sus or susom");
    app.add_option("--tau", sf.tau, "Total transmit power");
    app.add_option("--label", sf.label, "Curve label");
    app.add_flag("--dry-run", dry_run, "Validate and print the resolved plan without running it");

    CLI11_PARSE(app, argc, argv);

    wlprec::ExperimentSpec spec;
    spec.output_path = out_path;
    spec.output_format = format == "json" ? wlprec::OutputFormat::Json : wlprec::OutputFormat::Csv;
    spec.overrides = ov;

    try {
        if (!preset_name.empty()) {
            if (sf.any()) {
                std::cerr << "InvalidConfig: scenario flags cannot be combined with --preset\n";
                return kExitInvalidConfig;
            }
            spec.preset = wlprec::parse_preset(preset_name);
        } else {
            if (!config_path.empty()) {
                spec.plan = wlprec::load_plan_file(config_path);
                if (app.count("--format") == 0) {
                    if (auto f = wlprec::recorded_format(config_path)) spec.output_format = *f;
                }
            } else {
                wlprec::Curve c;
                c.scenario.snr_grid_db = wlprec::snr_range(0.0, 40.0, 2.0);
                spec.plan.curves.push_back(std::move(c));
            }
            if (sf.any()) {
                if (spec.plan.curves.size() != 1) {
                    std::cerr << "InvalidConfig: scenario flags need a single-curve config\n";
                    return kExitInvalidConfig;
                }
                sf.apply(spec.plan.curves.front());
            }
            for (auto& c : spec.plan.curves) {
                if (c.label.empty()) c.label = std::string(wlprec::method_name(c.scenario.method));
            }
        }

        const auto violations = wlprec::validate_config(spec);
        if (!violations.empty()) {
            for (const auto& v : violations) std::cerr << "InvalidConfig: " << v << "\n";
            return kExitInvalidConfig;
        }
        if (dry_run) {
            std::cout << wlprec::plan_to_json(wlprec::resolve_plan(spec)).dump(2) << "\n";
            return kExitOk;
        }

        const auto outcome = wlprec::run_experiment(spec);
        std::cerr << "wrote " << outcome.rows.size() << " rows to " << spec.output_path.string() << "\n";
        if (outcome.skipped > 0) {
            std::fprintf(stderr, "skipped %zu of %zu realizations (%.3f%%)\n", outcome.skipped, outcome.attempted,
                         100.0 * outcome.failure_rate());
        }
        if (outcome.failure_rate() > 0.01) return kExitTooManySkipped;
        return kExitOk;
    } catch (const wlprec::Error& e) {
        std::cerr << e.what() << "\n";
        if (e.code() == wlprec::ErrorCode::IoError) return kExitIo;
        if (e.code() == wlprec::ErrorCode::InvalidConfig) return kExitInvalidConfig;
        return kExitIo;
    }
}
