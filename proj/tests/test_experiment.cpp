#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "wlprec/experiment.hpp"

using namespace wlprec;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch_dir() {
    const fs::path dir = fs::temp_directory_path() / "wlprec_experiment_tests";
    fs::create_directories(dir);
    return dir;
}

ExperimentSpec one_curve(const std::string& text) {
    ExperimentSpec spec;
    spec.plan.curves.push_back(parse_config_text(text));
    return spec;
}

}  // namespace

TEST(Presets, Fig1HasTenMethods) {
    const auto plan = preset_plan(Preset::Fig1);
    ASSERT_EQ(plan.curves.size(), 10u);
    std::set<std::string> labels;
    int wl = 0;
    for (const auto& c : plan.curves) {
        labels.insert(c.label);
        wl += is_widely_linear(c.scenario.method);
        EXPECT_EQ(c.scenario.antennas, 4);
        EXPECT_EQ(c.scenario.users, 4);
        EXPECT_EQ(c.scenario.order, 4u);
    }
    EXPECT_EQ(labels.size(), 10u);
    EXPECT_EQ(wl, 5);
}

TEST(Presets, Fig3IsCensus) {
    const auto plan = preset_plan(Preset::Fig3);
    EXPECT_TRUE(plan.curves.empty());
    ASSERT_TRUE(plan.census.has_value());
    EXPECT_EQ(plan.census->antennas, (std::vector<Eigen::Index>{2, 4}));
    EXPECT_EQ(plan.census->algorithms.size(), 2u);
}

TEST(Presets, AllValid) {
    for (Preset p : {Preset::Fig1, Preset::Fig2, Preset::Fig3, Preset::Fig4, Preset::Fig5}) {
        EXPECT_TRUE(validate_plan(preset_plan(p)).empty());
    }
    EXPECT_EQ(parse_preset("fig4"), Preset::Fig4);
    EXPECT_FALSE(parse_preset("fig6").has_value());
}

TEST(Validate, AlphaOutOfRange) {
    auto spec = one_curve("method = wl_mmse\nalpha = 1.0\nsnr_grid_db = 0");
    const auto v = validate_config(spec);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_NE(v[0].find("alpha"), std::string::npos);
}

TEST(Validate, LinearZfDimension) {
    const auto v = validate_config(one_curve("method = zf\nantennas = 4\nusers = 5\nsnr_grid_db = 0"));
    ASSERT_EQ(v.size(), 1u);
    EXPECT_NE(v[0].find("K <= M"), std::string::npos);
}

TEST(Validate, WlZfDimension) {
    EXPECT_TRUE(validate_config(one_curve("method = wl_zf\nusers = 8\nsnr_grid_db = 0")).empty());
    const auto v = validate_config(one_curve("method = wl_zf\nusers = 9\nsnr_grid_db = 0"));
    ASSERT_EQ(v.size(), 1u);
    EXPECT_NE(v[0].find("K <= 2M"), std::string::npos);
    EXPECT_EQ(validate_config(one_curve("method = wl_mmse_iter\nusers = 9\nsnr_grid_db = 0")).size(), 1u);
    EXPECT_TRUE(validate_config(one_curve("method = wl_mslnr\nusers = 20\nsnr_grid_db = 0")).empty());
}

TEST(Validate, SelectionPairing) {
    EXPECT_EQ(validate_config(one_curve("method = mmse\nselection = susom\navailable_users = 10\nsnr_grid_db = 0"))
                  .size(),
              1u);
    EXPECT_TRUE(
        validate_config(one_curve("method = mmse\nselection = sus\navailable_users = 10\nsnr_grid_db = 0")).empty());
    EXPECT_EQ(validate_config(one_curve("method = mmse\nselection = sus\nsnr_grid_db = 0")).size(), 1u);
}

TEST(Validate, MiscRules) {
    EXPECT_EQ(validate_config(one_curve("method = wl_zf\nconstellation = qam\norder = 16\nsnr_grid_db = 0")).size(),
              1u);
    EXPECT_EQ(validate_config(one_curve("method = zf\nconstellation = qam\norder = 8\nsnr_grid_db = 0")).size(), 1u);
    EXPECT_EQ(validate_config(one_curve("method = zf\nsnr_grid_db =")).size(), 1u);
    EXPECT_EQ(validate_config(one_curve("method = zf\nn_channels = 0\nn_symbols = 0\ntau = 0\nsnr_grid_db = 1"))
                  .size(),
              3u);
    ExperimentSpec empty;
    EXPECT_EQ(validate_config(empty).size(), 1u);
}

TEST(ConfigText, ParsesFieldsAndComments) {
    const auto c = parse_config_text(R"(# overloaded sweep
method = wl_zf   # trailing comment
antennas = 2
users = 4
seed = 77
snr_min = 0
snr_max = 10
snr_step = 5
dual_tolerance = 1e-9
)");
    EXPECT_EQ(c.scenario.method, Method::WlZf);
    EXPECT_EQ(c.scenario.antennas, 2);
    EXPECT_EQ(c.scenario.users, 4);
    EXPECT_EQ(c.scenario.seed, 77u);
    EXPECT_EQ(c.scenario.snr_grid_db, (std::vector<double>{0, 5, 10}));
    EXPECT_EQ(c.scenario.dual.tolerance, 1e-9);
    EXPECT_EQ(c.label, "wl_zf");
}

TEST(ConfigText, Errors) {
    auto code_of = [](const std::string& text) {
        try {
            parse_config_text(text);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::IoError;
    };
    EXPECT_EQ(code_of("bogus = 1"), ErrorCode::InvalidConfig);
    EXPECT_EQ(code_of("users = four"), ErrorCode::InvalidConfig);
    EXPECT_EQ(code_of("method = fancy"), ErrorCode::InvalidConfig);
    EXPECT_EQ(code_of("just words"), ErrorCode::InvalidConfig);
}

TEST(Overrides, ApplyToEveryCurve) {
    ExperimentSpec spec;
    spec.preset = Preset::Fig4;
    spec.overrides.trials = 7;
    spec.overrides.seed = 9;
    spec.overrides.snr_min = 10;
    spec.overrides.snr_max = 20;
    const auto plan = resolve_plan(spec);
    for (const auto& c : plan.curves) {
        EXPECT_EQ(c.scenario.n_channels, 7u);
        EXPECT_EQ(c.scenario.seed, 9u);
        EXPECT_EQ(c.scenario.snr_grid_db.front(), 10.0);
        EXPECT_EQ(c.scenario.snr_grid_db.back(), 20.0);
        EXPECT_EQ(c.scenario.snr_grid_db.size(), 6u);
    }
}

TEST(RunExperiment, CsvAndSidecarReproduce) {
    const fs::path dir = scratch_dir();
    ExperimentSpec spec;
    spec.plan.curves.push_back(parse_config_text("method = wl_mmse\nn_channels = 20\nn_symbols = 20\nsnr_grid_db = 0, 10"));
    spec.plan.curves.push_back(parse_config_text("method = mmse\nn_channels = 20\nn_symbols = 20\nsnr_grid_db = 0, 10"));
    spec.output_path = dir / "a.csv";
    const auto out = run_experiment(spec);
    EXPECT_EQ(out.rows.size(), 4u);
    EXPECT_EQ(out.skipped, 0u);

    const std::string csv = slurp(spec.output_path);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "method,x_value,avg_ser,avg_sum_rate_bits,avg_selected_users,n_trials,seed");
    EXPECT_NE(csv.find("\nwl_mmse,10,"), std::string::npos);

    ExperimentSpec again;
    again.plan = load_plan_file(sidecar_path(spec.output_path));
    again.output_path = dir / "b.csv";
    ASSERT_EQ(recorded_format(sidecar_path(spec.output_path)), OutputFormat::Csv);
    run_experiment(again);
    EXPECT_EQ(slurp(again.output_path), csv);
}

TEST(RunExperiment, CensusJson) {
    const fs::path dir = scratch_dir();
    ExperimentSpec spec;
    CensusPlan census;
    census.antennas = {2};
    census.pool_sizes = {1, 5};
    census.trials = 10;
    spec.plan.census = census;
    spec.output_format = OutputFormat::Json;
    spec.output_path = dir / "census.json";
    run_experiment(spec);
    const auto j = nlohmann::json::parse(slurp(spec.output_path));
    ASSERT_EQ(j.size(), 4u);
    EXPECT_TRUE(j[0]["avg_ser"].is_null());
    EXPECT_TRUE(j[0]["avg_sum_rate_bits"].is_null());
    EXPECT_EQ(j[0]["avg_selected_users"].get<double>(), 1.0);
    EXPECT_EQ(j[0]["method"].get<std::string>(), "sus_m2");

    const auto plan = load_plan_file(sidecar_path(spec.output_path));
    ASSERT_TRUE(plan.census.has_value());
    EXPECT_EQ(plan.census->pool_sizes, census.pool_sizes);
}

TEST(RunExperiment, InvalidConfigNamesField) {
    ExperimentSpec spec = one_curve("method = wl_zf\nusers = 9\nsnr_grid_db = 0");
    spec.output_path = scratch_dir() / "never.csv";
    try {
        run_experiment(spec);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
        EXPECT_NE(std::string(e.what()).find("users"), std::string::npos);
    }
}

TEST(RunExperiment, IoError) {
    ExperimentSpec spec = one_curve("method = wl_zf\nn_channels = 2\nn_symbols = 2\nsnr_grid_db = 0");
    spec.output_path = "/nonexistent-dir/out.csv";
    try {
        run_experiment(spec);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::IoError);
    }
    EXPECT_THROW(load_plan_file("/nonexistent-dir/cfg.txt"), Error);
}
