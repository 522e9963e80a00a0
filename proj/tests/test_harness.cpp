#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "wlkf/harness.hpp"

using namespace wlkf;

namespace {

ScenarioConfig parse_text(const std::string& text, const std::filesystem::path& base = {}) {
    std::istringstream in(text);
    return parse_config(in, base);
}

std::string config_text(const ScenarioConfig& c) {
    std::ostringstream out;
    write_config(out, c);
    return out.str();
}

std::string csv_text(const MseSeries& s) {
    std::ostringstream out;
    write_csv(out, s);
    return out.str();
}

ScenarioConfig small_ar2(int trials, int threads) {
    auto c = builtin_ar2_config();
    c.variants = {FilterVariant::dckf, FilterVariant::dackf};
    c.eta_sweep = {0.0, 0.9};
    c.horizon = 120;
    c.trials = trials;
    c.threads = threads;
    return c;
}

} // namespace

TEST_CASE("parse_complex") {
    CHECK(parse_complex("1.5") == cplx(1.5, 0));
    CHECK(parse_complex("2-3j") == cplx(2, -3));
    CHECK(parse_complex("-0.5+0.25j") == cplx(-0.5, 0.25));
    CHECK(parse_complex("4j") == cplx(0, 4));
    CHECK(parse_complex("-j") == cplx(0, -1));
    CHECK(parse_complex("1e-3+2e2j") == cplx(1e-3, 200));
    CHECK_THROWS_AS(parse_complex("abc"), Error);
    CHECK_THROWS_AS(parse_complex(""), Error);
}

TEST_CASE("list and matrix values") {
    CHECK(parse_double_list("0, 0.5 ,1") == std::vector<double>{0, 0.5, 1});
    CHECK(parse_variant_list("dckf,dackf") == std::vector<FilterVariant>{FilterVariant::dckf, FilterVariant::dackf});
    CHECK(parse_variant_list("all").size() == all_variants().size());
    CHECK_THROWS_AS(parse_variant_list("dckf,bogus"), Error);
    const CMatrix m = parse_matrix("1, 2j; 0.5, -1");
    CHECK(m.rows() == 2);
    CHECK(m(0, 1) == cplx(0, 2));
    CHECK(m(1, 0) == cplx(0.5, 0));
    CHECK_THROWS_AS(parse_matrix("1,2;3"), Error);
}

TEST_CASE("builtin configurations") {
    const auto ar2 = builtin_ar2_config();
    CHECK(ar2.driving_variance == 2);
    CHECK(ar2.obs_cross_covariance == 4);
    CHECK(ar2.node_count() == 10);
    CHECK(ar2.eta_sweep.size() == 10);
    CHECK(ar2.eta_sweep.back() == doctest::Approx(0.9));
    CHECK(ar2.ar_a1 == cplx(1.2, 0));
    CHECK(ar2.ar_a2 == cplx(-0.8, 0));
    CHECK(ar2.weights == WeightScheme::nearest_neighbour);
    CHECK(ar2.steady_window() == 500);
    CHECK_NOTHROW(ar2.validate());

    const auto noise = build_observation_noise(ar2, 0.0);
    CHECK(noise.covariance_block(0, 0)(0, 0).real() == doctest::Approx(5.0));
    CHECK(noise.covariance_block(3, 3)(0, 0).real() == doctest::Approx(4.5));
    CHECK(noise.covariance_block(1, 4)(0, 0).real() == doctest::Approx(4.0));
    CHECK(std::abs(build_driving_noise(ar2, 0.9).pseudocovariance()(0, 0)) == doctest::Approx(1.8));

    const auto proj = builtin_projectile_config();
    CHECK(proj.sample_interval == 0.05);
    CHECK(proj.eta_sweep == std::vector<double>{0.85});
    CHECK(proj.trials == 1000);
    CHECK(proj.node_count() == 20);
    CHECK(proj.gravity == 9.8);
    CHECK(proj.initial_velocity == cplx(20, 10));
    CHECK(proj.driving_variance == 5);
    const auto pnoise = build_observation_noise(proj, 0.85);
    CHECK(pnoise.covariance_block(3, 3)(0, 0).real() == doctest::Approx(1 + 2 * 2.0));
    CHECK(pnoise.covariance_block(0, 7)(0, 0).real() == doctest::Approx(1.0));
    CHECK(std::abs(pnoise.pseudocovariance_block(3, 3)(0, 0)) == doctest::Approx(0.85 * 5));
    CHECK_NOTHROW(proj.validate());

    CHECK(builtin_config("ar2").has_value());
    CHECK_FALSE(builtin_config("nope").has_value());
}

TEST_CASE("config files") {
    SUBCASE("write and parse round-trip") {
        for (const auto& name : builtin_scenarios()) {
            auto c = *builtin_config(name);
            c.state_pseudo_phase = 0.1234567890123;
            const auto text = config_text(c);
            CHECK(config_text(parse_text(text)) == text);
        }
        auto custom = parse_text("scenario = custom\ntransition = 0.9, 0.1j; 0, 0.5\nobservation = 1, 0\n"
                                 "input = 0.1+0.2j, 0\ntopology = path\ntopology_nodes = 3\n");
        const auto text = config_text(custom);
        CHECK(config_text(parse_text(text)) == text);
        CHECK(custom.transition(0, 1) == cplx(0, 0.1));
    }
    SUBCASE("comments and overrides") {
        const auto c = parse_text("# comment\nscenario = ar2  # trailing\n\ntrials = 7\neta_sweep = 0.3\n");
        CHECK(c.trials == 7);
        CHECK(c.eta_sweep == std::vector<double>{0.3});
        CHECK(c.driving_variance == 2);
    }
    SUBCASE("errors") {
        const auto code_of = [](const std::string& text) {
            try {
                parse_text(text).validate();
            } catch (const Error& e) {
                return e.code();
            }
            return ErrorCode::io;
        };
        CHECK(code_of("scenario = ar2\ncolour = blue\n") == ErrorCode::config);
        CHECK(code_of("trials = 3\n") == ErrorCode::config);
        CHECK(code_of("scenario = ar2\ntrials = 0\n") == ErrorCode::config);
        CHECK(code_of("scenario = ar2\nhorizon = 10\nwindow = 10\n") == ErrorCode::config);
        CHECK(code_of("scenario = ar2\ntopology = missing_fixture.txt\n") == ErrorCode::config);
        CHECK(code_of("scenario = ar2\nar_a1 = 2\nar_a2 = 0.5\n") == ErrorCode::config);
        CHECK(code_of("scenario = ar2\ntrials = many\n") == ErrorCode::config);
    }
    SUBCASE("fixture paths resolve against the config directory") {
        const auto c = parse_text("scenario = ar2\ntopology = topologies/rgg_n10_r0.5_s7.txt\n", WLKF_DATA_DIR);
        CHECK_NOTHROW(c.validate());
        CHECK(build_topology(c).edges() == build_topology(builtin_ar2_config()).edges());
    }
    SUBCASE("the checked-in example parses") {
        const auto c = load_config(WLKF_CONFIG_DIR "/example.cfg");
        CHECK_NOTHROW(c.validate());
    }
}

TEST_CASE("noiseless single-node run has zero MSE") {
    const auto c = parse_text("scenario = custom\ntopology = complete\ntopology_nodes = 1\n"
                              "transition = 1\nobservation = 1\ninitial_state = 2-1j\nprior_mean = initial_state\n"
                              "driving_variance = 0\nobs_variance_base = 0\nobs_variance_scale = 0\n"
                              "obs_cross_covariance = 0\ntrials = 1\nhorizon = 2\nwindow = 1\n");
    const auto s = run_scenario(c);
    REQUIRE(s.points.size() == 1);
    CHECK(s.points[0].trials == 1);
    for (const auto& v : s.points[0].variants) {
        CHECK(v.network_curve.size() == 2);
        for (double e : v.network_curve) CHECK(e == 0.0);
        CHECK(v.steady_mse[0] == 0.0);
    }
}

TEST_CASE("results do not depend on the worker count") {
    const auto one = run_scenario(small_ar2(40, 1));
    const auto three = run_scenario(small_ar2(40, 3));
    CHECK(csv_text(one) == csv_text(three));
    CHECK(one.points[1].at(FilterVariant::dackf).trial_steady == three.points[1].at(FilterVariant::dackf).trial_steady);
}

TEST_CASE("every variant sees the same data") {
    const auto s = run_scenario(small_ar2(20, 1));
    // On a circular model the augmented filter reduces to the strict one, trial by trial.
    const auto& p = s.points[0];
    const auto& a = p.at(FilterVariant::dckf).trial_steady;
    const auto& b = p.at(FilterVariant::dackf).trial_steady;
    REQUIRE(a.size() == b.size());
    for (std::size_t t = 0; t < a.size(); ++t) CHECK(a[t] == doctest::Approx(b[t]).epsilon(1e-9));
    CHECK(paired_standard_error(p.at(FilterVariant::dckf), p.at(FilterVariant::dackf)) < 1e-8);
}

TEST_CASE("series contents") {
    const auto s = run_scenario(small_ar2(12, 1));
    CHECK(s.window == 30);
    for (const auto& p : s.points) {
        CHECK(p.trials == 12);
        for (const auto& v : p.variants) {
            CHECK(v.steady_mse.size() == 10);
            CHECK(v.network_curve.size() == 120);
            CHECK(v.trial_steady.size() == 12);
            for (double e : v.steady_mse) CHECK(e >= 0);
            CHECK_FALSE(v.bias[0].has_value());
            REQUIRE(v.report.has_value());
            CHECK(v.report->theoretical.size() == 10);
        }
    }
    CHECK_THROWS_AS(s.points[0].at(FilterVariant::central_ckf), Error);
}

TEST_CASE("csv") {
    SUBCASE("empty sweep gives a header-only file") {
        MseSeries empty;
        empty.scenario = "ar2";
        CHECK(csv_text(empty) == std::string(csv_header) + "\n");
    }
    SUBCASE("one row per variant, node and eta") {
        const auto s = run_scenario(small_ar2(4, 1));
        CHECK(csv_rows(s).size() == 2u * 2u * 10u);
    }
    SUBCASE("round-trip through a file") {
        const auto s = run_scenario(small_ar2(4, 1));
        const auto path = std::filesystem::temp_directory_path() / "wlkf_test_roundtrip.csv";
        emit_csv(s, path);
        CHECK(load_csv(path) == csv_rows(s));
        std::ifstream in(path);
        std::stringstream buf;
        buf << in.rdbuf();
        CHECK(buf.str() == csv_text(s));
        std::filesystem::remove(path);
    }
    SUBCASE("floats keep 17 significant digits") {
        MseSeries s;
        s.scenario = "x";
        EtaPoint p;
        p.eta = 0.1;
        p.trials = 1;
        VariantSeries v;
        v.variant = FilterVariant::dckf;
        v.steady_mse = {1.0 / 3.0};
        v.mean_mse = {2.0 / 3.0};
        v.bias_norm = {0.0};
        p.variants.push_back(v);
        s.points.push_back(p);
        const auto rows = parse_csv(*std::make_unique<std::istringstream>(csv_text(s)));
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].steady_state_mse == 1.0 / 3.0);
        CHECK(rows[0].eta == 0.1);
    }
    SUBCASE("unwritable path names the path") {
        try {
            emit_csv(MseSeries{}, "/nonexistent_dir/out.csv");
            FAIL("expected an io error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::io);
            CHECK(std::string(e.what()).find("/nonexistent_dir/out.csv") != std::string::npos);
        }
    }
    SUBCASE("malformed input") {
        std::istringstream bad("scenario,variant\nx,y\n");
        CHECK_THROWS_AS(parse_csv(bad), Error);
    }
}
