#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ews/indicators.hpp"
#include "ews/synth.hpp"
#include "oracles.hpp"

using namespace ews;

namespace {

ObservableMatrix one_row(const std::vector<double>& z, double bin_width = 0.1) {
    ObservableMatrix m;
    m.dests = {0};
    m.bin_width = bin_width;
    m.cols = z.size();
    m.values = z;
    return m;
}

}  // namespace

TEST_CASE("summary stats on frozen examples") {
    std::vector<double> flat{2, 2, 2};
    auto s = summary_stats(flat);
    REQUIRE(s.has_value());
    CHECK(s->mu == 2.0);
    CHECK(s->sd == 0.0);
    CHECK(s->var == 0.0);

    std::vector<double> two{60, 1500};
    auto t = summary_stats(two);
    REQUIRE(t.has_value());
    CHECK(t->mu == 780.0);
    CHECK(t->sd == Catch::Approx(720.0 * std::sqrt(2.0)).epsilon(1e-12));

    std::vector<double> one{5};
    CHECK(summary_stats(one).reason == NullReason::too_short);
}

TEST_CASE("lag-1 autocorrelation of a perfect alternation is -1") {
    std::vector<double> z{1, 2, 1, 2, 1, 2};
    auto r = lag1_autocorrelation(z);
    REQUIRE(r.has_value());
    CHECK(*r == -1.0);
}

TEST_CASE("constant series has no autocorrelation") {
    std::vector<double> z{5, 5, 5, 5};
    CHECK(lag1_autocorrelation(z).reason == NullReason::sigma_zero);
    std::vector<double> two{1, 2};
    CHECK(lag1_autocorrelation(two).reason == NullReason::too_short);
}

TEST_CASE("iid noise shows no short-term memory") {
    int pass = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<double> z(10000);
        for (auto& v : z) v = u(rng);
        auto r = lag1_autocorrelation(z);
        REQUIRE(r.has_value());
        if (std::abs(*r) < 3.0 / std::sqrt(double(z.size()))) ++pass;
    }
    CHECK(pass >= 99);
}

TEST_CASE("coefficient of variation on frozen examples") {
    std::vector<double> flat{2, 2, 2};
    auto r = coefficient_of_variation(flat);
    REQUIRE(r.has_value());
    CHECK(*r == 0.0);

    std::vector<double> two{60, 1500};
    auto c = coefficient_of_variation(two);
    REQUIRE(c.has_value());
    CHECK(*c == Catch::Approx(720.0 * std::sqrt(2.0) / 780.0).epsilon(1e-12));

    std::vector<double> zeros{0, 0, 0};
    CHECK(coefficient_of_variation(zeros).reason == NullReason::zero_mean);
}

TEST_CASE("skewness on frozen examples") {
    std::vector<double> sym{1, 2, 3};
    CHECK(*skewness(sym, SkewVariant::standard) == 0.0);
    CHECK(*skewness(sym, SkewVariant::paper_literal) == 0.0);

    std::vector<double> z{0, 0, 0, 1};
    CHECK(*skewness(z, SkewVariant::standard) == Catch::Approx(2.0 / std::sqrt(3.0)).epsilon(1e-9));
    CHECK(*skewness(z, SkewVariant::paper_literal) ==
          Catch::Approx(0.09375 / std::sqrt(0.1875)).epsilon(1e-9));

    std::vector<double> flat{4, 4, 4};
    CHECK(skewness(flat, SkewVariant::standard).reason == NullReason::sigma_zero);
}

TEST_CASE("indicators agree with brute-force evaluation") {
    std::mt19937_64 lens(99);
    for (std::uint64_t i = 0; i < 200; ++i) {
        auto n = 3 + lens() % 498;
        auto z = oracle::random_series(n, i);

        auto r = lag1_autocorrelation(z);
        auto ro = oracle::ac1(z);
        REQUIRE(r.has_value() == ro.has_value());
        if (ro) CHECK(*r == Catch::Approx(*ro).margin(1e-9));

        auto c = coefficient_of_variation(z);
        auto co = oracle::cv(z);
        REQUIRE(c.has_value() == co.has_value());
        if (co) CHECK(*c == Catch::Approx(*co).margin(1e-9));

        for (bool paper : {false, true}) {
            auto s = skewness(z, paper ? SkewVariant::paper_literal : SkewVariant::standard);
            auto so = oracle::skew(z, paper);
            REQUIRE(s.has_value() == so.has_value());
            if (so) CHECK(*s == Catch::Approx(*so).margin(1e-9));
        }
    }
}

TEST_CASE("shift and scale invariance") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uc(1.0, 50.0);
    for (std::uint64_t i = 0; i < 50; ++i) {
        auto z = oracle::random_series(100, 1000 + i);
        double c = uc(rng), k = uc(rng);
        std::vector<double> shifted(z), scaled(z);
        for (auto& v : shifted) v += c;
        for (auto& v : scaled) v *= k;

        CHECK(*lag1_autocorrelation(shifted) ==
              Catch::Approx(*lag1_autocorrelation(z)).margin(1e-9));
        CHECK(*lag1_autocorrelation(scaled) ==
              Catch::Approx(*lag1_autocorrelation(z)).margin(1e-9));
        CHECK(*skewness(scaled) == Catch::Approx(*skewness(z)).margin(1e-9));
        CHECK(*skewness(shifted) == Catch::Approx(*skewness(z)).margin(1e-9));
        CHECK(*skewness(shifted, SkewVariant::paper_literal) ==
              Catch::Approx(*skewness(z, SkewVariant::paper_literal)).margin(1e-9));
        CHECK(*coefficient_of_variation(scaled) ==
              Catch::Approx(*coefficient_of_variation(z)).margin(1e-9));

        // shifting moves only the mean in the denominator
        auto st = summary_stats(z);
        CHECK(*coefficient_of_variation(shifted) ==
              Catch::Approx(st->sd / (st->mu + c)).margin(1e-9));
    }
}

TEST_CASE("scalar fit matches the regression slope") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        auto z = oracle::ar1_series(0.6, 500, seed);
        auto rr = return_rate(one_row(z));
        auto slope = oracle::ar1_slope(z);
        REQUIRE(rr.has_value());
        REQUIRE(slope.has_value());
        CHECK(rr->fit.lambda == Catch::Approx(std::abs(*slope)).margin(1e-9));
        CHECK(rr->rate == Catch::Approx(1.0 - std::min(std::abs(*slope), 1.0)).margin(1e-9));
    }
}

TEST_CASE("return rate recovers the autoregressive coefficient") {
    for (double phi : {0.2, 0.5, 0.9}) {
        int pass = 0;
        for (std::uint64_t seed = 0; seed < 25; ++seed) {
            auto z = oracle::ar1_series(phi, 10000, 77 + seed);
            auto rr = return_rate(one_row(z));
            REQUIRE(rr.has_value());
            if (std::abs(rr->rate - (1.0 - phi)) <= 0.05) ++pass;
        }
        CHECK(pass >= 24);
    }
}

TEST_CASE("white noise recovers instantly") {
    int pass = 0;
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        auto z = oracle::ar1_series(0.0, 10000, 200 + seed);
        auto rr = return_rate(one_row(z));
        REQUIRE(rr.has_value());
        if (std::abs(rr->rate - 1.0) <= 0.05) ++pass;
    }
    CHECK(pass >= 24);
}

TEST_CASE("degenerate matrices are flagged") {
    std::vector<double> flat(50, 7.0);
    CHECK(return_rate(one_row(flat)).reason == NullReason::degenerate_matrix);

    std::vector<double> tiny{1, 2, 3};
    CHECK(return_rate(one_row(tiny)).reason == NullReason::too_short);

    // variation only in the final column leaves nothing to regress on
    std::vector<double> last(50, 3.0);
    last.back() = 9.0;
    CHECK(return_rate(one_row(last)).reason == NullReason::ill_conditioned);
}

TEST_CASE("operator fit pools correlated destination rows") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> unit(0.0, 1.0);
    const double phi = 0.8;
    int pass = 0;
    for (int trial = 0; trial < 10; ++trial) {
        ObservableMatrix m;
        m.dests = {0, 1, 2};
        m.bin_width = 0.1;
        m.cols = 4000;
        m.values.resize(3 * m.cols);
        for (std::size_t r = 0; r < 3; ++r) {
            double x = unit(rng) / std::sqrt(1 - phi * phi);
            for (std::size_t c = 0; c < m.cols; ++c) {
                m.at(r, c) = 300.0 + 40.0 * x;
                x = phi * x + unit(rng);
            }
        }
        auto rr = return_rate(m);
        REQUIRE(rr.has_value());
        if (std::abs(rr->fit.lambda - phi) < 0.06) ++pass;
        CHECK(rr->fit.residual_rms > 0.0);
    }
    CHECK(pass >= 9);
}

TEST_CASE("trajectory covers the window with the configured stride") {
    ScenarioSpec spec = baseline_scenario(60.0, 3, 1, 400.0);
    auto recs = generate_scenario(spec);
    Window w{0, 0.0, 60.0, false, recs};
    TrajectoryConfig cfg;
    auto traj = indicator_trajectory(w, cfg);
    REQUIRE(traj.size() == 51);
    CHECK(traj.front().t_mid == Catch::Approx(5.0));
    CHECK(traj.back().t_mid == Catch::Approx(55.0));
}

TEST_CASE("constant traffic yields null autocorrelation but zero cv") {
    std::vector<PacketRecord> recs;
    for (int i = 0; i < 1200; ++i) recs.push_back({i * 0.05, 0, 60});
    Window w{0, 0.0, 60.0, false, recs};
    TrajectoryConfig cfg;
    auto traj = indicator_trajectory(w, cfg);
    REQUIRE(traj.size() == 51);
    for (const auto& s : traj) {
        CHECK(s.ac1.reason == NullReason::sigma_zero);
        REQUIRE(s.cv.has_value());
        CHECK(*s.cv == 0.0);
        CHECK(s.skewness.reason == NullReason::sigma_zero);
        CHECK(s.return_rate.reason == NullReason::degenerate_matrix);
    }
}

TEST_CASE("empty window trajectories are null with a reason") {
    Window w{0, 0.0, 60.0, false, {}};
    TrajectoryConfig cfg;
    auto traj = indicator_trajectory(w, cfg);
    REQUIRE(traj.size() == 51);
    for (const auto& s : traj) CHECK(s.ac1.reason == NullReason::empty_window);
}

TEST_CASE("bad trajectory config throws") {
    Window w{0, 0.0, 60.0, false, {}};
    TrajectoryConfig cfg;
    cfg.sub_stride = 0.0;
    CHECK_THROWS_AS(indicator_trajectory(w, cfg), BadConfigError);
    cfg = {};
    cfg.sub_len = 60.0;
    CHECK_THROWS_AS(indicator_trajectory(w, cfg), BadConfigError);
}

TEST_CASE("ramping windows show a rising autocorrelation trend") {
    ScenarioSpec spec;
    spec.seed = 9;
    spec.dest_count = 3;
    spec.duration_s = 60.0;
    PhaseSpec ramp;
    ramp.kind = PhaseKind::csd_ramp;
    ramp.duration_s = 60.0;
    ramp.rate = 600.0;
    spec.phases.push_back(ramp);

    auto recs = generate_scenario(spec);
    Window w{0, 0.0, 60.0, false, recs};
    TrajectoryConfig cfg;
    auto traj = indicator_trajectory(w, cfg);
    REQUIRE(traj.size() == 51);

    auto median_of = [&](std::size_t from, std::size_t to) {
        std::vector<double> vals;
        for (std::size_t i = from; i < to; ++i)
            if (traj[i].ac1.has_value()) vals.push_back(*traj[i].ac1);
        REQUIRE(!vals.empty());
        std::nth_element(vals.begin(), vals.begin() + vals.size() / 2, vals.end());
        return vals[vals.size() / 2];
    };
    double lo = median_of(0, 17), mid = median_of(17, 34), hi = median_of(34, 51);
    CHECK(lo < mid);
    CHECK(mid < hi);
}

TEST_CASE("detrending removes a linear drift from the memory estimate") {
    std::vector<PacketRecord> recs;
    std::mt19937_64 rng(13);
    std::normal_distribution<double> jit(0.0, 3.0);
    for (int i = 0; i < 2400; ++i) {
        double t = i * 0.025;
        recs.push_back({quantize_us(t), 0, detail::clamp_size(100 + 20.0 * t + jit(rng))});
    }
    Window w{0, 0.0, 60.0, false, recs};

    TrajectoryConfig plain;
    auto t1 = indicator_trajectory(w, plain);
    TrajectoryConfig dt = plain;
    dt.detrend = true;
    auto t2 = indicator_trajectory(w, dt);

    double mean_plain = 0, mean_dt = 0;
    int n = 0;
    for (std::size_t i = 0; i < t1.size(); ++i)
        if (t1[i].ac1.has_value() && t2[i].ac1.has_value()) {
            mean_plain += *t1[i].ac1;
            mean_dt += *t2[i].ac1;
            ++n;
        }
    REQUIRE(n > 40);
    CHECK(mean_plain / n > 0.8);      // the ramp masquerades as long memory
    CHECK(mean_dt / n < 0.3);         // removed once detrended
}
