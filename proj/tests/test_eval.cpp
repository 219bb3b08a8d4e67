#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "exfil/eval.hpp"
#include "exfil/simulate.hpp"

using namespace exfil;

namespace {

NormalizedAmplitudes flat_spectrum(std::size_t dim) {
    NormalizedAmplitudes s;
    s.values.assign(dim, 1.0);
    return s;
}

FeatureBundle synth_bundle(std::mt19937_64& rng, double shift = 0.0) {
    std::normal_distribution<double> avg(5.0 + shift, 1.0);
    std::normal_distribution<double> amp(1.0, 0.3);
    std::lognormal_distribution<double> power(8.0 + shift, 2.0);
    FeatureBundle fb;
    fb.key = {"10.0.0.5", synthetic_remote_ip(rng() % 4096), 443};
    fb.avg_dft_ingress = avg(rng);
    fb.avg_dft_egress = avg(rng);
    for (std::size_t i = 0; i < 6; ++i) fb.dft_e.push_back(std::abs(amp(rng)));
    for (std::size_t i = 0; i < 6; ++i) fb.dft_i.push_back(std::abs(amp(rng)));
    for (std::size_t i = 0; i < 8; ++i) fb.stft.push_back(power(rng));
    fb.summary.mean_egress_bytes = std::exp(fb.avg_dft_egress);
    fb.summary.mean_ingress_bytes = std::exp(fb.avg_dft_ingress);
    return fb;
}

std::vector<FeatureBundle> synth_bundles(std::size_t n, std::uint64_t seed, double shift = 0.0) {
    std::mt19937_64 rng(seed);
    std::vector<FeatureBundle> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(synth_bundle(rng, shift));
    return out;
}

}  // namespace

TEST_CASE("a flat even-dimensional spectrum has periodicity fraction exactly 0.5") {
    CHECK(periodicity_fraction(flat_spectrum(500)) == 0.5);
    CHECK(periodicity_fraction(flat_spectrum(8)) == 0.5);
}

TEST_CASE("a single dominant harmonic gives the minimal fraction 1/dim") {
    NormalizedAmplitudes s = flat_spectrum(10);
    s.values.assign(10, 0.0);
    s.values[3] = 10.0;
    CHECK(periodicity_fraction(s) == 0.1);
}

TEST_CASE("more concentrated spectra score lower") {
    NormalizedAmplitudes peaked = flat_spectrum(100);
    peaked.values[7] = 50.0;
    CHECK(periodicity_fraction(peaked) < periodicity_fraction(flat_spectrum(100)));
}

TEST_CASE("degenerate or zero spectra are contract errors") {
    NormalizedAmplitudes s;
    s.degenerate = true;
    s.values.assign(4, 0.0);
    CHECK_THROWS_AS(periodicity_fraction(s), ContractError);
    NormalizedAmplitudes zero = flat_spectrum(4);
    zero.degenerate = false;
    zero.values.assign(4, 0.0);
    CHECK_THROWS_AS(periodicity_fraction(zero), ContractError);
}

TEST_CASE("coarse density counts occupied windows") {
    Communication c;
    c.key = {"10.0.0.5", "1.2.3.4", 443};
    SECTION("every window occupied") {
        for (std::int64_t t = 0; t < 4200; t += 100) c.samples.push_back({t, 1, 0});
        CHECK(coarse_density(c, 100.0, 0, 4200) == 1.0);
    }
    SECTION("one of 42 windows occupied") {
        c.samples.push_back({5, 1, 0});
        CHECK_THAT(coarse_density(c, 100.0, 0, 4200), Catch::Matchers::WithinRel(1.0 / 42.0, 1e-12));
    }
    SECTION("samples outside the span are ignored") {
        c.samples.push_back({9999, 1, 0});
        CHECK(coarse_density(c, 100.0, 0, 4200) == 0.0);
    }
    SECTION("a sample at the span end lands in the last window") {
        c.samples.push_back({4200, 1, 0});
        CHECK_THAT(coarse_density(c, 100.0, 0, 4200), Catch::Matchers::WithinRel(1.0 / 42.0, 1e-12));
    }
}

TEST_CASE("coarse density is monotone under adding samples") {
    std::mt19937_64 rng(3);
    Communication c;
    double prev = 0.0;
    for (int i = 0; i < 50; ++i) {
        c.samples.push_back({static_cast<std::int64_t>(rng() % 10000), 1, 0});
        const double d = coarse_density(c, 250.0, 0, 10000);
        CHECK(d >= prev);
        prev = d;
    }
}

TEST_CASE("coarse density rejects a span shorter than the window") {
    CHECK_THROWS_AS(coarse_density(Communication{}, 100.0, 0, 50), ConfigError);
}

TEST_CASE("evaluate validates its inputs") {
    const auto normal = synth_bundles(60, 1);
    const EnsembleModel m = train_ensemble(normal, default_ensemble_config(), 2);
    CHECK_THROWS_AS(evaluate(m, normal, {}, 1), ConfigError);
    CHECK_THROWS_AS(evaluate(m, {}, {}, 3), ContractError);
    std::map<int, std::vector<FeatureBundle>> empty_type;
    empty_type[1] = {};
    CHECK_THROWS_AS(evaluate(m, normal, empty_type, 3), ContractError);
}

TEST_CASE("evaluate produces coherent cross-validated rates and curves") {
    const auto normal = synth_bundles(150, 4);
    std::map<int, std::vector<FeatureBundle>> exfil;
    exfil[1] = synth_bundles(30, 5, 6.0);   // well-separated
    exfil[2] = synth_bundles(30, 6, 0.0);   // indistinguishable from normal
    const EnsembleModel m = train_ensemble(normal, default_ensemble_config(), 7);
    const EvalReport rep = evaluate(m, normal, exfil, 3);

    CHECK(rep.folds == 3);
    REQUIRE(rep.fold_fpr.size() == 3);
    double mean = 0.0;
    for (double f : rep.fold_fpr) {
        CHECK(f >= 0.0);
        CHECK(f <= 1.0);
        mean += f;
    }
    CHECK_THAT(rep.fpr, Catch::Matchers::WithinAbs(mean / 3.0, 1e-12));
    CHECK(rep.union_bound_ok);

    REQUIRE(rep.tpr_by_type.size() == 2);
    CHECK(rep.tpr_by_type.at(1) >= 0.9);  // the shifted corpus is easy
    CHECK(rep.tpr_by_type.at(1) >= rep.tpr_by_type.at(2));

    for (const auto& [type, curve] : rep.roc) {
        REQUIRE_FALSE(curve.empty());
        for (std::size_t i = 1; i < curve.size(); ++i) {
            CHECK(curve[i].first >= curve[i - 1].first);    // fpr ascending
            CHECK(curve[i].second >= curve[i - 1].second);  // tpr monotone after cleanup
        }
        for (const auto& [f, t] : curve) {
            CHECK(f >= 0.0);
            CHECK(f <= 1.0);
            CHECK(t >= 0.0);
            CHECK(t <= 1.0);
        }
    }

    // Per-component FPRs live in [0,1] and sum to at least the ensemble FPR.
    double comp_sum = 0.0;
    for (const auto& [name, f] : rep.per_component_fpr) {
        CHECK(f >= 0.0);
        CHECK(f <= 1.0);
        comp_sum += f;
    }
    CHECK(comp_sum + 1e-9 >= rep.fpr);
}

TEST_CASE("evaluate is deterministic for a fixed model seed") {
    const auto normal = synth_bundles(80, 8);
    std::map<int, std::vector<FeatureBundle>> exfil;
    exfil[1] = synth_bundles(20, 9, 4.0);
    const EnsembleModel m = train_ensemble(normal, default_ensemble_config(), 11);
    const EvalReport a = evaluate(m, normal, exfil, 4);
    const EvalReport b = evaluate(m, normal, exfil, 4);
    CHECK(a.fpr == b.fpr);
    CHECK(a.fold_fpr == b.fold_fpr);
    CHECK(a.tpr_by_type == b.tpr_by_type);
    CHECK(a.roc == b.roc);
}

TEST_CASE("apply_model reports fixed-threshold rates") {
    const auto normal = synth_bundles(100, 12);
    const EnsembleModel m = train_ensemble(normal, default_ensemble_config(), 13);
    const FixedRates far = apply_model(m, synth_bundles(50, 14, 8.0));
    const FixedRates near = apply_model(m, synth_bundles(50, 15, 0.0));
    CHECK(far.total == 50);
    CHECK(far.flagged_fraction == static_cast<double>(far.flagged) / 50.0);
    CHECK(far.flagged_fraction >= near.flagged_fraction);
    CHECK(far.flagged_fraction >= 0.9);
}

TEST_CASE("raw-byte baseline separates far outliers but not centroid mimics") {
    std::mt19937_64 rng(16);
    std::normal_distribution<double> noise(0.0, 0.2);
    std::vector<TrafficSummary> normal;
    for (int i = 0; i < 300; ++i) {
        TrafficSummary s;
        s.mean_egress_bytes = std::exp(7.0 + noise(rng));
        s.mean_ingress_bytes = std::exp(9.0 + noise(rng));
        normal.push_back(s);
    }
    std::vector<TrafficSummary> far;
    for (int i = 0; i < 50; ++i) {
        TrafficSummary s;
        s.mean_egress_bytes = std::exp(14.0 + noise(rng));
        s.mean_ingress_bytes = std::exp(9.0 + noise(rng));
        far.push_back(s);
    }
    std::vector<TrafficSummary> mimics(normal.begin(), normal.begin() + 50);

    const BaselineReport far_rep = baseline_raw_kde(normal, far, 0.02, 5, 1);
    CHECK(far_rep.miss_rate <= 0.05);
    CHECK(far_rep.train_fpr <= 0.05);

    const BaselineReport mimic_rep = baseline_raw_kde(normal, mimics, 0.02, 5, 1);
    CHECK(mimic_rep.miss_rate >= 0.9);

    CHECK_THROWS_AS(baseline_raw_kde({}, far), ContractError);
    CHECK_THROWS_AS(baseline_raw_kde(normal, {}), ContractError);
}

TEST_CASE("raw-byte features use epsilon-floored logs") {
    TrafficSummary s;
    s.mean_egress_bytes = 0.0;
    s.mean_ingress_bytes = 100.0;
    const auto f = raw_byte_features(s);
    REQUIRE(f.size() == 2);
    CHECK_THAT(f[0], Catch::Matchers::WithinRel(std::log(1e-3), 1e-12));
    CHECK_THAT(f[1], Catch::Matchers::WithinRel(std::log(100.0), 1e-12));
}
