#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "srga/srga.hpp"
#include "test_util.hpp"

using namespace srga;

namespace {

FeatureSet gaussian_set(std::size_t n, std::size_t m, double scale, std::uint64_t seed, const std::string& id) {
    FeatureSet s(n, 1, 1, m);
    std::mt19937_64 eng(seed);
    std::normal_distribution<float> d;
    for (auto& v : s.data) v = static_cast<float>(scale) * d(eng);
    s.dataset_id = id;
    s.model_id = "toy";
    return s;
}

/// 16 HR patches from four 256x256 dead-leaves images.
std::vector<RgbImage> small_hr_fixture() {
    std::vector<RgbImage> hr;
    DeadLeavesParams p;
    p.width = p.height = 256;
    for (std::uint64_t i = 0; i < 4; ++i)
        for (auto& patch : extract_patches(dead_leaves_image(p, stream_seed(11, i)), 128)) hr.push_back(patch);
    return hr;
}

}  // namespace

// --- index arithmetic ---------------------------------------------------------

TEST(SrgaIndex, Examples) {
    EXPECT_EQ(srga_index(0.0), 0.0);
    EXPECT_NEAR(srga_index(1e-5), std::log10(2.0), 1e-12);
    EXPECT_NEAR(srga_index(1e-5), 0.30103, 1e-5);
    EXPECT_NEAR(srga_index(1.0), 5.0000043, 1e-7);
    EXPECT_THROW(srga_index(-1e-9), ContractError);
    EXPECT_THROW(srga_index(std::nan("")), ContractError);
    EXPECT_NEAR(srga_index(0.0, 3.0), 0.0, 1e-15);
}

TEST(SrgaIndex, StrictlyIncreasing) {
    std::mt19937_64 eng(1);
    std::uniform_real_distribution<double> le(-12, 3);
    for (int i = 0; i < 10000; ++i) {
        double a = std::pow(10.0, le(eng)), b = std::pow(10.0, le(eng));
        if (a == b) continue;
        if (a > b) std::swap(a, b);
        EXPECT_LT(srga_index(a), srga_index(b));
        EXPECT_GE(srga_index(a), 0.0);
    }
}

TEST(Msrga, Mean) {
    const std::vector<double> one{2.0}, two{1.0, 3.0};
    EXPECT_EQ(msrga(one), 2.0);
    EXPECT_EQ(msrga(two), 2.0);
    EXPECT_THROW(msrga(std::span<const double>()), ContractError);
}

TEST(Psnr, Examples) {
    const auto a = testutil::constant_image(8, 8, 100);
    EXPECT_EQ(psnr(a, a), 100.0);
    EXPECT_NEAR(psnr(a, testutil::constant_image(8, 8, 101)), 10 * std::log10(255.0 * 255.0), 1e-12);
    EXPECT_NEAR(psnr(a, testutil::constant_image(8, 8, 101)), 48.13, 5e-3);
    EXPECT_NEAR(psnr(a, testutil::constant_image(8, 8, 84)), 24.05, 5e-3);
    EXPECT_THROW(psnr(a, testutil::constant_image(8, 9, 1)), DimensionError);
}

// --- FDD ----------------------------------------------------------------------

TEST(Fdd, SameSetIsZero) {
    const auto ref = gaussian_set(40, 50, 1.0, 1, "r");
    for (auto mode : {PcaMode::Reference, PcaMode::Joint, PcaMode::PerDataset}) {
        const auto r = compute_fdd(ref, ref, {10, 5.0, mode, 1});
        EXPECT_EQ(r.fdd, 0.0);
        EXPECT_EQ(srga_index(r.fdd), 0.0);
    }
}

TEST(Fdd, ScaledTestIsPositiveAndGrows) {
    const auto ref = gaussian_set(2000, 20, 1.0, 2, "r");
    const auto t1 = gaussian_set(2000, 20, 1.2, 3, "t1");
    const auto t2 = gaussian_set(2000, 20, 2.0, 4, "t2");
    const ScoreConfig cfg{10, 5.0, PcaMode::Reference, 1};
    EXPECT_GT(compute_fdd(ref, t1, cfg).fdd, 0.0);
    EXPECT_GT(compute_fdd(ref, t2, cfg).fdd, compute_fdd(ref, t1, cfg).fdd);
}

TEST(Fdd, DimensionTooLargeForReference) {
    const auto ref = gaussian_set(100, 400, 1.0, 5, "r");
    const auto t = gaussian_set(100, 400, 1.0, 6, "t");
    EXPECT_THROW(compute_fdd(ref, t, {300, 5.0, PcaMode::Reference, 1}), ParameterError);
    EXPECT_THROW(compute_fdd(ref, t, {300, 5.0, PcaMode::PerDataset, 1}), ParameterError);
}

TEST(Fdd, ShapeMismatchIsContractError) {
    const auto ref = gaussian_set(30, 50, 1.0, 7, "r");
    const auto t = gaussian_set(30, 51, 1.0, 8, "t");
    EXPECT_THROW(compute_fdd(ref, t, {5, 5.0, PcaMode::Reference, 1}), ContractError);
}

TEST(Fdd, DegenerateTestPropagates) {
    const auto ref = gaussian_set(30, 50, 1.0, 9, "r");
    FeatureSet t(30, 1, 1, 50);
    for (std::size_t i = 0; i < t.data.size(); ++i) t.data[i] = 0.0f;
    // Projecting the zero set gives -mean * P, not all equal; a set equal to
    // the reference mean is exactly degenerate.
    const ReferenceModel m(ref, {5, 5.0, PcaMode::Reference, 1});
    FeatureSet at_mean(30, 1, 1, 50);
    for (std::size_t i = 0; i < 30; ++i)
        for (std::size_t j = 0; j < 50; ++j)
            at_mean.data[i * 50 + j] = static_cast<float>(m.projection()->mean[static_cast<Eigen::Index>(j)]);
    EXPECT_NO_THROW(m.score(t));
    const auto r = [&] {
        try {
            return m.score(at_mean).fdd;
        } catch (const DegenerateError&) {
            return -1.0;
        }
    }();
    // Float storage of the mean leaves tiny residues; either outcome is a
    // valid answer, but it must not be NaN.
    EXPECT_FALSE(std::isnan(r));
}

TEST(Fdd, ModesAgreeOnOrderingForClearShift) {
    const auto ref = gaussian_set(80, 60, 1.0, 10, "r");
    const auto near = gaussian_set(80, 60, 1.1, 11, "near");
    const auto far = gaussian_set(80, 60, 3.0, 12, "far");
    for (auto mode : {PcaMode::Reference, PcaMode::Joint, PcaMode::PerDataset}) {
        const ScoreConfig cfg{20, 5.0, mode, 1};
        EXPECT_LT(compute_fdd(ref, near, cfg).fdd, compute_fdd(ref, far, cfg).fdd) << to_string(mode);
    }
}

// --- reports ------------------------------------------------------------------

TEST(Report, InvariantsAndJsonRoundTrip) {
    const auto ref = gaussian_set(50, 40, 1.0, 13, "clean");
    const auto a = gaussian_set(50, 40, 1.3, 14, "blur1");
    const auto b = gaussian_set(50, 40, 1.7, 15, "blur2");
    const std::vector<const FeatureSet*> tests{&a, &b};
    const auto r = build_report(ref, tests, {10, 5.0, PcaMode::Reference, 2});
    ASSERT_EQ(r.entries.size(), 2u);
    EXPECT_EQ(r.reference_id, "clean");
    for (const auto& e : r.entries) {
        EXPECT_NE(e.test_id, r.reference_id);
        EXPECT_EQ(e.srga, srga_index(e.fdd, r.delta));
        EXPECT_GE(e.srga, 0.0);
    }
    EXPECT_EQ(r.msrga, (r.entries[0].srga + r.entries[1].srga) / 2);
    EXPECT_NO_THROW(check_report(r));

    const auto j = to_json(r);
    EXPECT_EQ(j.at("D"), 10);
    EXPECT_EQ(j.at("pca_mode"), "ref");
    const auto back = report_from_json(nlohmann::json::parse(j.dump()));
    EXPECT_NO_THROW(check_report(back));
    EXPECT_EQ(back.entries[1].fdd, r.entries[1].fdd);
    EXPECT_EQ(back.entries[1].srga, r.entries[1].srga);
    EXPECT_EQ(to_json(back).dump(), j.dump());
}

TEST(Report, DeterministicBytes) {
    const auto ref = gaussian_set(50, 40, 1.0, 16, "clean");
    const auto a = gaussian_set(50, 40, 1.3, 17, "t");
    const std::vector<const FeatureSet*> tests{&a};
    const auto j1 = to_json(build_report(ref, tests, {10, 5.0, PcaMode::Reference, 1})).dump(2);
    const auto j2 = to_json(build_report(ref, tests, {10, 5.0, PcaMode::Reference, 3})).dump(2);
    EXPECT_EQ(j1, j2);
}

TEST(Report, ReferenceExcludedAndDuplicatesRejected) {
    const auto ref = gaussian_set(50, 40, 1.0, 18, "clean");
    const auto a = gaussian_set(50, 40, 1.3, 19, "t");
    const std::vector<const FeatureSet*> with_ref{&a, &ref};
    EXPECT_THROW(build_report(ref, with_ref, {10, 5.0, PcaMode::Reference, 1}), ContractError);
    const std::vector<const FeatureSet*> dup{&a, &a};
    EXPECT_THROW(build_report(ref, dup, {10, 5.0, PcaMode::Reference, 1}), ContractError);

    SrgaReport bad;
    bad.reference_id = "x";
    bad.delta = 5;
    bad.entries.push_back({"x", "", 0.1, srga_index(0.1), {}, {}, {}});
    bad.msrga = bad.entries[0].srga;
    EXPECT_THROW(check_report(bad), ContractError);
    bad.entries[0].test_id = "y";
    EXPECT_NO_THROW(check_report(bad));
    bad.entries[0].srga = std::nextafter(bad.entries[0].srga, 10.0);
    EXPECT_THROW(check_report(bad), ContractError);
}

TEST(Csv, SeventeenDigitFormatting) {
    EXPECT_EQ(format_double(0.1), "0.10000000000000001");
    EXPECT_EQ(format_double(2.0), "2");
    EXPECT_EQ(degradation_param(DegradationSpec::iso_blur(2.5)), "2.5");
    EXPECT_EQ(degradation_param(DegradationSpec::noise(30)), "30");
    EXPECT_EQ(std::string(kCurveHeader), "degradation_param,srga,fdd,alpha,sigma");
}

TEST(PcaModeText, RoundTrip) {
    for (auto m : {PcaMode::Reference, PcaMode::Joint, PcaMode::PerDataset})
        EXPECT_EQ(parse_pca_mode(to_string(m)), m);
    EXPECT_THROW(parse_pca_mode("whiten"), ParameterError);
}

// --- harnesses ------------------------------------------------------------------

TEST(Sweep, EmptyOrSelfReferencingListRejected) {
    ProbeFeatureSource src(ProbeNet(0), small_hr_fixture());
    EXPECT_THROW(run_sweep(src, DegradationSpec::clean(), {}, {5, 5.0, PcaMode::Reference, 1}), ContractError);
    EXPECT_THROW(run_sweep(src, DegradationSpec::clean(), {DegradationSpec::clean()}, {5, 5.0, PcaMode::Reference, 1}),
                 ContractError);
}

TEST(Sweep, MissingSubsetFeatures) {
    FileFeatureSource src("m", {});
    EXPECT_THROW(src.features(DegradationSpec::iso_blur(2)), DataError);
}

TEST(Sweep, OrderedBySeverityWithCsv) {
    ProbeFeatureSource src(ProbeNet(0), small_hr_fixture());
    const auto r = run_sweep(src, DegradationSpec::clean(),
                             {DegradationSpec::iso_blur(4), DegradationSpec::iso_blur(1), DegradationSpec::iso_blur(2)},
                             {10, 5.0, PcaMode::Reference, 1});
    ASSERT_EQ(r.report.entries.size(), 3u);
    EXPECT_EQ(r.report.entries[0].test_id, "blur1");
    EXPECT_EQ(r.report.entries[2].test_id, "blur4");
    EXPECT_EQ(r.csv.substr(0, r.csv.find('\n')), kCurveHeader);
    EXPECT_EQ(std::count(r.csv.begin(), r.csv.end(), '\n'), 4);
    EXPECT_NO_THROW(check_report(r.report));
}

TEST(ProbeRegression, CleanVersusBlurFixture) {
    // Values frozen from the first run of this pipeline.
    ProbeFeatureSource src(ProbeNet(0), small_hr_fixture());
    const auto clean = src.features(DegradationSpec::clean());
    const auto blur = src.features(DegradationSpec::iso_blur(2));
    const auto r = compute_fdd(clean, blur, {10, 5.0, PcaMode::Reference, 1});
    constexpr double kCleanAlpha = 1.4621938266209324, kCleanSigma = 8.5015304845880433;
    constexpr double kBlurAlpha = 1.3917093593045138, kBlurSigma = 8.0097077877351026, kFdd = 0.0032669467862084245;
    EXPECT_NEAR(r.ref.params.alpha, kCleanAlpha, 1e-6 * kCleanAlpha) << std::setprecision(17) << r.ref.params.alpha;
    EXPECT_NEAR(r.ref.params.sigma, kCleanSigma, 1e-6 * kCleanSigma) << std::setprecision(17) << r.ref.params.sigma;
    EXPECT_NEAR(r.test.params.alpha, kBlurAlpha, 1e-6 * kBlurAlpha) << std::setprecision(17) << r.test.params.alpha;
    EXPECT_NEAR(r.test.params.sigma, kBlurSigma, 1e-6 * kBlurSigma) << std::setprecision(17) << r.test.params.sigma;
    EXPECT_NEAR(r.fdd, kFdd, 1e-5 * kFdd) << std::setprecision(17) << r.fdd;
    EXPECT_GT(r.fdd, 0.0);
}

TEST(Jitter, ZeroDeltaEqualsUnjittered) {
    ProbeFeatureSource src(ProbeNet(0), small_hr_fixture());
    const ScoreConfig cfg{10, 5.0, PcaMode::Reference, 1};
    const auto ref = src.features(DegradationSpec::clean());
    const std::vector<double> deltas{-10, 0, 20};
    const auto j = run_jitter(src, ref, DegradationSpec::iso_blur(2), deltas, cfg);
    ASSERT_EQ(j.report.entries.size(), 3u);
    const auto plain = compute_fdd(ref, src.features(DegradationSpec::iso_blur(2)), cfg);
    EXPECT_EQ(j.report.entries[1].fdd, plain.fdd);
    EXPECT_EQ(j.report.entries[1].srga, srga_index(plain.fdd));
    EXPECT_EQ(j.csv.substr(0, j.csv.find('\n')), "lum_delta,srga,fdd,alpha,sigma");
}

TEST(Jitter, SaturatingDeltasRun) {
    ProbeFeatureSource src(ProbeNet(0), small_hr_fixture());
    const ScoreConfig cfg{10, 5.0, PcaMode::Reference, 1};
    const auto ref = src.features(DegradationSpec::clean());
    const std::vector<double> deltas{-255, 255};
    CurveResult j;
    ASSERT_NO_THROW(j = run_jitter(src, ref, DegradationSpec::clean(), deltas, cfg));
    for (const auto& e : j.report.entries) EXPECT_GT(e.srga, 1.0);
}

TEST(ContentSplit, OverlapAndIdenticalSubsetsRejected) {
    const auto pool = gaussian_set(40, 30, 1.0, 20, "pool");
    const std::vector<std::size_t> a{0, 1, 2, 3, 4, 5, 6, 7}, b{7, 8, 9, 10, 11, 12, 13, 14};
    EXPECT_THROW(content_pair_fdd(pool, a, b, {3, 5.0, PcaMode::Reference, 1}), ContractError);
    EXPECT_THROW(content_pair_fdd(pool, a, a, {3, 5.0, PcaMode::Reference, 1}), ContractError);
    const std::vector<std::size_t> c{8, 9, 10, 11, 12, 13, 14, 15};
    EXPECT_NO_THROW(content_pair_fdd(pool, a, c, {3, 5.0, PcaMode::Reference, 1}));
    const std::vector<std::uint64_t> seeds{1};
    const std::vector<std::size_t> sizes{};
    EXPECT_THROW(run_content_split(pool, seeds, 21, sizes, {3, 5.0, PcaMode::Reference, 1}), ContractError);
}

TEST(ContentSplit, PermutationIsSeededAndComplete) {
    const auto p = seeded_permutation(100, 3);
    EXPECT_EQ(p, seeded_permutation(100, 3));
    EXPECT_NE(p, seeded_permutation(100, 4));
    auto sorted = p;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(sorted[i], i);
}

TEST(ContentSplit, ConvergenceOrderingMajorityOverTenSeeds) {
    // 800-patch clean pool from 50 dead-leaves sources.
    std::vector<RgbImage> hr;
    for (std::uint64_t i = 0; i < 50; ++i)
        for (auto& patch : extract_patches(dead_leaves_image({}, stream_seed(7, i)), 128)) hr.push_back(patch);
    ASSERT_EQ(hr.size(), 800u);
    ProbeFeatureSource src(ProbeNet(0), std::move(hr));
    const auto pool = src.features(DegradationSpec::clean());
    std::vector<std::uint64_t> seeds(10);
    std::iota(seeds.begin(), seeds.end(), 1);
    const std::vector<std::size_t> sizes{50, 100, 200, 400, 800};
    ScoreConfig cfg;
    cfg.pca_mode = PcaMode::Joint;
    const auto rep = run_content_split(pool, seeds, 400, sizes, cfg);
    ASSERT_EQ(rep.convergence.size(), 50u);
    int votes = 0;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
        const auto& c = std::span(rep.convergence).subspan(s * 5, 5);
        if (std::abs(c[4].params.alpha - c[3].params.alpha) < std::abs(c[1].params.alpha - c[0].params.alpha)) ++votes;
    }
    EXPECT_GT(votes, 5) << votes << " of 10";
}
