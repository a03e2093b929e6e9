#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "srga/degradation_spec.hpp"
#include "srga/error.hpp"
#include "srga/featstore.hpp"
#include "srga/ggd.hpp"
#include "srga/image.hpp"
#include "srga/parallel.hpp"
#include "srga/pca.hpp"
#include "srga/pies.hpp"
#include "srga/probe_net.hpp"
#include "srga/rng.hpp"

namespace srga {

/// Which data the PCA basis is fitted on.
enum class PcaMode {
    Reference,   ///< fit on the reference set, apply to both
    Joint,       ///< fit on reference and test together
    PerDataset,  ///< each set gets its own basis
};

inline std::string to_string(PcaMode m) {
    switch (m) {
        case PcaMode::Reference:
            return "ref";
        case PcaMode::Joint:
            return "joint";
        case PcaMode::PerDataset:
            return "per-dataset";
    }
    return "?";
}

inline PcaMode parse_pca_mode(const std::string& s) {
    if (s == "ref") return PcaMode::Reference;
    if (s == "joint") return PcaMode::Joint;
    if (s == "per-dataset") return PcaMode::PerDataset;
    throw ParameterError("unknown PCA mode '" + s + "' (expected ref, joint or per-dataset)");
}

inline constexpr std::size_t kDefaultDim = 300;
inline constexpr double kDefaultDelta = 5.0;
inline constexpr double kPsnrCap = 100.0;

struct ScoreConfig {
    std::size_t dim = kDefaultDim;
    double delta = kDefaultDelta;
    PcaMode pca_mode = PcaMode::Reference;
    unsigned threads = 0;
};

// ---------------------------------------------------------------------------
// Index arithmetic.

/// log10(fdd + 10^-delta) + delta; 0 at fdd = 0, strictly increasing.
inline double srga_index(double fdd, double delta = kDefaultDelta) {
    if (!(fdd >= 0.0)) throw ContractError("FDD must be non-negative, got " + std::to_string(fdd));
    return std::log10(fdd + std::pow(10.0, -delta)) + delta;
}

inline double msrga(std::span<const double> indices) {
    if (indices.empty()) throw ContractError("mSRGA needs at least one test dataset");
    return std::accumulate(indices.begin(), indices.end(), 0.0) / static_cast<double>(indices.size());
}

/// PSNR in dB over all channels; identical images report kPsnrCap.
inline double psnr(const RgbImage& a, const RgbImage& b) {
    if (a.width != b.width || a.height != b.height) {
        throw DimensionError("PSNR of differently sized images");
    }
    double se = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
        se += d * d;
    }
    if (se == 0.0) return kPsnrCap;
    const double mse = se / static_cast<double>(a.data.size());
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

// ---------------------------------------------------------------------------
// Feature distribution distance.

struct FddResult {
    double fdd = 0.0;
    GgdFit ref;
    GgdFit test;
};

namespace detail {

inline void check_compatible(const FeatureSet& a, const FeatureSet& b) {
    if (a.h != b.h || a.w != b.w || a.c != b.c) {
        throw ContractError("feature shapes differ: (" + std::to_string(a.h) + "," + std::to_string(a.w) + "," +
                            std::to_string(a.c) + ") vs (" + std::to_string(b.h) + "," + std::to_string(b.w) +
                            "," + std::to_string(b.c) + ")");
    }
}

inline FeatureSet concatenate(const FeatureSet& a, const FeatureSet& b) {
    FeatureSet out(a.n + b.n, a.h, a.w, a.c);
    std::copy(a.data.begin(), a.data.end(), out.data.begin());
    std::copy(b.data.begin(), b.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(a.data.size()));
    out.model_id = a.model_id;
    out.dataset_id = a.dataset_id + "+" + b.dataset_id;
    out.layer_tag = a.layer_tag;
    return out;
}

inline GgdFit fit_projected(const PcaProjection& proj, const FeatureSet& set) {
    const auto x = project(proj, set);
    return fit_ggd_detailed(x.values());
}

}  // namespace detail

/// Reference side of a scoring run. In reference mode the PCA basis and the
/// reference GGD are fitted once and reused for every test set.
class ReferenceModel {
public:
    ReferenceModel(const FeatureSet& ref, ScoreConfig config) : ref_(&ref), config_(config) {
        if (ref.n < 2) throw ParameterError("reference set needs at least 2 tensors");
        if (config_.pca_mode != PcaMode::Joint && config_.dim > ref.n - 1) {
            throw ParameterError("PCA dimension " + std::to_string(config_.dim) + " exceeds N-1 = " +
                                 std::to_string(ref.n - 1) + " of reference set '" + ref.dataset_id + "'");
        }
        if (config_.pca_mode != PcaMode::Joint) {
            auto proj = fit_pca(ref, config_.dim);
            ref_fit_ = detail::fit_projected(proj, ref);
            if (config_.pca_mode == PcaMode::Reference) projection_ = std::move(proj);
        }
    }

    const ScoreConfig& config() const { return config_; }
    const FeatureSet& reference() const { return *ref_; }
    const std::optional<PcaProjection>& projection() const { return projection_; }

    FddResult score(const FeatureSet& test) const {
        detail::check_compatible(*ref_, test);
        FddResult r;
        switch (config_.pca_mode) {
            case PcaMode::Reference:
                r.ref = ref_fit_;
                r.test = detail::fit_projected(*projection_, test);
                break;
            case PcaMode::PerDataset:
                if (config_.dim > test.n - 1 || test.n < 2) {
                    throw ParameterError("PCA dimension " + std::to_string(config_.dim) +
                                         " exceeds N-1 of test set '" + test.dataset_id + "'");
                }
                r.ref = ref_fit_;
                r.test = detail::fit_projected(fit_pca(test, config_.dim), test);
                break;
            case PcaMode::Joint: {
                const auto proj = fit_pca(detail::concatenate(*ref_, test), config_.dim);
                r.ref = detail::fit_projected(proj, *ref_);
                r.test = detail::fit_projected(proj, test);
                break;
            }
        }
        r.fdd = ggd_kld(r.ref.params, r.test.params);
        return r;
    }

private:
    const FeatureSet* ref_;
    ScoreConfig config_;
    std::optional<PcaProjection> projection_;
    GgdFit ref_fit_;
};

/// KL divergence between the GGD fitted on the reference features and the
/// one fitted on the test features.
inline FddResult compute_fdd(const FeatureSet& ref, const FeatureSet& test, const ScoreConfig& config = {}) {
    return ReferenceModel(ref, config).score(test);
}

// ---------------------------------------------------------------------------
// Reports.

struct SrgaEntry {
    std::string test_id;
    std::string degradation;  ///< spec text when known
    double fdd = 0.0;
    double srga = 0.0;
    GgdParams ggd_ref;
    GgdParams ggd_test;
    std::vector<std::string> warnings;
};

struct SrgaReport {
    std::string model_id;
    std::string reference_id;
    double delta = kDefaultDelta;
    std::size_t dim = kDefaultDim;
    PcaMode pca_mode = PcaMode::Reference;
    std::vector<SrgaEntry> entries;
    double msrga = 0.0;
};

/// Throws if the report breaks its invariants: reference listed as a test,
/// SRGA not derived from FDD, or mSRGA not the entry mean.
inline void check_report(const SrgaReport& r) {
    if (r.entries.empty()) throw ContractError("report has no test entries");
    std::vector<double> idx;
    for (const auto& e : r.entries) {
        if (e.test_id == r.reference_id) {
            throw ContractError("reference dataset '" + r.reference_id + "' appears among the test datasets");
        }
        if (srga_index(e.fdd, r.delta) != e.srga) throw ContractError("entry '" + e.test_id + "' SRGA != f(FDD)");
        idx.push_back(e.srga);
    }
    if (msrga(idx) != r.msrga) throw ContractError("mSRGA is not the mean of the entries");
}

inline SrgaEntry make_entry(const std::string& test_id, const FddResult& r, double delta) {
    SrgaEntry e;
    e.test_id = test_id;
    e.fdd = r.fdd;
    e.srga = srga_index(r.fdd, delta);
    e.ggd_ref = r.ref.params;
    e.ggd_test = r.test.params;
    e.warnings = r.test.warnings;
    return e;
}

inline void finalize(SrgaReport& report) {
    std::vector<double> idx;
    for (const auto& e : report.entries) idx.push_back(e.srga);
    report.msrga = msrga(idx);
    check_report(report);
}

/// Scores every test set against the reference. Test sets are processed
/// concurrently; entry order follows `tests`.
inline SrgaReport build_report(const FeatureSet& ref, std::span<const FeatureSet* const> tests,
                               const ScoreConfig& config = {}) {
    if (tests.empty()) throw ContractError("no test datasets given");
    std::set<std::string> seen;
    for (const auto* t : tests) {
        if (t->dataset_id == ref.dataset_id || t == &ref) {
            throw ContractError("reference dataset '" + ref.dataset_id + "' must not be scored against itself");
        }
        if (!seen.insert(t->dataset_id).second) throw ContractError("duplicate test dataset '" + t->dataset_id + "'");
        detail::check_compatible(ref, *t);
    }
    const ReferenceModel model(ref, config);
    SrgaReport report;
    report.model_id = ref.model_id;
    report.reference_id = ref.dataset_id;
    report.delta = config.delta;
    report.dim = config.dim;
    report.pca_mode = config.pca_mode;
    report.entries.resize(tests.size());
    // Joint and per-dataset modes allocate a full PCA per test; keep those serial.
    const unsigned workers = config.pca_mode == PcaMode::Reference ? config.threads : 1;
    parallel_for(tests.size(), workers, [&](std::size_t i) {
        report.entries[i] = make_entry(tests[i]->dataset_id, model.score(*tests[i]), config.delta);
    });
    finalize(report);
    return report;
}

inline nlohmann::json to_json(const SrgaReport& r) {
    nlohmann::json j;
    j["model_id"] = r.model_id;
    j["reference_id"] = r.reference_id;
    j["delta"] = r.delta;
    j["D"] = r.dim;
    j["pca_mode"] = to_string(r.pca_mode);
    auto& entries = j["entries"] = nlohmann::json::array();
    for (const auto& e : r.entries) {
        nlohmann::json je{{"test_id", e.test_id},
                          {"fdd", e.fdd},
                          {"srga", e.srga},
                          {"ggd_ref", to_json(e.ggd_ref)},
                          {"ggd_test", to_json(e.ggd_test)}};
        if (!e.degradation.empty()) je["degradation"] = e.degradation;
        if (!e.warnings.empty()) je["warnings"] = e.warnings;
        entries.push_back(std::move(je));
    }
    j["msrga"] = r.msrga;
    return j;
}

inline SrgaReport report_from_json(const nlohmann::json& j) {
    SrgaReport r;
    try {
        r.model_id = j.at("model_id").get<std::string>();
        r.reference_id = j.at("reference_id").get<std::string>();
        r.delta = j.at("delta").get<double>();
        r.dim = j.at("D").get<std::size_t>();
        r.pca_mode = parse_pca_mode(j.at("pca_mode").get<std::string>());
        for (const auto& je : j.at("entries")) {
            SrgaEntry e;
            e.test_id = je.at("test_id").get<std::string>();
            e.degradation = je.value("degradation", "");
            e.fdd = je.at("fdd").get<double>();
            e.srga = je.at("srga").get<double>();
            e.ggd_ref = ggd_params_from_json(je.at("ggd_ref"));
            e.ggd_test = ggd_params_from_json(je.at("ggd_test"));
            e.warnings = je.value("warnings", std::vector<std::string>{});
            r.entries.push_back(std::move(e));
        }
        r.msrga = j.at("msrga").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed SRGA report: ") + e.what());
    }
    return r;
}

// ---------------------------------------------------------------------------
// CSV output: '.' decimal point, 17 significant digits.

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Scalar strength of a single-parameter degradation, or the quoted spec text.
inline std::string degradation_param(const DegradationSpec& s) {
    const bool jittered = s.kind != DegradationKind::LuminanceShift && s.lum_delta != 0.0;
    if (!jittered) {
        switch (s.kind) {
            case DegradationKind::Clean:
                return "0";
            case DegradationKind::IsoBlur:
                return format_double(s.blur_width);
            case DegradationKind::Noise:
                return format_double(s.noise_level);
            case DegradationKind::LuminanceShift:
                return format_double(s.lum_delta);
            default:
                break;
        }
    }
    return "\"" + to_string(s) + "\"";
}

inline constexpr const char* kCurveHeader = "degradation_param,srga,fdd,alpha,sigma";

inline std::string curve_row(const std::string& param, const SrgaEntry& e) {
    return param + "," + format_double(e.srga) + "," + format_double(e.fdd) + "," + format_double(e.ggd_test.alpha) +
           "," + format_double(e.ggd_test.sigma) + "\n";
}

// ---------------------------------------------------------------------------
// Feature sources: where the features of one degraded subset come from.

class FeatureSource {
public:
    virtual ~FeatureSource() = default;
    virtual FeatureSet features(const DegradationSpec& spec) = 0;
    virtual std::string model_id() const = 0;
};

/// Runs the probe network over LR patches synthesized on the fly from a fixed
/// list of HR patches.
class ProbeFeatureSource : public FeatureSource {
public:
    struct Options {
        std::uint64_t degradation_seed = 0;  ///< stream seed for noise / random kernels
        unsigned threads = 0;
        /// Multiplies network inputs; applied in floating point after 8-bit quantization.
        double input_scale = 1.0;
    };

    ProbeFeatureSource(ProbeNet net, std::vector<RgbImage> hr_patches, Options options)
        : net_(std::move(net)), hr_(std::move(hr_patches)), options_(options) {}
    ProbeFeatureSource(ProbeNet net, std::vector<RgbImage> hr_patches)
        : ProbeFeatureSource(std::move(net), std::move(hr_patches), Options{}) {}

    FeatureSet features(const DegradationSpec& spec) override {
        const auto lr = synthesize_lr(hr_, spec.with_seed(options_.degradation_seed), options_.threads);
        auto set = extract_features(net_, std::span<const RgbImage>(lr), options_.threads, options_.input_scale);
        set.dataset_id = dataset_name(spec);
        return set;
    }

    std::string model_id() const override { return net_.model_id(); }
    const std::vector<RgbImage>& hr_patches() const { return hr_; }
    const ProbeNet& net() const { return net_; }

private:
    ProbeNet net_;
    std::vector<RgbImage> hr_;
    Options options_;
};

/// Pre-exported feature files keyed by dataset name (see dataset_name()).
class FileFeatureSource : public FeatureSource {
public:
    FileFeatureSource(std::string model_id, std::map<std::string, std::filesystem::path> files)
        : model_id_(std::move(model_id)), files_(std::move(files)) {}

    FeatureSet features(const DegradationSpec& spec) override {
        const auto name = dataset_name(spec);
        auto it = files_.find(name);
        if (it == files_.end()) throw DataError("missing features for subset '" + name + "'");
        auto set = read_feature_file(it->second);
        set.dataset_id = name;
        return set;
    }

    std::string model_id() const override { return model_id_; }

private:
    std::string model_id_;
    std::map<std::string, std::filesystem::path> files_;
};

// ---------------------------------------------------------------------------
// Experiment harnesses.

struct CurveResult {
    SrgaReport report;
    std::vector<DegradationSpec> specs;  ///< in curve order
    std::string csv;
};

/// SRGA of each test degradation against the reference degradation, ordered
/// by severity. Test features are produced and discarded one at a time.
inline CurveResult run_sweep(FeatureSource& source, const DegradationSpec& ref_spec,
                             std::vector<DegradationSpec> test_specs, const ScoreConfig& config = {}) {
    if (test_specs.empty()) throw ContractError("sweep needs at least one test degradation");
    sort_by_severity(test_specs);
    const auto ref_name = dataset_name(ref_spec);
    for (const auto& s : test_specs) {
        if (dataset_name(s) == ref_name) {
            throw ContractError("reference degradation '" + to_string(ref_spec) + "' listed as a test degradation");
        }
    }
    const FeatureSet ref = source.features(ref_spec);
    const ReferenceModel model(ref, config);

    CurveResult out;
    out.specs = test_specs;
    out.report.model_id = source.model_id();
    out.report.reference_id = ref.dataset_id;
    out.report.delta = config.delta;
    out.report.dim = config.dim;
    out.report.pca_mode = config.pca_mode;
    out.csv = std::string(kCurveHeader) + "\n";
    for (const auto& spec : test_specs) {
        const FeatureSet test = source.features(spec);
        auto entry = make_entry(test.dataset_id, model.score(test), config.delta);
        entry.degradation = to_string(spec);
        out.csv += curve_row(degradation_param(spec), entry);
        out.report.entries.push_back(std::move(entry));
    }
    finalize(out.report);
    return out;
}

/// SRGA of `test_spec` with each global luminance offset added to the test LR
/// patches, against fixed reference features.
inline CurveResult run_jitter(FeatureSource& source, const FeatureSet& ref_features, const DegradationSpec& test_spec,
                              std::span<const double> deltas, const ScoreConfig& config = {}) {
    if (deltas.empty()) throw ContractError("jitter needs at least one luminance offset");
    const ReferenceModel model(ref_features, config);
    CurveResult out;
    out.report.model_id = source.model_id();
    out.report.reference_id = ref_features.dataset_id;
    out.report.delta = config.delta;
    out.report.dim = config.dim;
    out.report.pca_mode = config.pca_mode;
    out.csv = "lum_delta,srga,fdd,alpha,sigma\n";
    for (double d : deltas) {
        const auto spec = test_spec.with_luminance_jitter(d);
        FeatureSet test = source.features(spec);
        if (test.dataset_id == ref_features.dataset_id) test.dataset_id += "#jitter";
        auto entry = make_entry(test.dataset_id, model.score(test), config.delta);
        entry.degradation = to_string(spec);
        out.csv += curve_row(format_double(d), entry);
        out.specs.push_back(spec);
        out.report.entries.push_back(std::move(entry));
    }
    finalize(out.report);
    return out;
}

/// SRGA between two disjoint content subsets of the same degradation, the
/// first one acting as reference.
inline FddResult content_pair_fdd(const FeatureSet& pool, std::span<const std::size_t> a,
                                  std::span<const std::size_t> b, const ScoreConfig& config = {}) {
    if (a.size() != b.size()) throw ContractError("content subsets must have equal size");
    const std::set<std::size_t> sa(a.begin(), a.end());
    if (sa.size() != a.size()) throw ContractError("content subset repeats an index");
    for (std::size_t i : b)
        if (sa.count(i)) throw ContractError("content subsets overlap at index " + std::to_string(i));
    FeatureSet fa = select(pool, a);
    FeatureSet fb = select(pool, b);
    fa.dataset_id = pool.dataset_id + "#A";
    fb.dataset_id = pool.dataset_id + "#B";
    return compute_fdd(fa, fb, config);
}

struct ContentSplitRow {
    std::uint64_t seed = 0;
    GgdParams subset_a;
    GgdParams subset_b;
    double fdd = 0.0;
    double srga = 0.0;
};

struct ConvergenceRow {
    std::uint64_t seed = 0;
    std::size_t size = 0;
    GgdParams params;
};

struct ContentSplitReport {
    std::string model_id;
    std::string dataset_id;
    std::size_t subset_size = 0;
    std::vector<ContentSplitRow> splits;
    std::vector<ConvergenceRow> convergence;
};

/// Seeded permutation of [0, n): Fisher-Yates driven by Rng(seed).
inline std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.next_u64() % i);
        std::swap(p[i - 1], p[j]);
    }
    return p;
}

/// Content-insensitivity study on a pool of same-degradation features.
/// For every seed the pool is permuted and split into two disjoint subsets of
/// `subset_size`, scored against each other. The convergence table fits one
/// basis on the whole pool and records (alpha, sigma) on growing prefixes of
/// the permutation.
inline ContentSplitReport run_content_split(const FeatureSet& pool, std::span<const std::uint64_t> split_seeds,
                                            std::size_t subset_size, std::span<const std::size_t> sizes,
                                            const ScoreConfig& config = {}) {
    if (split_seeds.empty()) throw ContractError("content split needs at least one seed");
    if (2 * subset_size > pool.n) {
        throw ContractError("pool of " + std::to_string(pool.n) + " cannot hold two disjoint subsets of " +
                            std::to_string(subset_size));
    }
    ContentSplitReport rep;
    rep.model_id = pool.model_id;
    rep.dataset_id = pool.dataset_id;
    rep.subset_size = subset_size;
    for (std::uint64_t seed : split_seeds) {
        const auto perm = seeded_permutation(pool.n, seed);
        const std::span<const std::size_t> all(perm);
        const auto r = content_pair_fdd(pool, all.first(subset_size), all.subspan(subset_size, subset_size), config);
        rep.splits.push_back({seed, r.ref.params, r.test.params, r.fdd, srga_index(r.fdd, config.delta)});
    }
    if (!sizes.empty()) {
        const PcaProjection basis = fit_pca(pool, config.dim);
        const ProjectedFeatures x = project(basis, pool);
        for (std::uint64_t seed : split_seeds) {
            const auto perm = seeded_permutation(pool.n, seed);
            for (std::size_t s : sizes) {
                if (s > pool.n) throw ContractError("convergence size exceeds the pool");
                std::vector<double> values;
                values.reserve(s * basis.dim());
                for (std::size_t k = 0; k < s; ++k)
                    for (Eigen::Index j = 0; j < x.coefficients.cols(); ++j)
                        values.push_back(x.coefficients(static_cast<Eigen::Index>(perm[k]), j));
                rep.convergence.push_back({seed, s, fit_ggd_detailed(std::span<const double>(values)).params});
            }
        }
    }
    return rep;
}

inline nlohmann::json to_json(const ContentSplitReport& r) {
    nlohmann::json j;
    j["model_id"] = r.model_id;
    j["dataset_id"] = r.dataset_id;
    j["subset_size"] = r.subset_size;
    auto& splits = j["splits"] = nlohmann::json::array();
    for (const auto& s : r.splits) {
        splits.push_back({{"seed", s.seed},
                          {"ggd_a", to_json(s.subset_a)},
                          {"ggd_b", to_json(s.subset_b)},
                          {"fdd", s.fdd},
                          {"srga", s.srga}});
    }
    auto& conv = j["convergence"] = nlohmann::json::array();
    for (const auto& c : r.convergence) {
        conv.push_back({{"seed", c.seed}, {"size", c.size}, {"alpha", c.params.alpha}, {"sigma", c.params.sigma}});
    }
    return j;
}

}  // namespace srga
