// srga: command-line front end for PIES synthesis, probe features and SRGA scoring.

#include <CLI11.hpp>

#include <png.h>

#include <Eigen/Core>
#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "srga/srga.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

std::string preset_help() {
    std::ostringstream os;
    os << "Degradation specs (kind:params):\n"
       << "  clean\n"
       << "  blur:W              isotropic Gaussian blur of width W (HR pixels)\n"
       << "  aniso:S1,S2,THETA   anisotropic blur, 21x21 kernel; aniso:random draws S1,S2 in [0.6,5], THETA in [0,pi]\n"
       << "  noise:L             Gaussian noise of std L on the 0..255 scale (added to LR)\n"
       << "  blurnoise:W,L       blur then noise\n"
       << "  lum:D               global luminance offset D on LR; append '|lum:D' to any spec for a jitter\n"
       << "Preset grids:\n"
       << "  --all-blur       (16) blur:";
    const auto bw = srga::blur_width_presets();
    for (std::size_t i = 0; i < bw.size(); ++i) os << (i ? "," : "") << bw[i];
    os << "\n  --all-noise      (10) noise:";
    const auto nl = srga::noise_level_presets();
    for (std::size_t i = 0; i < nl.size(); ++i) os << (i ? "," : "") << nl[i];
    os << "\n  --all-blurnoise  (12) blurnoise:W,L with W in {1,2,4,6}, L in {10,20,30}\n"
       << "  clean is always synthesized alongside a preset grid.\n"
       << "Exit codes: 0 success, 2 validation error, 3 numeric/degenerate error.\n";
    return os.str();
}

json versions() {
    return {{"srga", srga::kVersion},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"libpng", PNG_LIBPNG_VER_STRING},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
            {"compiler", __VERSION__}};
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream os(path);
    if (!os) throw srga::IoError("cannot write " + path.string());
    os << j.dump(2) << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw srga::IoError("cannot write " + path.string());
    os << text;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw srga::IoError("cannot create " + dir.string() + ": " + ec.message());
}

void write_provenance(const fs::path& out, const std::vector<std::string>& args, std::uint64_t seed) {
    write_json(out / "provenance.json", {{"args", args}, {"seed", seed}, {"versions", versions()}});
}

std::vector<srga::DegradationSpec> parse_specs(const std::vector<std::string>& texts) {
    std::vector<srga::DegradationSpec> out;
    for (const auto& t : texts) out.push_back(srga::parse_degradation(t));
    return out;
}

void append(std::vector<srga::DegradationSpec>& dst, const std::vector<srga::DegradationSpec>& src) {
    dst.insert(dst.end(), src.begin(), src.end());
}

std::vector<srga::RgbImage> load_hr_patches(const fs::path& hr_dir, std::size_t count) {
    std::vector<srga::RgbImage> out;
    for (auto& s : srga::collect_hr_patches(hr_dir, count)) out.push_back(std::move(s.patch));
    return out;
}

std::string fixed(double v, int digits) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

void print_ranked(const srga::SrgaReport& r) {
    std::vector<std::size_t> order(r.entries.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return r.entries[a].srga < r.entries[b].srga; });
    std::cout << "model " << r.model_id << ", reference " << r.reference_id << " (D=" << r.dim
              << ", pca=" << srga::to_string(r.pca_mode) << ")\n";
    std::cout << std::left << std::setw(6) << "rank" << std::setw(28) << "test" << std::setw(12) << "SRGA"
              << std::setw(14) << "FDD" << "alpha/sigma\n";
    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto& e = r.entries[order[k]];
        std::cout << std::left << std::setw(6) << k + 1 << std::setw(28) << e.test_id << std::setw(12)
                  << fixed(e.srga, 4) << std::setw(14) << fixed(e.fdd, 6) << fixed(e.ggd_test.alpha, 3) << "/"
                  << fixed(e.ggd_test.sigma, 3) << '\n';
    }
    std::cout << "mSRGA " << fixed(r.msrga, 4) << '\n';
}

struct Common {
    unsigned threads = 0;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv, argv + argc);

    CLI::App app{"SRGA: generalization assessment for super-resolution networks"};
    app.footer(preset_help());
    app.require_subcommand(1);
    app.fallthrough();
    Common common;
    app.add_option("--threads", common.threads, "Worker threads (default: SRGA_THREADS or all cores)");

    // pies -----------------------------------------------------------------
    auto* pies = app.add_subcommand("pies", "PIES patch dataset tools");
    pies->require_subcommand(1);

    struct SynthArgs {
        fs::path hr_dir, out;
        std::vector<std::string> specs;
        bool all_blur = false, all_noise = false, all_blurnoise = false;
        std::size_t count = srga::kPiesSubsetSize;
        std::uint64_t seed = 0;
    } synth;
    auto* synth_cmd = pies->add_subcommand("synth", "Synthesize degraded LR/HR patch subsets");
    synth_cmd->footer(preset_help());
    synth_cmd->add_option("--hr-dir", synth.hr_dir, "Directory of HR source PNGs")->required();
    synth_cmd->add_option("--out", synth.out, "Output directory (one subdirectory per subset)")->required();
    synth_cmd->add_option("--spec", synth.specs, "Degradation spec, repeatable");
    synth_cmd->add_flag("--all-blur", synth.all_blur, "All 16 blur presets (plus clean)");
    synth_cmd->add_flag("--all-noise", synth.all_noise, "All 10 noise presets (plus clean)");
    synth_cmd->add_flag("--all-blurnoise", synth.all_blurnoise, "All 12 blur+noise presets (plus clean)");
    synth_cmd->add_option("--count", synth.count, "Patches per subset")->capture_default_str();
    synth_cmd->add_option("--seed", synth.seed, "Degradation seed")->capture_default_str();

    struct SourcesArgs {
        fs::path out;
        int count = 50;
        int size = 512;
        std::uint64_t seed = 0;
    } sources;
    auto* sources_cmd = pies->add_subcommand("sources", "Generate synthetic dead-leaves HR source images");
    sources_cmd->add_option("--out", sources.out, "Output directory")->required();
    sources_cmd->add_option("--count", sources.count, "Number of images")->capture_default_str();
    sources_cmd->add_option("--size", sources.size, "Image side length")->capture_default_str();
    sources_cmd->add_option("--seed", sources.seed, "Content seed")->capture_default_str();

    // features -------------------------------------------------------------
    auto* features = app.add_subcommand("features", "Feature extraction");
    features->require_subcommand(1);
    struct ProbeArgs {
        std::uint64_t seed = 0;
        fs::path lr_dir, out;
        std::string dataset_id;
    } probe;
    auto* probe_cmd = features->add_subcommand("probe", "Run the probe network over an LR patch directory");
    probe_cmd->add_option("--seed", probe.seed, "Network weight seed")->capture_default_str();
    probe_cmd->add_option("--lr-dir", probe.lr_dir, "Directory of LR PNG patches")->required();
    probe_cmd->add_option("--out", probe.out, "Output .npy file")->required();
    probe_cmd->add_option("--dataset-id", probe.dataset_id, "Dataset id (default: parent directory name)");

    // score / fit / rank ---------------------------------------------------
    struct ScoreArgs {
        fs::path ref, out;
        std::vector<fs::path> tests;
        std::size_t dim = srga::kDefaultDim;
        double delta = srga::kDefaultDelta;
        std::string pca_mode = "ref";
    } score;
    auto* score_cmd = app.add_subcommand("score", "SRGA of test feature files against a reference feature file");
    score_cmd->add_option("--ref", score.ref, "Reference features (.npy)")->required()->check(CLI::ExistingFile);
    score_cmd->add_option("--test", score.tests, "Test features (.npy), repeatable")->required()->check(CLI::ExistingFile);
    score_cmd->add_option("--D", score.dim, "PCA dimension")->capture_default_str();
    score_cmd->add_option("--delta", score.delta, "Log shift delta")->capture_default_str();
    score_cmd->add_option("--pca-mode", score.pca_mode, "ref | joint | per-dataset")->capture_default_str();
    score_cmd->add_option("--out", score.out, "Output directory")->required();

    struct FitArgs {
        std::vector<fs::path> features;
        fs::path basis, out;
        std::size_t dim = srga::kDefaultDim;
    } fit;
    auto* fit_cmd = app.add_subcommand("fit", "Fit GGD parameters to PCA-compressed features");
    fit_cmd->add_option("--features", fit.features, "Feature files (.npy), repeatable")->required()->check(CLI::ExistingFile);
    fit_cmd->add_option("--basis", fit.basis, "Fit the PCA basis on this file and apply it to all (default: per file)")
        ->check(CLI::ExistingFile);
    fit_cmd->add_option("--D", fit.dim, "PCA dimension")->capture_default_str();
    fit_cmd->add_option("--out", fit.out, "Output directory")->required();

    std::vector<fs::path> rank_reports;
    auto* rank_cmd = app.add_subcommand("rank", "Rank models by mSRGA across report files");
    rank_cmd->add_option("reports", rank_reports, "report.json files")->required()->check(CLI::ExistingFile);

    // experiments ----------------------------------------------------------
    struct ProbeExperiment {
        fs::path hr_dir, out;
        std::size_t count = srga::kPiesSubsetSize;
        std::uint64_t net_seed = 0, seed = 0;
        std::size_t dim = srga::kDefaultDim;
        double delta = srga::kDefaultDelta;
        std::string pca_mode = "ref";
    };
    auto add_probe_options = [](CLI::App* cmd, ProbeExperiment& e) {
        cmd->add_option("--hr-dir", e.hr_dir, "Directory of HR source PNGs")->required();
        cmd->add_option("--out", e.out, "Output directory")->required();
        cmd->add_option("--count", e.count, "Patches per subset")->capture_default_str();
        cmd->add_option("--net-seed", e.net_seed, "Probe network seed")->capture_default_str();
        cmd->add_option("--seed", e.seed, "Degradation seed")->capture_default_str();
        cmd->add_option("--D", e.dim, "PCA dimension")->capture_default_str();
        cmd->add_option("--delta", e.delta, "Log shift delta")->capture_default_str();
        cmd->add_option("--pca-mode", e.pca_mode, "ref | joint | per-dataset")->capture_default_str();
    };

    ProbeExperiment sweep;
    std::string sweep_ref = "clean";
    std::vector<std::string> sweep_tests;
    bool sweep_all_blur = false, sweep_all_noise = false, sweep_all_blurnoise = false;
    auto* sweep_cmd = app.add_subcommand("sweep", "SRGA curve of the probe network over a degradation sweep");
    sweep_cmd->footer(preset_help());
    add_probe_options(sweep_cmd, sweep);
    sweep_cmd->add_option("--ref", sweep_ref, "Reference degradation")->capture_default_str();
    sweep_cmd->add_option("--test", sweep_tests, "Test degradation, repeatable");
    sweep_cmd->add_flag("--all-blur", sweep_all_blur, "Add the 16 blur presets");
    sweep_cmd->add_flag("--all-noise", sweep_all_noise, "Add the 10 noise presets");
    sweep_cmd->add_flag("--all-blurnoise", sweep_all_blurnoise, "Add the 12 blur+noise presets");

    ProbeExperiment jitter;
    std::string jitter_ref = "clean", jitter_test = "blur:2";
    std::vector<double> jitter_deltas = {-10, -5, 0, 5, 10, 15, 20};
    auto* jitter_cmd = app.add_subcommand("jitter", "SRGA under global luminance jitter of the test patches");
    add_probe_options(jitter_cmd, jitter);
    jitter_cmd->add_option("--ref", jitter_ref, "Reference degradation")->capture_default_str();
    jitter_cmd->add_option("--test", jitter_test, "Test degradation")->capture_default_str();
    jitter_cmd->add_option("--deltas", jitter_deltas, "Luminance offsets")->delimiter(',')->capture_default_str();

    ProbeExperiment split;
    std::string split_spec = "clean";
    std::size_t split_subset = 400;
    std::vector<std::uint64_t> split_seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::vector<std::size_t> split_sizes = {50, 100, 200, 400, 800};
    auto* split_cmd = app.add_subcommand("content-split", "Content-insensitivity study on disjoint subsets");
    add_probe_options(split_cmd, split);
    split_cmd->add_option("--spec", split_spec, "Degradation of the pool")->capture_default_str();
    split_cmd->add_option("--subset", split_subset, "Subset size")->capture_default_str();
    split_cmd->add_option("--split-seeds", split_seeds, "Resplit seeds")->delimiter(',')->capture_default_str();
    split_cmd->add_option("--sizes", split_sizes, "Convergence table sizes")->delimiter(',')->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        if (*synth_cmd) {
            std::vector<srga::DegradationSpec> specs = parse_specs(synth.specs);
            if (synth.all_blur) append(specs, srga::blur_preset_specs());
            if (synth.all_noise) append(specs, srga::noise_preset_specs());
            if (synth.all_blurnoise) append(specs, srga::blurnoise_preset_specs());
            const bool has_clean = std::any_of(specs.begin(), specs.end(), [](const auto& s) {
                return s.kind == srga::DegradationKind::Clean && s.lum_delta == 0.0;
            });
            if ((synth.all_blur || synth.all_noise || synth.all_blurnoise) && !has_clean)
                specs.insert(specs.begin(), srga::DegradationSpec::clean());
            if (specs.empty()) throw srga::ParameterError("nothing to synthesize: give --spec or an --all-* grid");

            ensure_dir(synth.out);
            const auto sources_list = srga::collect_hr_patches(synth.hr_dir, synth.count);
            json index = json::array();
            for (const auto& spec : specs) {
                const auto name = srga::dataset_name(spec);
                srga::synth_pies(sources_list, synth.out / name, spec.with_seed(synth.seed), synth.count,
                                 common.threads);
                index.push_back({{"name", name}, {"spec", srga::to_string(spec)}, {"manifest", name + "/manifest.json"}});
                std::cout << name << ": " << synth.count << " pairs\n";
            }
            write_json(synth.out / "datasets.json", index);
            write_provenance(synth.out, args, synth.seed);
        } else if (*sources_cmd) {
            srga::DeadLeavesParams p;
            p.width = p.height = sources.size;
            srga::write_dead_leaves_sources(sources.out, sources.count, sources.seed, p);
            write_provenance(sources.out, args, sources.seed);
            std::cout << "wrote " << sources.count << " source images to " << sources.out << '\n';
        } else if (*probe_cmd) {
            const auto files = srga::list_pngs(probe.lr_dir);
            std::vector<srga::RgbImage> patches;
            for (const auto& f : files) patches.push_back(srga::read_png(f));
            const srga::ProbeNet net(probe.seed);
            auto set = srga::extract_features(net, std::span<const srga::RgbImage>(patches), common.threads);
            set.dataset_id = probe.dataset_id.empty()
                                 ? fs::absolute(probe.lr_dir).lexically_normal().parent_path().filename().string()
                                 : probe.dataset_id;
            if (set.dataset_id.empty() || set.dataset_id == "lr")
                set.dataset_id = fs::absolute(probe.lr_dir).lexically_normal().filename().string();
            if (probe.out.has_parent_path()) fs::create_directories(probe.out.parent_path());
            srga::write_feature_file(set, probe.out);
            std::cout << "features " << set.n << "x" << set.h << "x" << set.w << "x" << set.c << " -> " << probe.out
                      << '\n';
        } else if (*score_cmd) {
            srga::ScoreConfig cfg{score.dim, score.delta, srga::parse_pca_mode(score.pca_mode), common.threads};
            const auto ref_abs = fs::weakly_canonical(score.ref);
            for (const auto& t : score.tests) {
                if (fs::weakly_canonical(t) == ref_abs) {
                    throw srga::ContractError("reference file " + score.ref.string() +
                                              " is also listed as a test file");
                }
            }
            const auto ref = srga::read_feature_file(score.ref);
            std::vector<srga::FeatureSet> tests;
            for (const auto& t : score.tests) tests.push_back(srga::read_feature_file(t));
            std::vector<const srga::FeatureSet*> ptrs;
            for (const auto& t : tests) ptrs.push_back(&t);
            const auto report = srga::build_report(ref, ptrs, cfg);

            ensure_dir(score.out);
            json rj = srga::to_json(report);
            rj["provenance"] = {{"ref_file", score.ref.string()}, {"pca_mode", score.pca_mode}};
            write_json(score.out / "report.json", rj);
            std::string csv = std::string(srga::kCurveHeader) + "\n";
            for (const auto& e : report.entries) csv += srga::curve_row("\"" + e.test_id + "\"", e);
            write_text(score.out / "curve.csv", csv);
            write_provenance(score.out, args, 0);
            print_ranked(report);
        } else if (*fit_cmd) {
            std::vector<srga::FeatureSet> sets;
            for (const auto& f : fit.features) sets.push_back(srga::read_feature_file(f));
            std::optional<srga::PcaProjection> shared;
            if (!fit.basis.empty()) shared = srga::fit_pca(srga::read_feature_file(fit.basis), fit.dim);
            json out = json::array();
            std::vector<srga::GgdParams> params;
            for (const auto& s : sets) {
                const auto proj = shared ? *shared : srga::fit_pca(s, fit.dim);
                const auto x = srga::project(proj, s);
                const auto g = srga::fit_ggd_detailed(x.values());
                for (const auto& w : g.warnings) srga::warn(s.dataset_id + ": " + w);
                params.push_back(g.params);
                out.push_back({{"dataset_id", s.dataset_id},
                               {"model_id", s.model_id},
                               {"alpha", g.params.alpha},
                               {"sigma", g.params.sigma},
                               {"D", fit.dim},
                               {"n_samples", g.n_samples},
                               {"pca_mode", shared ? "ref" : "per-dataset"}});
            }
            ensure_dir(fit.out);
            write_json(fit.out / "ggd_params.json", out);
            write_provenance(fit.out, args, 0);
            // Method x degradation table: one sigma row and one alpha row per model.
            std::map<std::string, std::vector<std::size_t>> by_model;
            for (std::size_t i = 0; i < sets.size(); ++i) by_model[sets[i].model_id].push_back(i);
            for (const auto& [model, idx] : by_model) {
                std::cout << std::left << std::setw(24) << "Methods" << std::setw(7) << "";
                for (auto i : idx) std::cout << std::setw(14) << sets[i].dataset_id;
                std::cout << '\n' << std::setw(24) << model << std::setw(7) << "sigma";
                for (auto i : idx) std::cout << std::setw(14) << fixed(params[i].sigma, 3);
                std::cout << '\n' << std::setw(24) << "" << std::setw(7) << "alpha";
                for (auto i : idx) std::cout << std::setw(14) << fixed(params[i].alpha, 3);
                std::cout << '\n';
            }
        } else if (*rank_cmd) {
            std::vector<srga::SrgaReport> reports;
            for (const auto& p : rank_reports) {
                std::ifstream is(p);
                json j;
                try {
                    is >> j;
                } catch (const json::exception& e) {
                    throw srga::FormatError(p.string() + ": " + e.what());
                }
                reports.push_back(srga::report_from_json(j));
                srga::check_report(reports.back());
            }
            std::stable_sort(reports.begin(), reports.end(),
                             [](const auto& a, const auto& b) { return a.msrga < b.msrga; });
            std::cout << std::left << std::setw(6) << "rank" << std::setw(32) << "model" << std::setw(20)
                      << "reference" << "mSRGA\n";
            for (std::size_t k = 0; k < reports.size(); ++k) {
                std::cout << std::left << std::setw(6) << k + 1 << std::setw(32) << reports[k].model_id
                          << std::setw(20) << reports[k].reference_id << fixed(reports[k].msrga, 4) << '\n';
            }
        } else if (*sweep_cmd || *jitter_cmd || *split_cmd) {
            ProbeExperiment& e = *sweep_cmd ? sweep : (*jitter_cmd ? jitter : split);
            srga::ScoreConfig cfg{e.dim, e.delta, srga::parse_pca_mode(e.pca_mode), common.threads};
            srga::ProbeFeatureSource source(srga::ProbeNet(e.net_seed), load_hr_patches(e.hr_dir, e.count),
                                            {e.seed, common.threads, 1.0});
            ensure_dir(e.out);
            if (*sweep_cmd) {
                auto tests = parse_specs(sweep_tests);
                if (sweep_all_blur) append(tests, srga::blur_preset_specs());
                if (sweep_all_noise) append(tests, srga::noise_preset_specs());
                if (sweep_all_blurnoise) append(tests, srga::blurnoise_preset_specs());
                const auto result = srga::run_sweep(source, srga::parse_degradation(sweep_ref), tests, cfg);
                write_json(e.out / "report.json", srga::to_json(result.report));
                write_text(e.out / "curve.csv", result.csv);
                print_ranked(result.report);
            } else if (*jitter_cmd) {
                const auto ref = source.features(srga::parse_degradation(jitter_ref));
                const auto result =
                    srga::run_jitter(source, ref, srga::parse_degradation(jitter_test), jitter_deltas, cfg);
                write_json(e.out / "report.json", srga::to_json(result.report));
                write_text(e.out / "jitter.csv", result.csv);
                std::cout << result.csv;
            } else {
                const auto pool = source.features(srga::parse_degradation(split_spec));
                const auto rep = srga::run_content_split(pool, split_seeds, split_subset, split_sizes, cfg);
                write_json(e.out / "content_split.json", srga::to_json(rep));
                for (const auto& s : rep.splits)
                    std::cout << "seed " << s.seed << ": SRGA " << fixed(s.srga, 4) << '\n';
            }
            write_provenance(e.out, args, e.seed);
        }
    } catch (const srga::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const srga::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    }
    return 0;
}
