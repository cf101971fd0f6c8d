// hrvbench: HRV stress-detection pipeline CLI.
//
// Subcommands: features, eval loso|cross|combined, synth ecg|bvp|features,
// report. Exit codes: 0 success, 2 user/validation error, 1 internal error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hrv/hrv.hpp"

namespace fs = std::filesystem;

namespace {

std::uint64_t master_seed_fallback() {
    if (const char* env = std::getenv("HRVBENCH_SEED")) return std::strtoull(env, nullptr, 10);
    return 0;
}

std::vector<hrv::ModelKind> parse_kinds(const std::string& csv) {
    std::vector<hrv::ModelKind> kinds;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) kinds.push_back(hrv::model_kind_from_string(item));
    if (kinds.empty()) throw hrv::SchemaError("no model kinds given");
    return kinds;
}

hrv::LabelScheme resolve_scheme(const std::string& scheme_arg, const std::string& dataset_id) {
    const auto builtins = hrv::built_in_schemes();
    if (scheme_arg.empty()) {
        const auto it = builtins.find(dataset_id);
        if (it == builtins.end())
            throw hrv::ManifestError("no built-in label scheme for dataset " + dataset_id +
                                     "; pass --scheme");
        return it->second;
    }
    if (const auto it = builtins.find(scheme_arg); it != builtins.end()) return it->second;
    std::ifstream in(scheme_arg);
    if (!in) throw hrv::IngestionError("cannot open label scheme: " + scheme_arg);
    nlohmann::json j;
    in >> j;
    return hrv::scheme_from_json(j);
}

int run(int argc, char** argv) {
    CLI::App app{"HRV-based stress detection: features, models, evaluation protocols"};
    app.require_subcommand(1);

    // --- features ---
    auto* cmd_features = app.add_subcommand("features", "Build a feature table from a manifest");
    std::string manifest_path, scheme_arg, table_out, exclusions_out;
    bool plaus = false;
    cmd_features->add_option("manifest", manifest_path, "dataset manifest JSON")->required();
    cmd_features->add_option("--scheme", scheme_arg, "built-in scheme id or scheme JSON path");
    cmd_features->add_option("--out", table_out, "output feature table CSV")->required();
    cmd_features->add_option("--exclusions", exclusions_out, "exclusion report JSON path");
    cmd_features->add_flag("--plausibility-filter", plaus, "drop intervals outside 250-2000 ms");

    // --- eval ---
    auto* cmd_eval = app.add_subcommand("eval", "Run an evaluation protocol");
    cmd_eval->require_subcommand(1);
    std::string kinds_csv = "RFC,SVM,MLP", out_dir = ".";
    std::uint64_t seed = master_seed_fallback();
    int parallelism = 1;
    std::vector<std::string> table_paths;
    std::string source_table, target_table;
    for (auto* sub : {cmd_eval->add_subcommand("loso", "within-dataset LOSO"),
                      cmd_eval->add_subcommand("cross", "cross-dataset transfer"),
                      cmd_eval->add_subcommand("combined", "combined-dataset LOSO")}) {
        sub->add_option("--kind", kinds_csv, "comma-separated model kinds (default all)");
        sub->add_option("--seed", seed, "master seed (env HRVBENCH_SEED as fallback)");
        sub->add_option("--out-dir", out_dir, "output directory");
        sub->add_option("--parallelism", parallelism, "worker threads for folds")
            ->check(CLI::PositiveNumber);
    }
    cmd_eval->get_subcommand("loso")
        ->add_option("--table", table_paths, "feature table CSV")
        ->required();
    cmd_eval->get_subcommand("cross")
        ->add_option("--source", source_table, "source feature table (LOSO models trained here)")
        ->required();
    cmd_eval->get_subcommand("cross")
        ->add_option("--target", target_table, "target feature table")
        ->required();
    cmd_eval->get_subcommand("combined")
        ->add_option("--tables", table_paths, "two or more feature tables")
        ->required()
        ->expected(2, -1);

    // --- synth ---
    auto* cmd_synth = app.add_subcommand("synth", "Generate synthetic signals or feature sets");
    cmd_synth->require_subcommand(1);
    double bpm = 60.0, duration = 60.0, rate = 700.0, mod_freq = 0.0, mod_depth = 0.0;
    double baseline_amp = 0.0, powerline_amp = 0.0, snr_db = 0.0;
    std::uint64_t synth_seed = 0;
    std::string synth_out = "synth";
    std::size_t n_per_class = 100, n_participants = 10;
    double separation = 4.0;
    for (auto* sub : {cmd_synth->add_subcommand("ecg", "annotated synthetic ECG"),
                      cmd_synth->add_subcommand("bvp", "annotated synthetic BVP")}) {
        sub->add_option("--bpm", bpm, "mean heart rate");
        sub->add_option("--duration", duration, "seconds");
        sub->add_option("--rate", rate, "sampling rate Hz");
        sub->add_option("--mod-freq", mod_freq, "HRV modulation frequency Hz");
        sub->add_option("--mod-depth", mod_depth, "HRV modulation depth ms");
        sub->add_option("--baseline-amp", baseline_amp, "baseline wander amplitude");
        sub->add_option("--powerline-amp", powerline_amp, "powerline amplitude");
        sub->add_option("--snr-db", snr_db, "white-noise SNR in dB (0 disables)");
        sub->add_option("--seed", synth_seed, "generator seed");
        sub->add_option("--out", synth_out, "output stem (<stem>.csv, <stem>_beats.csv)");
    }
    auto* synth_feat = cmd_synth->add_subcommand("features", "labeled synthetic feature table");
    synth_feat->add_option("--n-per-class", n_per_class, "rows per class");
    synth_feat->add_option("--separation", separation, "class separation in within-class sigmas");
    synth_feat->add_option("--participants", n_participants, "participant count");
    synth_feat->add_option("--seed", synth_seed, "generator seed");
    synth_feat->add_option("--out", synth_out, "output CSV path");

    // --- report ---
    auto* cmd_report = app.add_subcommand("report", "Render a report JSON");
    std::string report_path, report_format = "text";
    cmd_report->add_option("report", report_path, "report JSON file")->required();
    cmd_report->add_option("--format", report_format, "text or csv");

    CLI11_PARSE(app, argc, argv);

    if (cmd_features->parsed()) {
        const auto manifest = hrv::load_manifest(manifest_path);
        const auto scheme = resolve_scheme(scheme_arg, manifest.dataset_id);
        hrv::BuildOptions opts;
        opts.plausibility_filter = plaus;
        const auto result = hrv::build_feature_table(manifest, scheme, opts);
        hrv::save_table(result.table, table_out);
        if (!exclusions_out.empty()) hrv::save_exclusion_report(result.exclusions, exclusions_out);
        std::cerr << "rows: " << result.table.rows.size()
                  << " excluded participants: " << result.exclusions.size()
                  << " dropped windows: " << result.dropped_windows << "\n";
        return 0;
    }

    if (cmd_eval->parsed()) {
        fs::create_directories(out_dir);
        const auto kinds = parse_kinds(kinds_csv);
        hrv::LosoOptions opts;
        opts.parallelism = parallelism;

        if (cmd_eval->get_subcommand("loso")->parsed()) {
            const auto table = hrv::load_table(table_paths.front());
            for (auto kind : kinds) {
                const std::string model_dir = out_dir + "/models_" + hrv::to_string(kind);
                fs::create_directories(model_dir);
                opts.model_dir = model_dir;
                const auto outcome = hrv::loso(table, kind, seed, opts);
                hrv::emit_report(outcome.report, out_dir + "/loso_" + hrv::to_string(kind));
            }
        } else if (cmd_eval->get_subcommand("cross")->parsed()) {
            const auto src = hrv::load_table(source_table);
            const auto tgt = hrv::load_table(target_table);
            for (auto kind : kinds) {
                opts.model_dir.clear();
                const auto outcome = hrv::loso(src, kind, seed, opts);
                std::vector<hrv::TrainedModel> models;
                for (std::size_t i = 0; i < outcome.models.size(); ++i)
                    if (!outcome.report.folds[i].skipped) models.push_back(outcome.models[i]);
                const auto report = hrv::cross_dataset(models, tgt);
                hrv::emit_report(report, out_dir + "/cross_" + hrv::to_string(kind));
            }
        } else {
            std::vector<hrv::FeatureTable> tables;
            for (const auto& p : table_paths) tables.push_back(hrv::load_table(p));
            for (auto kind : kinds) {
                const std::string model_dir = out_dir + "/models_" + hrv::to_string(kind);
                fs::create_directories(model_dir);
                opts.model_dir = model_dir;
                const auto outcome = hrv::combine_and_loso(tables, kind, seed, opts);
                hrv::emit_report(outcome.report, out_dir + "/combined_" + hrv::to_string(kind));
            }
        }
        return 0;
    }

    if (cmd_synth->parsed()) {
        if (cmd_synth->get_subcommand("features")->parsed()) {
            const auto table =
                hrv::synth_feature_sets(n_per_class, separation, n_participants, synth_seed);
            hrv::save_table(table, synth_out);
            return 0;
        }
        const bool is_ecg = cmd_synth->get_subcommand("ecg")->parsed();
        hrv::SynthSpec spec;
        spec.modality = is_ecg ? hrv::Modality::ECG : hrv::Modality::BVP;
        spec.rate_hz = cmd_synth->get_subcommand(is_ecg ? "ecg" : "bvp")->count("--rate")
                           ? rate
                           : (is_ecg ? 700.0 : 64.0);
        spec.duration_s = duration;
        spec.mean_hr_bpm = bpm;
        spec.hrv_modulation = {mod_freq, mod_depth};
        spec.noise.baseline_amp = baseline_amp;
        spec.noise.powerline_amp = powerline_amp;
        spec.noise.white_snr_db = snr_db;
        spec.seed = synth_seed;
        const auto annotated = is_ecg ? hrv::synth_ecg(spec) : hrv::synth_bvp(spec);
        hrv::save_waveform_csv(annotated.waveform, synth_out + ".csv");
        std::ofstream beats(synth_out + "_beats.csv");
        if (!beats) throw hrv::IoError("cannot write " + synth_out + "_beats.csv");
        beats << "beat_time_s\n";
        for (double b : annotated.true_beats_s) beats << hrv::format_g9(b) << '\n';
        return 0;
    }

    if (cmd_report->parsed()) {
        std::ifstream in(report_path);
        if (!in) throw hrv::IoError("cannot open report: " + report_path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw hrv::SchemaError(std::string("invalid report JSON: ") + e.what());
        }
        const auto report = hrv::report_from_json(j);
        if (report_format == "text") {
            std::cout << hrv::report_to_text(report);
        } else if (report_format == "csv") {
            std::cout << "held_out,source_dataset,skipped,tp,fp,fn,tn,accuracy,f1_pos,f1_macro\n";
            for (const auto& f : report.folds) {
                std::cout << f.held_out_participant << ',' << f.source_dataset << ','
                          << (f.skipped ? "1" : "0") << ',';
                if (f.skipped) {
                    std::cout << ",,,,,,\n";
                } else {
                    std::cout << f.confusion.tp << ',' << f.confusion.fp << ',' << f.confusion.fn
                              << ',' << f.confusion.tn << ','
                              << hrv::format_g9(f.metrics.accuracy) << ','
                              << hrv::format_g9(f.metrics.f1_pos) << ','
                              << hrv::format_g9(f.metrics.f1_macro) << '\n';
                }
            }
        } else {
            throw hrv::SchemaError("unknown report format: " + report_format);
        }
        return 0;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const hrv::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
