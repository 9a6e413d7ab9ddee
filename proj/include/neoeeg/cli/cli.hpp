#pragma once

// Command-line front end. Exit codes:
//   0  success
//   1  any other failure (I/O error, per-epoch extraction failures, ...)
//   2  usage error or unusable input (bad arguments, missing or empty input directory)
//   3  model or schema problem (missing grade class, feature schema mismatch, bad model file)
//   4  epoch id mismatch between inputs

#include <pthread.h>
#include <signal.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "neoeeg/competition/engine.hpp"
#include "neoeeg/competition/submission.hpp"
#include "neoeeg/errors.hpp"
#include "neoeeg/features/feature_csv.hpp"
#include "neoeeg/features/gasf.hpp"
#include "neoeeg/features/grader_features.hpp"
#include "neoeeg/features/neural.hpp"
#include "neoeeg/grader/cascade.hpp"
#include "neoeeg/grader/model_io.hpp"
#include "neoeeg/http/api.hpp"
#include "neoeeg/io/edf.hpp"
#include "neoeeg/io/labels.hpp"
#include "neoeeg/io/montage.hpp"
#include "neoeeg/io/signal_csv.hpp"
#include "neoeeg/metrics/metrics.hpp"
#include "neoeeg/util.hpp"

namespace neoeeg::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kModel = 3, kMismatch = 4 };

class CliError : public Error {
public:
    CliError(int code, const std::string& what) : Error(what), code_(code) {}
    int code() const { return code_; }

private:
    int code_;
};

namespace fs = std::filesystem;

struct Streams {
    std::ostream& out;
    std::ostream& err;
};

namespace detail {

inline std::string join_limited(const std::vector<std::string>& v, std::size_t limit = 20) {
    std::string s;
    for (std::size_t i = 0; i < v.size() && i < limit; ++i) s += (i ? ", " : "") + v[i];
    if (v.size() > limit) s += ", ... (" + std::to_string(v.size() - limit) + " more)";
    return s;
}

/// Throws an id-mismatch error listing ids found on only one side.
inline void require_same_ids(const std::set<std::string>& a, const std::string& a_name, const std::set<std::string>& b,
                             const std::string& b_name) {
    std::vector<std::string> only_a, only_b;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(only_a));
    std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::back_inserter(only_b));
    if (only_a.empty() && only_b.empty()) return;
    std::string msg = "epoch ids differ between " + a_name + " and " + b_name;
    if (!only_a.empty()) msg += "\n  only in " + a_name + ": " + join_limited(only_a);
    if (!only_b.empty()) msg += "\n  only in " + b_name + ": " + join_limited(only_b);
    throw CliError(kMismatch, msg);
}

inline void require_file(const fs::path& p) {
    if (!fs::is_regular_file(p)) throw CliError(kUsage, "cannot read " + p.string());
}

inline io::Recording read_epoch(const fs::path& p) {
    if (p.extension() == ".edf" || p.extension() == ".EDF") return io::read_edf(p);
    return io::read_signal_csv(p);
}

/// Epoch files of a directory: every .edf, and every .csv with a JSON sidecar. Sorted by path.
inline std::vector<fs::path> epoch_files(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const auto ext = e.path().extension().string();
        if (ext == ".edf" || ext == ".EDF") out.push_back(e.path());
        else if (ext == ".csv" && fs::exists(io::sidecar_path(e.path()))) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline std::vector<competition::SubmissionRow> read_predictions(const fs::path& p) {
    require_file(p);
    try {
        return competition::parse_predictions(read_text_file(p), nullptr);
    } catch (const ValidationError& e) {
        std::string msg = p.string() + " is not a prediction file";
        for (const auto& i : e.issues()) msg += "\n  line " + std::to_string(i.line) + ": " + i.message;
        throw CliError(kUsage, msg);
    }
}

struct Truth {
    std::map<std::string, int> grades;
    std::map<std::string, std::string> subjects;
};

/// Reference grades from a label file (epoch_id,subject_id,grade) or a prediction file.
inline Truth read_truth(const fs::path& p) {
    require_file(p);
    const std::string text = read_text_file(p);
    const auto lines = text_lines(text);
    Truth t;
    if (!lines.empty() && split_csv_line(lines[0]).size() == 3 && split_csv_line(lines[0])[1] == "subject_id") {
        try {
            for (const auto& r : io::parse_label_rows(text)) {
                t.grades[r.epoch_id] = r.grade;
                t.subjects[r.epoch_id] = r.subject_id;
            }
        } catch (const LabelError& e) {
            throw CliError(kUsage, p.string() + ": " + e.what());
        }
        return t;
    }
    for (const auto& r : read_predictions(p)) t.grades[r.epoch_id] = r.grade;
    return t;
}

inline features::FeatureTable read_features(const fs::path& p) {
    require_file(p);
    try {
        return features::read_feature_csv(p);
    } catch (const FeatureError& e) {
        throw CliError(kUsage, p.string() + ": " + e.what());
    }
}

inline std::string fixed(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

}  // namespace detail

struct ExtractOptions {
    fs::path dir;
    std::string montage = "neural";
    std::string feature_set = "neural";
    fs::path output;
    unsigned jobs = 0;
};

inline int extract_features(const ExtractOptions& o, Streams s) {
    if (!fs::is_directory(o.dir)) throw CliError(kUsage, o.dir.string() + " is not a directory");
    io::MontageSpec montage;
    try {
        montage = io::montage_by_name(o.montage);
    } catch (const MontageError& e) {
        throw CliError(kUsage, std::string("bad montage: ") + e.what());
    }
    const auto files = detail::epoch_files(o.dir);
    if (files.empty()) throw CliError(kUsage, "no EDF or CSV epochs in " + o.dir.string());

    std::vector<features::FeatureVector> rows(files.size());
    std::vector<std::string> errors(files.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < files.size(); i = next++) {
            try {
                const auto raw = detail::read_epoch(files[i]);
                rows[i] = o.feature_set == "grader" ? features::grader_features(raw, montage)
                                                    : features::neural_features(raw, montage);
                rows[i].epoch_id = files[i].stem().string();
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    unsigned jobs = o.jobs ? o.jobs : std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min<unsigned>(jobs, static_cast<unsigned>(files.size()));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();

    std::set<std::string> ids;
    std::size_t failed = 0;
    for (std::size_t i = 0; i < files.size(); ++i) {
        if (!errors[i].empty()) ++failed;
        else if (!ids.insert(rows[i].epoch_id).second) errors[i] = "duplicate epoch id '" + rows[i].epoch_id + "'", ++failed;
    }
    if (failed) {
        s.err << failed << " of " << files.size() << " epochs failed; nothing written\n";
        for (std::size_t i = 0; i < files.size(); ++i)
            if (!errors[i].empty()) s.err << "  " << files[i].filename().string() << ": " << errors[i] << "\n";
        return kFailure;
    }
    atomic_write(o.output, features::format_feature_csv(std::move(rows)));
    s.out << "wrote " << files.size() << " rows to " << o.output.string() << "\n";
    return kOk;
}

inline int train_svm(const fs::path& features_csv, const fs::path& labels_csv, const fs::path& output, double C,
                     Streams s) {
    const auto table = detail::read_features(features_csv);
    detail::require_file(labels_csv);
    std::map<std::string, int> labels;
    try {
        labels = io::load_labels(labels_csv);
    } catch (const LabelError& e) {
        throw CliError(kUsage, labels_csv.string() + ": " + e.what());
    }
    std::vector<std::string> unlabelled;
    std::vector<int> grades;
    for (const auto& r : table.rows) {
        auto it = labels.find(r.epoch_id);
        if (it == labels.end()) unlabelled.push_back(r.epoch_id);
        else grades.push_back(it->second);
    }
    if (!unlabelled.empty())
        throw CliError(kMismatch, "feature rows without a label: " + detail::join_limited(unlabelled));
    grader::CascadeConfig cfg;
    cfg.smo.C = C;
    grader::GraderCascade model;
    try {
        model = grader::cascade_train(table.rows, grades, cfg);
    } catch (const TrainError& e) {
        throw CliError(kModel, e.what());
    }
    grader::save_model(model, output);
    s.out << "trained on " << table.rows.size() << " epochs; model written to " << output.string() << "\n";
    return kOk;
}

inline int grade(const fs::path& model_json, const fs::path& features_csv, const fs::path& output, Streams s) {
    detail::require_file(model_json);
    const auto table = detail::read_features(features_csv);
    std::vector<competition::SubmissionRow> preds;
    try {
        const auto model = grader::load_model(model_json);
        for (const auto& r : table.rows) {
            const auto p = grader::cascade_predict(model, r);
            preds.push_back({r.epoch_id, p.grade, p.probability});
        }
    } catch (const PredictError& e) {
        throw CliError(kModel, e.what());
    }
    std::sort(preds.begin(), preds.end(), [](const auto& a, const auto& b) { return a.epoch_id < b.epoch_id; });
    atomic_write(output, competition::format_predictions(preds));
    s.out << "graded " << preds.size() << " epochs into " << output.string() << "\n";
    return kOk;
}

struct ScoreOptions {
    fs::path preds;
    fs::path truth;
    std::size_t bootstrap = 1000;
    std::uint64_t seed = 0;
    bool by_subject = false;
    bool json = false;
};

inline int score(const ScoreOptions& o, Streams s) {
    const auto preds = detail::read_predictions(o.preds);
    const auto truth = detail::read_truth(o.truth);
    std::map<std::string, int> predicted;
    for (const auto& r : preds) predicted[r.epoch_id] = r.grade;
    std::set<std::string> a, b;
    for (const auto& [id, _] : predicted) a.insert(id);
    for (const auto& [id, _] : truth.grades) b.insert(id);
    detail::require_same_ids(a, "predictions", b, "truth");

    std::vector<int> yt, yp;
    metrics::BootstrapOptions bo;
    bo.resamples = o.bootstrap;
    bo.seed = o.seed;
    for (const auto& [id, g] : truth.grades) {
        yt.push_back(g);
        yp.push_back(predicted.at(id));
        if (o.by_subject) {
            auto it = truth.subjects.find(id);
            if (it == truth.subjects.end()) throw CliError(kUsage, "--by-subject needs a label file with subject ids");
            bo.groups.push_back(it->second);
        }
    }
    metrics::MetricReport report;
    std::string ci_note;
    try {
        report = metrics::metric_report(yt, yp, bo);
    } catch (const CiError& e) {
        bo.resamples = 0;
        report = metrics::metric_report(yt, yp, bo);
        ci_note = e.what();
    }
    const bool with_ci = bo.resamples > 0;
    if (o.json) {
        auto j = metrics::to_json(report);
        if (!with_ci) j["ci"] = nullptr;
        s.out << j.dump(2) << "\n";
    } else {
        s.out << "n = " << report.n << "\n";
        s.out << "metric      value   ci_low  ci_high\n";
        for (const auto& name : metrics::table_columns()) {
            const auto& mv = report.metrics.at(name);
            std::string line = name;
            line.resize(10, ' ');
            line += "  " + detail::fixed(mv.value);
            if (with_ci) line += "  " + detail::fixed(mv.ci.low) + "  " + detail::fixed(mv.ci.high);
            else line += "       -        -";
            s.out << line << "\n";
        }
    }
    if (!ci_note.empty()) s.err << "no confidence intervals: " << ci_note << "\n";
    if (report.mcc_degenerate) s.err << "note: MCC is undefined for this confusion matrix and is reported as 0\n";
    return kOk;
}

inline int ensemble(const std::vector<fs::path>& inputs, const fs::path& output, Streams s) {
    if (inputs.size() < 2) throw CliError(kUsage, "ensemble needs at least two prediction files");
    std::vector<std::map<std::string, competition::SubmissionRow>> models;
    for (const auto& p : inputs) {
        std::map<std::string, competition::SubmissionRow> m;
        for (auto& r : detail::read_predictions(p)) m.emplace(r.epoch_id, r);
        models.push_back(std::move(m));
    }
    std::set<std::string> ids;
    for (const auto& [id, _] : models.front()) ids.insert(id);
    for (std::size_t k = 1; k < models.size(); ++k) {
        std::set<std::string> other;
        for (const auto& [id, _] : models[k]) other.insert(id);
        detail::require_same_ids(ids, inputs.front().string(), other, inputs[k].string());
    }
    std::vector<std::vector<int>> votes(models.size());
    for (std::size_t k = 0; k < models.size(); ++k)
        for (const auto& id : ids) votes[k].push_back(models[k].at(id).grade);
    const auto winners = metrics::ensemble_majority(votes);

    // probability of the ensemble grade: mean over the models that voted for it
    std::vector<competition::SubmissionRow> out;
    std::size_t i = 0;
    for (const auto& id : ids) {
        double sum = 0;
        int n = 0;
        for (const auto& m : models) {
            const auto& r = m.at(id);
            if (r.grade == winners[i]) sum += r.probability, ++n;
        }
        out.push_back({id, winners[i], n ? sum / n : 0.0});
        ++i;
    }
    atomic_write(output, competition::format_predictions(out));
    s.out << "combined " << inputs.size() << " prediction files over " << out.size() << " epochs\n";
    return kOk;
}

inline int agreement(const fs::path& a_path, const fs::path& b_path, Streams s) {
    const auto a = detail::read_truth(a_path);
    const auto b = detail::read_truth(b_path);
    std::set<std::string> ia, ib;
    for (const auto& [id, _] : a.grades) ia.insert(id);
    for (const auto& [id, _] : b.grades) ib.insert(id);
    detail::require_same_ids(ia, a_path.string(), ib, b_path.string());
    std::vector<int> ya, yb;
    for (const auto& [id, g] : a.grades) {
        ya.push_back(g);
        yb.push_back(b.grades.at(id));
    }
    std::size_t same = 0;
    for (std::size_t i = 0; i < ya.size(); ++i) same += ya[i] == yb[i];
    s.out << "n = " << ya.size() << "\n";
    s.out << "agreement  " << detail::fixed(static_cast<double>(same) / static_cast<double>(ya.size())) << "\n";
    s.out << "kappa      " << detail::fixed(metrics::cohen_kappa(ya, yb)) << "\n";
    return kOk;
}

inline int gasf_export(const fs::path& epoch, const fs::path& out_dir, const std::string& format, Streams s) {
    detail::require_file(epoch);
    const auto raw = detail::read_epoch(epoch);
    const auto frames = features::gasf_stack(raw);
    if (frames.empty()) throw CliError(kUsage, "epoch is shorter than one GASF window");
    fs::create_directories(out_dir);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        char stem[32];
        std::snprintf(stem, sizeof stem, "frame_%04zu", i);
        if (format == "png" || format == "both") atomic_write(out_dir / (std::string(stem) + ".png"), features::encode_png(frames[i]));
        if (format == "npy" || format == "both") atomic_write(out_dir / (std::string(stem) + ".npy"), features::encode_npy(frames[i]));
    }
    s.out << "wrote " << frames.size() << " frames to " << out_dir.string() << "\n";
    return kOk;
}

/// Runs the platform until SIGINT or SIGTERM, then writes a snapshot. The signals are blocked
/// in the calling thread (and so in every thread it starts) and collected with sigwait.
inline int serve(const fs::path& config_path, Streams s) {
    detail::require_file(config_path);
    auto platform = http::load_platform_config(config_path);

    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    sigset_t previous;
    pthread_sigmask(SIG_BLOCK, &set, &previous);

    competition::Engine engine(competition::EngineOptions{platform.data_dir});
    if (engine.snapshot()->competitions.empty()) {
        for (const auto& p : platform.competitions) {
            const auto id = engine.create_competition(competition::load_config(p), competition::now_ms());
            s.out << "created competition " << id << " from " << p.string() << "\n";
        }
    }
    const bool generated = platform.server.host_token.empty();
    http::ApiServer api(engine, platform.server);
    int port = platform.server.port;
    if (port == 0) port = api.bind_any();
    else if (!api.raw().bind_to_port(platform.server.host, port)) port = -1;
    if (port < 0) {
        pthread_sigmask(SIG_SETMASK, &previous, nullptr);
        throw CliError(kFailure, "cannot listen on " + platform.server.host + ":" + std::to_string(platform.server.port));
    }
    if (generated) s.out << "host token: " << api.host_token() << "\n";
    s.out << "listening on http://" << platform.server.host << ":" << port << std::endl;

    std::atomic<bool> signalled{false}, listen_done{false};
    std::thread waiter([&] {
        int sig = 0;
        sigwait(&set, &sig);
        signalled = true;
        while (!listen_done && !api.raw().is_running()) std::this_thread::sleep_for(std::chrono::milliseconds(1));
        if (!listen_done) api.stop();
    });
    api.listen_after_bind();
    listen_done = true;
    if (!signalled) pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    engine.checkpoint();
    pthread_sigmask(SIG_SETMASK, &previous, nullptr);
    s.out << "stopped; state saved to " << platform.data_dir.string() << std::endl;
    return kOk;
}

/// Parses arguments and runs one subcommand; returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    Streams s{out, err};
    CLI::App app{"Neonatal EEG grading toolkit and competition server", "neoeeg"};
    app.require_subcommand(1);
    app.footer("Exit codes: 0 ok, 1 failure, 2 usage or input error, 3 model or schema error, 4 epoch id mismatch.");

    ExtractOptions ex;
    auto* c_ex = app.add_subcommand("extract-features", "Compute one feature row per epoch file in a directory");
    c_ex->add_option("dir", ex.dir, "Directory of .edf epochs or .csv epochs with JSON sidecars")->required();
    c_ex->add_option("--montage", ex.montage, "Montage name (neural, cnn, gasf) or pairs like 'F3-C3,F4-C4'")
        ->capture_default_str();
    c_ex->add_option("--set", ex.feature_set, "Feature set: neural (102 features) or grader (7 features)")
        ->check(CLI::IsMember({"neural", "grader"}))
        ->capture_default_str();
    c_ex->add_option("-j,--jobs", ex.jobs, "Worker threads (0 = all cores)")->capture_default_str();
    c_ex->add_option("-o,--output", ex.output, "Output feature CSV")->required();

    fs::path tr_features, tr_labels, tr_out;
    double tr_c = 10.0;
    auto* c_tr = app.add_subcommand("train-svm", "Train the three-stage SVM grader");
    c_tr->add_option("features", tr_features, "Feature CSV")->required();
    c_tr->add_option("labels", tr_labels, "Label CSV (epoch_id,subject_id,grade)")->required();
    c_tr->add_option("-C,--cost", tr_c, "SVM box constraint")->capture_default_str()->check(CLI::PositiveNumber);
    c_tr->add_option("-o,--output", tr_out, "Output model JSON")->required();

    fs::path gr_model, gr_features, gr_out;
    auto* c_gr = app.add_subcommand("grade", "Grade epochs with a trained model");
    c_gr->add_option("model", gr_model, "Model JSON from train-svm")->required();
    c_gr->add_option("features", gr_features, "Feature CSV")->required();
    c_gr->add_option("-o,--output", gr_out, "Output predictions CSV (epoch_id,grade,probability)")->required();

    ScoreOptions sc;
    auto* c_sc = app.add_subcommand("score", "Score predictions against reference grades");
    c_sc->add_option("predictions", sc.preds, "Predictions CSV")->required();
    c_sc->add_option("truth", sc.truth, "Label CSV or predictions CSV holding the reference grades")->required();
    c_sc->add_option("--bootstrap", sc.bootstrap, "Bootstrap resamples for 95% intervals (0 = none)")->capture_default_str();
    c_sc->add_option("--seed", sc.seed, "Bootstrap seed")->capture_default_str();
    c_sc->add_flag("--by-subject", sc.by_subject, "Resample whole subjects (needs subject ids in the truth file)");
    c_sc->add_flag("--json", sc.json, "Print the full report as JSON");

    std::vector<fs::path> en_inputs;
    fs::path en_out;
    auto* c_en = app.add_subcommand("ensemble", "Majority vote over prediction files (ties go to the more severe grade)");
    c_en->add_option("predictions", en_inputs, "Two or more predictions CSVs")->required();
    c_en->add_option("-o,--output", en_out, "Output predictions CSV")->required();

    fs::path ag_a, ag_b;
    auto* c_ag = app.add_subcommand("agreement", "Cohen's kappa between two sets of grades");
    c_ag->add_option("a", ag_a, "First label or predictions CSV")->required();
    c_ag->add_option("b", ag_b, "Second label or predictions CSV")->required();

    fs::path ga_epoch, ga_out;
    std::string ga_format = "png";
    auto* c_ga = app.add_subcommand("gasf", "Gramian angular field images of an epoch");
    auto* c_ga_ex = c_ga->add_subcommand("export", "Write one image per window");
    c_ga->require_subcommand(1);
    c_ga_ex->add_option("epoch", ga_epoch, "Epoch file (.edf or .csv with sidecar)")->required();
    c_ga_ex->add_option("-o,--output", ga_out, "Output directory")->required();
    c_ga_ex->add_option("--format", ga_format, "png, npy or both")
        ->check(CLI::IsMember({"png", "npy", "both"}))
        ->capture_default_str();

    fs::path sv_config;
    auto* c_sv = app.add_subcommand("serve", "Run the competition server until SIGINT or SIGTERM");
    c_sv->add_option("--config", sv_config, "Platform config JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kUsage;
    }

    try {
        if (*c_ex) return extract_features(ex, s);
        if (*c_tr) return train_svm(tr_features, tr_labels, tr_out, tr_c, s);
        if (*c_gr) return grade(gr_model, gr_features, gr_out, s);
        if (*c_sc) return score(sc, s);
        if (*c_en) return ensemble(en_inputs, en_out, s);
        if (*c_ag) return agreement(ag_a, ag_b, s);
        if (*c_ga) return gasf_export(ga_epoch, ga_out, ga_format, s);
        if (*c_sv) return serve(sv_config, s);
    } catch (const CliError& e) {
        err << "error: " << e.what() << "\n";
        return e.code();
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kUsage;
}

}  // namespace neoeeg::cli
