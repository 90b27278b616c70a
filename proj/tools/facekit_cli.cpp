// facekit: synth | enroll | recognize | evaluate | bench
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 internal consistency
// failure (the serial/parallel equivalence gate).

#include <fstream>
#include <iostream>
#include <regex>

#include <CLI11.hpp>

#include "facekit/pipeline.hpp"
#include "facekit/synthdata.hpp"

namespace {

using namespace facekit;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitConsistency = 3;

struct RunFlags {
    std::string source = "depth";
    int roi_size = 200;
    std::string grid = "1x1";
    bool single_frame = false;
    double lambda = 1e-4;
    int epochs = 200;
    std::uint64_t seed = 42;
    int workers = 0;
    double max_distance = 80.0;
    int max_missed = 10;
    std::size_t max_samples = 50;
    double reject = -std::numeric_limits<double>::infinity();
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool with_mode) {
    cmd->add_option("--source", f.source, "Feature source")->check(CLI::IsMember({"depth", "gray"}));
    cmd->add_option("--roi-size", f.roi_size, "Square ROI side after resize")->check(CLI::Range(3, 4096));
    cmd->add_option("--grid", f.grid, "LBP block grid, e.g. 2x2");
    if (with_mode) {
        auto* tracked = cmd->add_flag("--tracked", "Enroll from every tracked sample (default)");
        cmd->add_flag("--single-frame", f.single_frame, "Enroll from the first detection of each identity")
            ->excludes(tracked);
    }
    cmd->add_option("--lambda", f.lambda, "SVM regularization")->check(CLI::PositiveNumber);
    cmd->add_option("--epochs", f.epochs, "SVM training epochs")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", f.seed, "Shuffle seed");
    cmd->add_option("--workers", f.workers, "Parallel feature workers, 0 = serial")->check(CLI::NonNegativeNumber);
    cmd->add_option("--max-distance", f.max_distance, "Tracker association gate in pixels")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--max-missed", f.max_missed, "Frames before a lost track is dropped")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--max-samples", f.max_samples, "Samples kept per track")->check(CLI::PositiveNumber);
}

RunConfig to_config(const RunFlags& f) {
    static const std::regex grid_re(R"((\d+)x(\d+))");
    std::smatch m;
    if (!std::regex_match(f.grid, m, grid_re)) throw CLI::ValidationError("--grid", "expected KxK, e.g. 2x2");
    RunConfig cfg;
    cfg.source = f.source == "gray" ? FeatureSource::Gray : FeatureSource::Depth;
    cfg.roi_size = f.roi_size;
    cfg.grid = {std::stoi(m[1]), std::stoi(m[2])};
    cfg.mode = f.single_frame ? EnrollmentMode::SingleFrame : EnrollmentMode::Tracked;
    cfg.train = {f.lambda, f.epochs, f.seed};
    cfg.tracker.max_distance = f.max_distance;
    cfg.tracker.max_missed = f.max_missed;
    cfg.tracker.max_samples = f.max_samples;
    cfg.workers = f.workers;
    cfg.reject_threshold = f.reject;
    cfg.warnings = &std::cerr;
    return cfg;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open " + path + " for writing");
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"RGB-D face recognition toolkit"};
    app.require_subcommand(1);

    std::string spec_path, out_path, data_dir, model_path, track_log, train_dir, test_dir, confusion_path;
    bool self_test = false;
    RunFlags flags;
    std::vector<int> bench_sizes{100, 200, 400};
    std::vector<int> bench_workers{1, 2, 4, 8};
    int bench_reps = 5;

    auto* synth = app.add_subcommand("synth", "Generate a synthetic RGB-D dataset");
    synth->add_option("--spec", spec_path, "Scene spec file")->required()->check(CLI::ExistingFile);
    synth->add_option("--out", out_path, "Output directory")->required();

    auto* enroll = app.add_subcommand("enroll", "Track faces, build the sample database and train");
    enroll->add_option("--data", data_dir, "Dataset directory")->required()->check(CLI::ExistingDirectory);
    enroll->add_option("--model", model_path, "Model output path")->required();
    enroll->add_option("--track-log", track_log, "Write track events as JSON lines");
    add_run_flags(enroll, flags, true);

    auto* recognize = app.add_subcommand("recognize", "Label every detection in a dataset");
    recognize->add_option("--data", data_dir, "Dataset directory")->required()->check(CLI::ExistingDirectory);
    recognize->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
    recognize->add_option("--out", out_path, "JSON-lines output (default stdout)");
    recognize->add_option("--reject", flags.reject, "Scores below this become \"unknown\"");
    add_run_flags(recognize, flags, false);

    auto* evaluate = app.add_subcommand("evaluate", "Accuracy for depth/gray x tracked/single-frame");
    evaluate->add_option("--train", train_dir, "Training dataset")->required()->check(CLI::ExistingDirectory);
    auto* test_opt = evaluate->add_option("--test", test_dir, "Test dataset")->check(CLI::ExistingDirectory);
    evaluate->add_flag("--self-test", self_test, "Score on the training dataset")->excludes(test_opt);
    evaluate->add_option("--out", out_path, "Accuracy CSV (default stdout)");
    evaluate->add_option("--confusion", confusion_path, "Confusion-count CSV");
    add_run_flags(evaluate, flags, false);

    auto* bench = app.add_subcommand("bench", "Serial vs parallel feature extraction timing");
    bench->add_option("--sizes", bench_sizes, "ROI sides")->delimiter(',')->check(CLI::Range(3, 8192));
    bench->add_option("--workers", bench_workers, "Worker counts")->delimiter(',')->check(CLI::Range(1, 1024));
    bench->add_option("--repetitions", bench_reps, "Timed repetitions per cell")->check(CLI::Range(3, 10000));
    bench->add_option("--out", out_path, "CSV output (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (*synth) {
            synth::generate(synth::load_scene(spec_path), out_path);
        } else if (*enroll) {
            const RunConfig cfg = to_config(flags);
            const EnrollResult result = run_enroll(Dataset::open(data_dir), cfg);
            save_model(result.model, model_path);
            if (!track_log.empty()) {
                std::string text;
                for (const TrackEvent& e : result.track_log) text += to_json_line(e) + "\n";
                write_text(track_log, text);
            }
            for (const auto& [label, n] : result.samples_used)
                std::cerr << "enrolled " << label << ": " << n << " samples\n";
        } else if (*recognize) {
            const RunConfig cfg = to_config(flags);
            const auto rows = run_recognize(Dataset::open(data_dir), load_model(model_path), cfg);
            std::string text;
            for (const RecognitionRow& row : rows) text += to_json_line(row) + "\n";
            write_text(out_path, text);
        } else if (*evaluate) {
            if (!self_test && test_dir.empty()) throw CLI::RequiredError("--test or --self-test");
            const RunConfig cfg = to_config(flags);
            const Dataset train = Dataset::open(train_dir);
            const auto reports = self_test ? run_evaluate(train, train, cfg)
                                           : run_evaluate(train, Dataset::open(test_dir), cfg);
            write_text(out_path, format_eval_csv(reports));
            if (!confusion_path.empty()) write_text(confusion_path, format_confusion_csv(reports));
        } else if (*bench) {
            BenchOptions options;
            options.sizes = bench_sizes;
            options.workers = bench_workers;
            options.repetitions = bench_reps;
            write_text(out_path, format_bench_csv(bench_extract(options)));
        }
    } catch (const CLI::Error& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.code() == ErrorCode::ConsistencyFailure ? kExitConsistency : kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return 0;
}
