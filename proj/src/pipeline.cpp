#include "facekit/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace facekit {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::string frame_name(const char* prefix, std::size_t frame, const char* ext) {
    char name[64];
    std::snprintf(name, sizeof(name), "%s_%04zu.%s", prefix, frame, ext);
    return name;
}

void warn(const RunConfig& cfg, const std::string& message) {
    if (cfg.warnings) *cfg.warnings << "warning: " << message << '\n';
}

// Shortest text that reads back to the same double.
std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string format_ms(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

struct FrameInputs {
    ColorFrame color;
    std::optional<DepthFrame> depth;
};

FrameInputs load_inputs(const Dataset& dataset, std::size_t frame, const RunConfig& cfg) {
    FrameInputs in{dataset.color(frame), std::nullopt};
    if (cfg.source == FeatureSource::Depth) in.depth = dataset.depth(frame);
    return in;
}

std::vector<FaceObservation> observe(const FrameInputs& in, std::size_t frame, const CalibrationPair& cal,
                                     const FaceDetector& detector, const RunConfig& cfg) {
    std::vector<FaceObservation> out;
    std::optional<GrayFrame> gray;
    for (Detection& det : detector.detect(frame, in.color)) {
        FaceObservation obs{std::move(det), {}, std::nullopt};
        if (cfg.source == FeatureSource::Depth) {
            try {
                obs.roi = face_depth_roi(obs.detection.rect, in.color.width, in.color.height, *in.depth, cal);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::NoDepthSupport) throw;
                warn(cfg, "frame " + std::to_string(frame) + ": skipping detection without depth support");
                out.push_back(std::move(obs));
                continue;
            }
            const DepthFrame roi = resize(crop(*in.depth, obs.roi), cfg.roi_size, cfg.roi_size);
            obs.feature = extract(roi, cfg.grid, cfg.engine());
        } else {
            if (!gray) gray = to_gray(in.color);
            obs.roi = obs.detection.rect;
            const GrayFrame roi = resize(crop(*gray, obs.roi), cfg.roi_size, cfg.roi_size);
            obs.feature = extract(roi, cfg.grid, cfg.engine());
        }
        out.push_back(std::move(obs));
    }
    return out;
}

}  // namespace

std::string_view to_string(FeatureSource source) { return source == FeatureSource::Depth ? "depth" : "gray"; }
std::string_view to_string(EnrollmentMode mode) { return mode == EnrollmentMode::Tracked ? "tracked" : "single-frame"; }

void validate(const RunConfig& cfg) {
    if (cfg.roi_size < 3) throw Error(ErrorCode::InvalidArgument, "roi size must be >= 3");
    if (cfg.grid.grid_x < 1 || cfg.grid.grid_y < 1 || cfg.grid.grid_x > cfg.roi_size - 2 ||
        cfg.grid.grid_y > cfg.roi_size - 2)
        throw Error(ErrorCode::InvalidArgument, "grid must fit inside the ROI code map");
    if (cfg.workers < 0) throw Error(ErrorCode::InvalidArgument, "workers must be >= 0");
    validate(cfg.tracker);
    validate(cfg.train);
}

std::filesystem::path color_path(const std::filesystem::path& dir, std::size_t frame) {
    return dir / frame_name("color", frame, "ppm");
}

std::filesystem::path depth_path(const std::filesystem::path& dir, std::size_t frame) {
    return dir / frame_name("depth", frame, "pgm");
}

Dataset Dataset::open(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::Io, dir.string() + " is not a directory");
    Dataset ds;
    ds.dir_ = dir;
    while (std::filesystem::exists(color_path(dir, ds.frame_count_))) ++ds.frame_count_;
    std::size_t depth_frames = 0;
    while (std::filesystem::exists(depth_path(dir, depth_frames))) ++depth_frames;
    if (ds.frame_count_ == 0) throw Error(ErrorCode::InvalidArgument, dir.string() + ": no color_0000.ppm");
    if (depth_frames != ds.frame_count_)
        throw Error(ErrorCode::InvalidArgument, dir.string() + ": " + std::to_string(ds.frame_count_) +
                                                    " color frames but " + std::to_string(depth_frames) +
                                                    " depth frames");
    ds.calibration_ = load_calibration(dir / "calib.txt");
    ds.annotations_ = load_annotations(dir / "annotations.csv");
    return ds;
}

std::set<std::string> Dataset::labels() const {
    std::set<std::string> out;
    for (const auto& [_, rows] : annotations_.frames)
        for (const Annotation& a : rows)
            if (a.label) out.insert(*a.label);
    return out;
}

ColorFrame Dataset::color(std::size_t frame) const { return load_color(color_path(dir_, frame)); }
DepthFrame Dataset::depth(std::size_t frame) const { return load_depth(depth_path(dir_, frame)); }

std::vector<FaceObservation> observe_frame(const Dataset& dataset, std::size_t frame, const FaceDetector& detector,
                                           const RunConfig& cfg) {
    return observe(load_inputs(dataset, frame, cfg), frame, dataset.calibration(), detector, cfg);
}

EnrollResult run_enroll(const Dataset& dataset, const RunConfig& cfg) {
    validate(cfg);
    if (const auto labels = dataset.labels(); labels.size() == 1)
        throw Error(ErrorCode::InvalidArgument, "enrollment needs at least 2 identities, found 1");
    const AnnotationDetector detector(dataset.annotations());
    TrackerConfig tracker_cfg = cfg.tracker;
    tracker_cfg.adopt_detection_labels = true;
    Tracker tracker(tracker_cfg);

    EnrollResult result;
    for (std::size_t f = 0; f < dataset.frame_count(); ++f) {
        auto t0 = Clock::now();
        const FrameInputs in = load_inputs(dataset, f, cfg);
        result.timings.load_ms += elapsed_ms(t0);

        t0 = Clock::now();
        const auto observations = observe(in, f, dataset.calibration(), detector, cfg);
        result.timings.features_ms += elapsed_ms(t0);

        t0 = Clock::now();
        std::vector<Detection> detections;
        std::vector<FeatureVector> features;
        for (const FaceObservation& obs : observations) {
            if (!obs.feature) continue;
            detections.push_back(obs.detection);
            features.push_back(*obs.feature);
        }
        auto step = tracker.step(f, detections, features);
        for (auto& e : step.events) result.track_log.push_back(std::move(e));
        result.timings.tracking_ms += elapsed_ms(t0);
    }

    std::vector<const FaceTrack*> all;
    for (const FaceTrack& t : tracker.retired()) all.push_back(&t);
    for (const FaceTrack& t : tracker.tracks()) all.push_back(&t);
    std::sort(all.begin(), all.end(), [](const FaceTrack* a, const FaceTrack* b) { return a->track_id < b->track_id; });

    SampleDatabase database;
    for (const FaceTrack* t : all) {
        auto& samples = database[t->label];
        if (cfg.mode == EnrollmentMode::Tracked)
            samples.insert(samples.end(), t->samples.begin(), t->samples.end());
        else if (samples.empty())
            samples.push_back(t->samples.front());
    }
    for (const std::string& label : dataset.labels())
        if (!database.count(label))
            throw Error(ErrorCode::NoDepthSupport, "identity '" + label + "' has no usable face in any frame");
    if (database.size() < 2)
        throw Error(ErrorCode::InvalidArgument, "enrollment needs at least 2 identities, found " +
                                                    std::to_string(database.size()));
    for (const auto& [label, samples] : database) result.samples_used[label] = samples.size();

    const auto t0 = Clock::now();
    result.model = train_ovr(database, cfg.grid, cfg.train);
    result.timings.training_ms = elapsed_ms(t0);
    return result;
}

std::string to_json_line(const RecognitionRow& row) {
    nlohmann::ordered_json j;
    j["frame"] = row.frame;
    j["x"] = row.rect.x;
    j["y"] = row.rect.y;
    j["w"] = row.rect.w;
    j["h"] = row.rect.h;
    j["label"] = row.label;
    j["score"] = row.score;
    return j.dump();
}

std::vector<RecognitionRow> run_recognize(const Dataset& dataset, const OvrModel& model, const RunConfig& cfg,
                                          StageTimings* timings) {
    validate(cfg);
    if (model.grid != cfg.grid || model.feature_length != cfg.grid.feature_length())
        throw Error(ErrorCode::FeatureMismatch,
                    "model was trained with grid " + std::to_string(model.grid.grid_x) + "x" +
                        std::to_string(model.grid.grid_y) + " but the run uses " + std::to_string(cfg.grid.grid_x) +
                        "x" + std::to_string(cfg.grid.grid_y));
    const AnnotationDetector detector(dataset.annotations());
    StageTimings local;
    StageTimings& t = timings ? *timings : local;
    std::vector<RecognitionRow> rows;
    for (std::size_t f = 0; f < dataset.frame_count(); ++f) {
        auto t0 = Clock::now();
        const FrameInputs in = load_inputs(dataset, f, cfg);
        t.load_ms += elapsed_ms(t0);
        t0 = Clock::now();
        const auto observations = observe(in, f, dataset.calibration(), detector, cfg);
        t.features_ms += elapsed_ms(t0);
        t0 = Clock::now();
        for (const FaceObservation& obs : observations) {
            if (!obs.feature) continue;
            const Prediction p = predict(model, *obs.feature, cfg.reject_threshold);
            rows.push_back({f, obs.detection.rect, p.label, p.score, obs.detection.label});
        }
        t.predict_ms += elapsed_ms(t0);
    }
    return rows;
}

std::vector<EvalReport> run_evaluate(const Dataset& train, const Dataset& test, const RunConfig& base) {
    const auto train_labels = train.labels();
    if (train_labels != test.labels())
        throw Error(ErrorCode::LabelMismatch, "train and test datasets have different identity labels");
    const bool self_test = std::filesystem::equivalent(train.dir(), test.dir());

    std::vector<EvalReport> reports;
    for (FeatureSource source : {FeatureSource::Depth, FeatureSource::Gray}) {
        for (EnrollmentMode mode : {EnrollmentMode::Tracked, EnrollmentMode::SingleFrame}) {
            RunConfig cfg = base;
            cfg.source = source;
            cfg.mode = mode;
            EvalReport report;
            report.source = source;
            report.mode = mode;
            report.self_test = self_test;
            report.frames = test.frame_count();

            EnrollResult enrolled = run_enroll(train, cfg);
            report.timings = enrolled.timings;

            // Every labelled test face counts; faces the pipeline could not
            // score are recorded as "unknown".
            std::map<std::string, std::size_t> expected;
            for (std::size_t f = 0; f < test.frame_count(); ++f) {
                const auto it = test.annotations().frames.find(f);
                if (it == test.annotations().frames.end()) continue;
                const ColorFrame color = test.color(f);
                for (const Detection& det : detect(f, color, test.annotations()))
                    if (det.label) ++expected[*det.label];
            }
            std::map<std::string, std::size_t> scored;
            for (const RecognitionRow& row : run_recognize(test, enrolled.model, cfg, &report.timings)) {
                if (!row.truth) continue;
                ++report.confusion[*row.truth][row.label];
                ++scored[*row.truth];
                if (row.label == *row.truth) ++report.correct;
            }
            for (const auto& [truth, count] : expected) {
                report.total += count;
                if (count > scored[truth]) report.confusion[truth][kUnknownLabel] += count - scored[truth];
            }
            report.accuracy = report.total ? static_cast<double>(report.correct) / report.total : 0.0;
            reports.push_back(std::move(report));
        }
    }
    return reports;
}

std::string format_eval_csv(const std::vector<EvalReport>& reports) {
    std::ostringstream out;
    out << "source,enrollment,split,accuracy,correct,total,frames,enroll_features_ms,training_ms,predict_ms\n";
    for (const EvalReport& r : reports) {
        out << to_string(r.source) << ',' << to_string(r.mode) << ',' << (r.self_test ? "self" : "holdout") << ','
            << format_double(r.accuracy) << ',' << r.correct << ',' << r.total << ',' << r.frames << ','
            << format_ms(r.timings.features_ms) << ',' << format_ms(r.timings.training_ms) << ','
            << format_ms(r.timings.predict_ms) << '\n';
    }
    return out.str();
}

std::string format_confusion_csv(const std::vector<EvalReport>& reports) {
    std::ostringstream out;
    out << "source,enrollment,truth,predicted,count\n";
    for (const EvalReport& r : reports)
        for (const auto& [truth, row] : r.confusion)
            for (const auto& [label, count] : row)
                out << to_string(r.source) << ',' << to_string(r.mode) << ',' << truth << ',' << label << ','
                    << count << '\n';
    return out.str();
}

std::string format_bench_csv(const std::vector<BenchRow>& rows) {
    std::ostringstream out;
    out << "size,engine,workers,median_ms,speedup_vs_serial\n";
    for (const BenchRow& r : rows) {
        const bool serial = r.engine.kind == Engine::Kind::Serial;
        char line[128];
        std::snprintf(line, sizeof(line), "%d,%s,%d,%.4f,%.3f\n", r.size, serial ? "serial" : "parallel",
                      serial ? 1 : r.engine.workers, r.median_ms, r.speedup_vs_serial);
        out << line;
    }
    return out.str();
}

}  // namespace facekit
