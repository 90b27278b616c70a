#pragma once

#include <filesystem>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "facekit/classify.hpp"
#include "facekit/detection.hpp"
#include "facekit/features.hpp"
#include "facekit/imaging.hpp"
#include "facekit/registration.hpp"
#include "facekit/tracking.hpp"

namespace facekit {

enum class FeatureSource { Depth, Gray };
enum class EnrollmentMode { Tracked, SingleFrame };

std::string_view to_string(FeatureSource source);
std::string_view to_string(EnrollmentMode mode);

struct RunConfig {
    FeatureSource source = FeatureSource::Depth;
    int roi_size = 200;
    LbpParams grid;
    TrackerConfig tracker;
    TrainConfig train;
    EnrollmentMode mode = EnrollmentMode::Tracked;
    int workers = 0;  // 0 selects the serial engine
    double reject_threshold = -std::numeric_limits<double>::infinity();
    std::ostream* warnings = nullptr;

    Engine engine() const { return workers > 0 ? Engine::parallel(workers) : Engine::serial(); }
};

void validate(const RunConfig& cfg);

/// A directory holding color_####.ppm, depth_####.pgm (contiguous from 0),
/// calib.txt and annotations.csv. Frames are loaded on demand.
class Dataset {
public:
    static Dataset open(const std::filesystem::path& dir);

    const std::filesystem::path& dir() const { return dir_; }
    std::size_t frame_count() const { return frame_count_; }
    const CalibrationPair& calibration() const { return calibration_; }
    const AnnotationSet& annotations() const { return annotations_; }
    std::set<std::string> labels() const;

    ColorFrame color(std::size_t frame) const;
    DepthFrame depth(std::size_t frame) const;

private:
    std::filesystem::path dir_;
    std::size_t frame_count_ = 0;
    CalibrationPair calibration_;
    AnnotationSet annotations_;
};

std::filesystem::path color_path(const std::filesystem::path& dir, std::size_t frame);
std::filesystem::path depth_path(const std::filesystem::path& dir, std::size_t frame);

struct FaceObservation {
    Detection detection;
    Rect roi;                              // in the source image's coordinates
    std::optional<FeatureVector> feature;  // empty when the depth ROI had no support
};

/// Detection -> ROI -> crop -> resize -> LBP features for one frame.
std::vector<FaceObservation> observe_frame(const Dataset& dataset, std::size_t frame, const FaceDetector& detector,
                                           const RunConfig& cfg);

struct StageTimings {
    double load_ms = 0.0;
    double features_ms = 0.0;
    double tracking_ms = 0.0;
    double training_ms = 0.0;
    double predict_ms = 0.0;
};

struct EnrollResult {
    OvrModel model;
    std::vector<TrackEvent> track_log;
    std::map<std::string, std::size_t> samples_used;
    StageTimings timings;
};

EnrollResult run_enroll(const Dataset& dataset, const RunConfig& cfg);

struct RecognitionRow {
    std::size_t frame = 0;
    Rect rect;
    std::string label;
    double score = 0.0;
    std::optional<std::string> truth;  // not serialized
};

/// {"frame":..,"x":..,"y":..,"w":..,"h":..,"label":..,"score":..}
std::string to_json_line(const RecognitionRow& row);

std::vector<RecognitionRow> run_recognize(const Dataset& dataset, const OvrModel& model, const RunConfig& cfg,
                                          StageTimings* timings = nullptr);

struct EvalReport {
    FeatureSource source = FeatureSource::Depth;
    EnrollmentMode mode = EnrollmentMode::Tracked;
    bool self_test = false;
    double accuracy = 0.0;
    std::size_t correct = 0;
    std::size_t total = 0;
    std::size_t frames = 0;
    std::map<std::string, std::map<std::string, std::size_t>> confusion;  // truth -> predicted -> count
    StageTimings timings;
};

/// Enrolls on `train` and scores on `test` for every (source, mode) cell,
/// in the order depth/tracked, depth/single-frame, gray/tracked,
/// gray/single-frame. Other settings come from `base`.
std::vector<EvalReport> run_evaluate(const Dataset& train, const Dataset& test, const RunConfig& base);

std::string format_eval_csv(const std::vector<EvalReport>& reports);
std::string format_confusion_csv(const std::vector<EvalReport>& reports);
std::string format_bench_csv(const std::vector<BenchRow>& rows);

}  // namespace facekit
