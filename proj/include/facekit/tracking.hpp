#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "facekit/detection.hpp"
#include "facekit/features.hpp"
#include "facekit/registration.hpp"

namespace facekit {

struct TrackerConfig {
    double max_distance = 80.0;  // association gate, pixels
    int max_missed = 10;         // frames a track may go unmatched
    std::size_t max_samples = 50;
    /// New tracks take the detection's label when it has one instead of the
    /// personA, personB, ... sequence.
    bool adopt_detection_labels = false;
};

void validate(const TrackerConfig& cfg);

struct FaceTrack {
    int track_id = 0;
    std::string label;
    Point2d last_center;
    Rect last_rect;
    std::size_t last_seen = 0;
    int missed = 0;
    std::vector<FeatureVector> samples;
};

struct Match {
    int track_id = 0;
    std::size_t detection = 0;

    friend bool operator==(const Match&, const Match&) = default;
};

struct Association {
    std::vector<Match> matches;  // in the order they were taken
    std::vector<std::size_t> unmatched_detections;
    std::vector<int> unmatched_tracks;
};

/// Greedy globally-nearest matching on rect centres. Candidate pairs beyond
/// cfg.max_distance are never matched. Ties on distance go to the smaller
/// track_id, then to the detection whose centre is first in (y, x) order,
/// then to the smaller detection index.
Association associate(const std::vector<FaceTrack>& tracks, const std::vector<Detection>& detections,
                      const TrackerConfig& cfg);

enum class TrackEventKind { Created, Updated, Terminated };

std::string_view to_string(TrackEventKind kind);

struct TrackEvent {
    std::size_t frame = 0;
    int track_id = 0;
    std::string label;
    Rect rect;
    TrackEventKind kind = TrackEventKind::Created;
};

/// {"frame":..,"track_id":..,"label":..,"x":..,"y":..,"w":..,"h":..,"event":..}
std::string to_json_line(const TrackEvent& event);

struct StepResult {
    std::vector<int> assignments;  // track_id per detection
    std::vector<TrackEvent> events;
};

/// Online multi-face tracker. Not thread-safe; feed frames in order.
class Tracker {
public:
    explicit Tracker(TrackerConfig cfg = {});

    StepResult step(std::size_t frame_index, const std::vector<Detection>& detections,
                    const std::vector<FeatureVector>& features);

    const std::vector<FaceTrack>& tracks() const { return tracks_; }
    /// Tracks removed after exceeding max_missed, in termination order.
    const std::vector<FaceTrack>& retired() const { return retired_; }
    const TrackerConfig& config() const { return cfg_; }

private:
    std::string next_auto_label();

    TrackerConfig cfg_;
    std::vector<FaceTrack> tracks_;
    std::vector<FaceTrack> retired_;
    int next_id_ = 0;
    int next_auto_ = 0;
};

/// "A".."Z", "AA".."AZ", "BA", ... for n = 0, 1, 2, ...
std::string letter_sequence(int n);

}  // namespace facekit
