#include "facekit/tracking.hpp"

#include <algorithm>
#include <tuple>

#include <json.hpp>

namespace facekit {

void validate(const TrackerConfig& cfg) {
    if (!(cfg.max_distance > 0.0)) throw Error(ErrorCode::InvalidArgument, "max_distance must be > 0");
    if (cfg.max_missed < 0) throw Error(ErrorCode::InvalidArgument, "max_missed must be >= 0");
    if (cfg.max_samples < 1) throw Error(ErrorCode::InvalidArgument, "max_samples must be >= 1");
}

Association associate(const std::vector<FaceTrack>& tracks, const std::vector<Detection>& detections,
                      const TrackerConfig& cfg) {
    struct Candidate {
        double dist2;
        int track_id;
        double cy, cx;
        std::size_t track_pos, det;
    };
    const double gate2 = cfg.max_distance * cfg.max_distance;
    std::vector<Candidate> candidates;
    for (std::size_t t = 0; t < tracks.size(); ++t) {
        for (std::size_t d = 0; d < detections.size(); ++d) {
            const double dx = detections[d].rect.center_x() - tracks[t].last_center.x;
            const double dy = detections[d].rect.center_y() - tracks[t].last_center.y;
            const double dist2 = dx * dx + dy * dy;
            if (dist2 <= gate2)
                candidates.push_back(
                    {dist2, tracks[t].track_id, detections[d].rect.center_y(), detections[d].rect.center_x(), t, d});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        return std::tie(a.dist2, a.track_id, a.cy, a.cx, a.det) < std::tie(b.dist2, b.track_id, b.cy, b.cx, b.det);
    });

    Association out;
    std::vector<bool> track_used(tracks.size(), false), det_used(detections.size(), false);
    for (const Candidate& c : candidates) {
        if (track_used[c.track_pos] || det_used[c.det]) continue;
        track_used[c.track_pos] = det_used[c.det] = true;
        out.matches.push_back({c.track_id, c.det});
    }
    for (std::size_t d = 0; d < detections.size(); ++d)
        if (!det_used[d]) out.unmatched_detections.push_back(d);
    for (std::size_t t = 0; t < tracks.size(); ++t)
        if (!track_used[t]) out.unmatched_tracks.push_back(tracks[t].track_id);
    return out;
}

std::string_view to_string(TrackEventKind kind) {
    switch (kind) {
        case TrackEventKind::Created: return "created";
        case TrackEventKind::Updated: return "updated";
        case TrackEventKind::Terminated: return "terminated";
    }
    return "unknown";
}

std::string to_json_line(const TrackEvent& e) {
    nlohmann::ordered_json j;
    j["frame"] = e.frame;
    j["track_id"] = e.track_id;
    j["label"] = e.label;
    j["x"] = e.rect.x;
    j["y"] = e.rect.y;
    j["w"] = e.rect.w;
    j["h"] = e.rect.h;
    j["event"] = std::string(to_string(e.kind));
    return j.dump();
}

std::string letter_sequence(int n) {
    std::string s;
    for (int k = n + 1; k > 0; k = (k - 1) / 26) s.insert(s.begin(), static_cast<char>('A' + (k - 1) % 26));
    return s;
}

Tracker::Tracker(TrackerConfig cfg) : cfg_(cfg) { validate(cfg_); }

std::string Tracker::next_auto_label() { return "person" + letter_sequence(next_auto_++); }

StepResult Tracker::step(std::size_t frame_index, const std::vector<Detection>& detections,
                         const std::vector<FeatureVector>& features) {
    if (features.size() != detections.size())
        throw Error(ErrorCode::DimensionMismatch, "feature list is not aligned with detections");

    StepResult result;
    result.assignments.assign(detections.size(), -1);
    const Association assoc = associate(tracks_, detections, cfg_);

    auto find = [&](int id) {
        return std::find_if(tracks_.begin(), tracks_.end(), [id](const FaceTrack& t) { return t.track_id == id; });
    };
    for (const Match& m : assoc.matches) {
        FaceTrack& track = *find(m.track_id);
        const Detection& det = detections[m.detection];
        track.last_center = {det.rect.center_x(), det.rect.center_y()};
        track.last_rect = det.rect;
        track.last_seen = frame_index;
        track.missed = 0;
        if (track.samples.size() < cfg_.max_samples) track.samples.push_back(features[m.detection]);
        result.assignments[m.detection] = track.track_id;
    }

    std::vector<FaceTrack> spawned;
    for (std::size_t d : assoc.unmatched_detections) {
        const Detection& det = detections[d];
        FaceTrack track;
        track.track_id = next_id_++;
        track.label = cfg_.adopt_detection_labels && det.label ? *det.label : next_auto_label();
        track.last_center = {det.rect.center_x(), det.rect.center_y()};
        track.last_rect = det.rect;
        track.last_seen = frame_index;
        track.samples.push_back(features[d]);
        result.assignments[d] = track.track_id;
        spawned.push_back(std::move(track));
    }

    std::vector<int> terminated;
    for (int id : assoc.unmatched_tracks) {
        FaceTrack& track = *find(id);
        if (++track.missed > cfg_.max_missed) terminated.push_back(id);
    }

    for (std::size_t d = 0; d < detections.size(); ++d) {
        const int id = result.assignments[d];
        const auto existing = find(id);
        const bool is_new = existing == tracks_.end();
        const FaceTrack& t = is_new ? *std::find_if(spawned.begin(), spawned.end(),
                                                    [id](const FaceTrack& s) { return s.track_id == id; })
                                    : *existing;
        result.events.push_back({frame_index, id, t.label, detections[d].rect,
                                 is_new ? TrackEventKind::Created : TrackEventKind::Updated});
    }
    for (int id : terminated) {
        const auto it = find(id);
        result.events.push_back({frame_index, id, it->label, it->last_rect, TrackEventKind::Terminated});
        retired_.push_back(std::move(*it));
        tracks_.erase(it);
    }
    for (auto& t : spawned) tracks_.push_back(std::move(t));
    return result;
}

}  // namespace facekit
