#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "facekit/imaging.hpp"

namespace facekit {

struct Detection {
    Rect rect;  // color space, clamped to the frame
    std::size_t frame_index = 0;
    double score = 1.0;
    /// Identity hint carried over from annotation-backed sources; detectors
    /// without ground truth leave it empty.
    std::optional<std::string> label;
};

struct Annotation {
    Rect rect;
    std::optional<std::string> label;

    friend bool operator==(const Annotation&, const Annotation&) = default;
};

/// Ground-truth face boxes keyed by frame index.
struct AnnotationSet {
    std::map<std::size_t, std::vector<Annotation>> frames;

    std::size_t row_count() const;

    friend bool operator==(const AnnotationSet&, const AnnotationSet&) = default;
};

/// CSV rows "frame,x,y,w,h[,label]"; a leading "frame,x,y,w,h,label" header
/// is skipped. Rows of one frame must be contiguous.
AnnotationSet parse_annotations(const std::string& text);
AnnotationSet load_annotations(const std::filesystem::path& path);
void save_annotations(const AnnotationSet& set, const std::filesystem::path& path);
std::string format_annotations(const AnnotationSet& set);

class FaceDetector {
public:
    virtual ~FaceDetector() = default;
    virtual std::vector<Detection> detect(std::size_t frame_index, const ColorFrame& frame) const = 0;
};

/// Replays an AnnotationSet. Boxes are clamped to the frame; boxes that miss
/// the frame entirely are dropped.
class AnnotationDetector final : public FaceDetector {
public:
    explicit AnnotationDetector(AnnotationSet source) : source_(std::move(source)) {}

    std::vector<Detection> detect(std::size_t frame_index, const ColorFrame& frame) const override;

    const AnnotationSet& annotations() const { return source_; }

private:
    AnnotationSet source_;
};

std::vector<Detection> detect(std::size_t frame_index, const ColorFrame& frame, const AnnotationSet& source);

}  // namespace facekit
