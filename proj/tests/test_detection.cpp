#include <gtest/gtest.h>

#include "facekit/detection.hpp"
#include "test_support.hpp"

namespace facekit {
namespace {

using testing::TempDir;
using testing::error_of;

TEST(Annotations, ParsesRowsWithAndWithoutLabels) {
    const AnnotationSet set = parse_annotations("frame,x,y,w,h,label\n0,10,20,30,40,alice\n0,50,60,10,10\n2,1,2,3,4,bob\n");
    ASSERT_EQ(set.frames.size(), 2u);
    EXPECT_EQ(set.row_count(), 3u);
    EXPECT_EQ(set.frames.at(0)[0], (Annotation{{10, 20, 30, 40}, "alice"}));
    EXPECT_EQ(set.frames.at(0)[1], (Annotation{{50, 60, 10, 10}, std::nullopt}));
    EXPECT_EQ(set.frames.at(2)[0].label, "bob");
}

TEST(Annotations, HeaderIsOptional) {
    EXPECT_EQ(parse_annotations("3,1,1,5,5,x\n").row_count(), 1u);
    EXPECT_EQ(parse_annotations("").row_count(), 0u);
}

TEST(Annotations, RejectsMalformedRows) {
    EXPECT_EQ(error_of([] { parse_annotations("0,1,1,0,5\n"); }), ErrorCode::MalformedRow);
    EXPECT_EQ(error_of([] { parse_annotations("0,1,1,5,-2\n"); }), ErrorCode::MalformedRow);
    EXPECT_EQ(error_of([] { parse_annotations("0,1,1,5\n"); }), ErrorCode::MalformedRow);
    EXPECT_EQ(error_of([] { parse_annotations("0,1,one,5,5\n"); }), ErrorCode::MalformedRow);
    EXPECT_EQ(error_of([] { parse_annotations("-1,1,1,5,5\n"); }), ErrorCode::MalformedRow);
    EXPECT_EQ(error_of([] { parse_annotations("0,1,1,5,5\n1,1,1,5,5\n0,2,2,5,5\n"); }), ErrorCode::MalformedRow);
}

TEST(Annotations, RoundTripThroughFile) {
    TempDir dir;
    AnnotationSet set;
    set.frames[0] = {{{10, 20, 30, 40}, "alice"}, {{0, 0, 5, 5}, std::nullopt}};
    set.frames[7] = {{{-3, 4, 10, 12}, "bob"}};
    save_annotations(set, dir / "a.csv");
    EXPECT_EQ(load_annotations(dir / "a.csv"), set);
    EXPECT_EQ(parse_annotations(format_annotations(set)), set);
}

TEST(Detect, ClampsAndDropsBoxes) {
    AnnotationSet set;
    set.frames[1] = {{{-10, -5, 30, 20}, "a"}, {{300, 200, 50, 80}, "b"}, {{400, 10, 5, 5}, "c"}};
    const ColorFrame frame(320, 240);
    const auto dets = detect(1, frame, set);
    ASSERT_EQ(dets.size(), 2u);
    EXPECT_EQ(dets[0].rect, (Rect{0, 0, 20, 15}));
    EXPECT_EQ(dets[1].rect, (Rect{300, 200, 20, 40}));
    EXPECT_EQ(dets[0].label, "a");
    EXPECT_EQ(dets[1].frame_index, 1u);
    for (const auto& d : dets) {
        EXPECT_GE(d.rect.x, 0);
        EXPECT_GE(d.rect.y, 0);
        EXPECT_LE(d.rect.right(), 320);
        EXPECT_LE(d.rect.bottom(), 240);
    }
}

TEST(Detect, FrameWithoutRowsYieldsNothing) {
    AnnotationSet set;
    set.frames[0] = {{{1, 1, 5, 5}, std::nullopt}};
    const AnnotationDetector detector(set);
    EXPECT_TRUE(detector.detect(3, ColorFrame(10, 10)).empty());
    EXPECT_EQ(detector.detect(0, ColorFrame(10, 10)).size(), 1u);
}

}  // namespace
}  // namespace facekit
