#include <gtest/gtest.h>

#include <cstdlib>
#include <json.hpp>
#include <sstream>

#include "facekit/pipeline.hpp"
#include "facekit/synthdata.hpp"
#include "test_support.hpp"

namespace facekit {
namespace {

using testing::TempDir;
using testing::error_of;
using testing::read_bytes;
using testing::write_bytes;

class PipelineTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        root_ = new TempDir;
        synth::generate(testing::two_subject_scene(30), *root_ / "train");
        synth::generate(testing::two_subject_scene(20, true), *root_ / "test");
    }
    static void TearDownTestSuite() {
        delete root_;
        root_ = nullptr;
    }

    static Dataset train() { return Dataset::open(*root_ / "train"); }
    static Dataset test() { return Dataset::open(*root_ / "test"); }
    static std::filesystem::path dir(const std::string& name) { return *root_ / name; }

    static RunConfig small_config(FeatureSource source = FeatureSource::Depth) {
        RunConfig cfg;
        cfg.source = source;
        cfg.roi_size = 64;
        return cfg;
    }

    static TempDir* root_;
};

TempDir* PipelineTest::root_ = nullptr;

TEST_F(PipelineTest, TrackedEnrollmentUsesEveryTrackedSample) {
    RunConfig cfg = small_config();
    cfg.tracker.max_samples = 50;
    const EnrollResult r = run_enroll(train(), cfg);
    EXPECT_EQ(r.model.labels, (std::vector<std::string>{"alice", "bob"}));

    std::map<std::string, std::size_t> observed;
    for (const TrackEvent& e : r.track_log)
        if (e.kind != TrackEventKind::Terminated) ++observed[e.label];
    for (const auto& [label, n] : observed) {
        EXPECT_EQ(n, 30u);
        EXPECT_EQ(r.samples_used.at(label), std::min<std::size_t>(cfg.tracker.max_samples, n));
    }

    cfg.tracker.max_samples = 7;
    const EnrollResult capped = run_enroll(train(), cfg);
    for (const auto& [_, n] : capped.samples_used) EXPECT_EQ(n, 7u);
}

TEST_F(PipelineTest, SingleFrameEnrollmentUsesOneSamplePerIdentity) {
    RunConfig cfg = small_config();
    cfg.mode = EnrollmentMode::SingleFrame;
    const EnrollResult r = run_enroll(train(), cfg);
    ASSERT_EQ(r.samples_used.size(), 2u);
    for (const auto& [_, n] : r.samples_used) EXPECT_EQ(n, 1u);
}

TEST_F(PipelineTest, SingleIdentityIsRejected) {
    const auto out = dir("solo");
    synth::generate(synth::parse_scene("frames = 3\n"
                                       "subject.0.label = solo\n"
                                       "subject.0.texture_seed = 5\n"
                                       "subject.0.relief_seed = 6\n"
                                       "subject.0.path = static 100 100\n"),
                    out);
    EXPECT_EQ(error_of([&] { run_enroll(Dataset::open(out), small_config()); }), ErrorCode::InvalidArgument);
}

TEST_F(PipelineTest, SelfRecognitionMatchesGroundTruth) {
    const RunConfig cfg = small_config();
    const OvrModel model = run_enroll(train(), cfg).model;
    const auto rows = run_recognize(train(), model, cfg);
    EXPECT_EQ(rows.size(), 60u);
    for (const RecognitionRow& row : rows) {
        ASSERT_TRUE(row.truth);
        EXPECT_EQ(row.label, *row.truth) << "frame " << row.frame;
    }
}

TEST_F(PipelineTest, RecognitionRowsStayInBoundsWithKnownLabels) {
    for (FeatureSource source : {FeatureSource::Depth, FeatureSource::Gray}) {
        RunConfig cfg = small_config(source);
        const OvrModel model = run_enroll(train(), cfg).model;
        cfg.reject_threshold = 0.0;
        for (const RecognitionRow& row : run_recognize(test(), model, cfg)) {
            EXPECT_GE(row.rect.x, 0);
            EXPECT_GE(row.rect.y, 0);
            EXPECT_LE(row.rect.right(), 320);
            EXPECT_LE(row.rect.bottom(), 240);
            const bool known = std::find(model.labels.begin(), model.labels.end(), row.label) != model.labels.end();
            EXPECT_TRUE(known || row.label == kUnknownLabel) << row.label;
            const auto j = nlohmann::json::parse(to_json_line(row));
            EXPECT_EQ(j["label"], row.label);
            EXPECT_EQ(j["frame"], row.frame);
        }
    }
}

TEST_F(PipelineTest, GridMismatchIsRejected) {
    RunConfig cfg = small_config();
    cfg.grid = {2, 2};
    const OvrModel model = run_enroll(train(), cfg).model;
    cfg.grid = {1, 1};
    EXPECT_EQ(error_of([&] { run_recognize(train(), model, cfg); }), ErrorCode::FeatureMismatch);
}

TEST_F(PipelineTest, FramesWithoutDetectionsProduceNoRows) {
    const auto copy = dir("gaps");
    std::filesystem::copy(dir("train"), copy);
    AnnotationSet ann = load_annotations(copy / "annotations.csv");
    ann.frames.erase(4);
    ann.frames.erase(5);
    save_annotations(ann, copy / "annotations.csv");

    const RunConfig cfg = small_config();
    const OvrModel model = run_enroll(train(), cfg).model;
    const auto rows = run_recognize(Dataset::open(copy), model, cfg);
    EXPECT_EQ(rows.size(), 56u);
    for (const RecognitionRow& row : rows) EXPECT_TRUE(row.frame != 4 && row.frame != 5);
}

TEST_F(PipelineTest, DetectionsWithoutDepthAreSkippedWithAWarning) {
    const auto copy = dir("holes");
    std::filesystem::copy(dir("train"), copy);
    save_depth(DepthFrame(320, 240), depth_path(copy, 2));

    std::ostringstream warnings;
    RunConfig cfg = small_config();
    cfg.warnings = &warnings;
    const EnrollResult r = run_enroll(Dataset::open(copy), cfg);
    EXPECT_NE(warnings.str().find("frame 2"), std::string::npos);
    for (const auto& [_, n] : r.samples_used) EXPECT_EQ(n, 29u);
    const auto rows = run_recognize(Dataset::open(copy), r.model, cfg);
    EXPECT_EQ(rows.size(), 58u);
}

TEST_F(PipelineTest, EvaluationOrderingsHold) {
    const auto reports = run_evaluate(train(), test(), small_config());
    ASSERT_EQ(reports.size(), 4u);
    EXPECT_EQ(reports[0].source, FeatureSource::Depth);
    EXPECT_EQ(reports[0].mode, EnrollmentMode::Tracked);
    EXPECT_EQ(reports[3].source, FeatureSource::Gray);
    EXPECT_EQ(reports[3].mode, EnrollmentMode::SingleFrame);
    for (const EvalReport& r : reports) {
        EXPECT_FALSE(r.self_test);
        EXPECT_EQ(r.total, 40u);
        EXPECT_EQ(r.frames, 20u);
    }
    EXPECT_GE(reports[0].accuracy, reports[1].accuracy);
    EXPECT_GE(reports[2].accuracy, reports[3].accuracy);
    EXPECT_GE(reports[0].accuracy, reports[2].accuracy);

    const std::string csv = format_eval_csv(reports);
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "source,enrollment,split,accuracy,correct,total,frames,enroll_features_ms,training_ms,predict_ms");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

TEST_F(PipelineTest, SelfTestOnTrackedDepthIsPerfect) {
    const auto reports = run_evaluate(train(), train(), small_config());
    EXPECT_TRUE(reports[0].self_test);
    EXPECT_EQ(reports[0].accuracy, 1.0);
}

TEST_F(PipelineTest, MismatchedLabelSetsAreRejected) {
    const auto copy = dir("relabel");
    std::filesystem::copy(dir("test"), copy);
    std::string text = read_bytes(copy / "annotations.csv");
    for (std::size_t at; (at = text.find("bob")) != std::string::npos;) text.replace(at, 3, "eve");
    write_bytes(copy / "annotations.csv", text);
    EXPECT_EQ(error_of([&] { run_evaluate(train(), Dataset::open(copy), small_config()); }),
              ErrorCode::LabelMismatch);
}

TEST_F(PipelineTest, RunsAreDeterministicAcrossEngines) {
    RunConfig cfg = small_config();
    const EnrollResult a = run_enroll(train(), cfg);
    cfg.workers = 4;
    const EnrollResult b = run_enroll(train(), cfg);
    EXPECT_EQ(serialize_model(a.model), serialize_model(b.model));

    auto stream = [&](const OvrModel& m, const RunConfig& c) {
        std::string out;
        for (const auto& row : run_recognize(test(), m, c)) out += to_json_line(row) + "\n";
        return out;
    };
    EXPECT_EQ(stream(a.model, small_config()), stream(b.model, cfg));
}

TEST_F(PipelineTest, GraySourceIsTheClassicalLbpPipeline) {
    const RunConfig cfg = small_config(FeatureSource::Gray);
    const Dataset ds = train();
    const AnnotationDetector detector(ds.annotations());
    for (std::size_t f : {0u, 13u, 29u}) {
        const GrayFrame gray = to_gray(ds.color(f));
        for (const FaceObservation& obs : observe_frame(ds, f, detector, cfg)) {
            ASSERT_TRUE(obs.feature);
            EXPECT_EQ(obs.roi, obs.detection.rect);
            const FeatureVector direct = extract(resize(crop(gray, obs.detection.rect), 64, 64), cfg.grid);
            EXPECT_EQ(*obs.feature, direct);
        }
    }
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(FACEKIT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

long line_count(const std::filesystem::path& p) {
    const std::string text = read_bytes(p);
    return std::count(text.begin(), text.end(), '\n');
}

TEST_F(PipelineTest, CliExitCodes) {
    const std::string train_dir = dir("train").string();
    const std::string model = dir("cli_model.txt").string();
    EXPECT_EQ(run_cli(""), 1);
    EXPECT_EQ(run_cli("enroll --data " + train_dir), 1);
    EXPECT_EQ(run_cli("enroll --data " + train_dir + " --model " + model + " --grid 2by2"), 1);
    EXPECT_EQ(run_cli("enroll --data " + train_dir + " --model " + model + " --roi-size 64"), 0);
    EXPECT_EQ(run_cli("recognize --data " + train_dir + " --model " + model + " --roi-size 64 --out " +
                      dir("rows.jsonl").string()),
              0);
    EXPECT_EQ(line_count(dir("rows.jsonl")), 60);

    write_bytes(dir("broken.txt"), read_bytes(model).substr(0, 40));
    EXPECT_EQ(run_cli("recognize --data " + train_dir + " --model " + dir("broken.txt").string()), 2);
    EXPECT_EQ(run_cli("recognize --data " + train_dir + " --model " + model + " --grid 2x2 --roi-size 64"), 2);
    EXPECT_EQ(run_cli("bench --sizes 16,24 --workers 1,2 --repetitions 3 --out " + dir("bench.csv").string()), 0);
    EXPECT_EQ(line_count(dir("bench.csv")), 1 + 2 * 3);
    EXPECT_EQ(run_cli("bench --repetitions 2"), 1);

    write_bytes(dir("bad.scene"), "frames = 2\nsubject.0.label = a\n");
    EXPECT_EQ(run_cli("synth --spec " + dir("bad.scene").string() + " --out " + dir("never").string()), 2);
}

}  // namespace
}  // namespace facekit
