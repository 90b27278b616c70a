#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "facekit/classify.hpp"
#include "test_support.hpp"

namespace facekit {
namespace {

using testing::TempDir;
using testing::error_of;

FeatureVector fv(std::initializer_list<double> head, std::size_t length = 0) {
    FeatureVector v{std::vector<double>(head)};
    if (length > v.size()) v.values.resize(length, 0.0);
    return v;
}

std::vector<FeatureVector> blob(std::mt19937& rng, double cx, double cy, int n, double spread,
                                std::size_t length = 2) {
    std::normal_distribution<double> d(0.0, spread);
    std::vector<FeatureVector> out;
    for (int i = 0; i < n; ++i) out.push_back(fv({cx + d(rng), cy + d(rng)}, length));
    return out;
}

// Scans directions on a fine circle and reports whether some line separates
// the two 2-D sets with a positive gap.
bool separable_2d(const std::vector<FeatureVector>& a, const std::vector<FeatureVector>& b) {
    for (int k = 0; k < 7200; ++k) {
        const double th = k * M_PI / 3600.0, ux = std::cos(th), uy = std::sin(th);
        double amin = INFINITY, bmax = -INFINITY;
        for (const auto& p : a) amin = std::min(amin, p.values[0] * ux + p.values[1] * uy);
        for (const auto& p : b) bmax = std::max(bmax, p.values[0] * ux + p.values[1] * uy);
        if (amin > bmax) return true;
    }
    return false;
}

TEST(TrainBinary, SymmetricPair) {
    const LinearSvm m = train_binary({fv({1.0, 0.0})}, {fv({-1.0, 0.0})}, {});
    EXPECT_GT(m.decision({1.0, 0.0}), 0.0);
    EXPECT_LT(m.decision({-1.0, 0.0}), 0.0);
    EXPECT_GT(m.w[0], 0.0);
}

TEST(TrainBinary, SeparatesSeparableBlobs) {
    std::mt19937 rng(42);
    for (int trial = 0; trial < 5; ++trial) {
        const auto pos = blob(rng, 2.0, 1.5, 40, 0.4), neg = blob(rng, -1.5, -2.0, 40, 0.4);
        ASSERT_TRUE(separable_2d(pos, neg));
        const LinearSvm m = train_binary(pos, neg, {});
        for (const auto& p : pos) EXPECT_GT(m.decision(p.values), 0.0);
        for (const auto& n : neg) EXPECT_LT(m.decision(n.values), 0.0);
    }
}

TEST(TrainBinary, NeverWorseThanZeroMachine) {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        const auto pos = blob(rng, 0.3, 0.0, 20, 1.0), neg = blob(rng, -0.3, 0.0, 25, 1.0);
        TrainConfig cfg;
        cfg.epochs = 5 + trial;
        cfg.lambda = trial % 2 ? 1e-2 : 1e-4;
        const LinearSvm m = train_binary(pos, neg, cfg);
        const LinearSvm zero{std::vector<double>(2, 0.0), 0.0, cfg.lambda};
        EXPECT_LE(svm_objective(m, pos, neg), svm_objective(zero, pos, neg));
    }
}

TEST(TrainBinary, IdenticalPointInBothClassesStaysFinite) {
    const LinearSvm m = train_binary({fv({0.5, 0.5})}, {fv({0.5, 0.5})}, {});
    for (double w : m.w) EXPECT_TRUE(std::isfinite(w));
    EXPECT_TRUE(std::isfinite(m.b));
}

TEST(TrainBinary, RejectsBadInput) {
    EXPECT_EQ(error_of([] { train_binary({}, {fv({1.0})}, {}); }), ErrorCode::EmptyInput);
    EXPECT_EQ(error_of([] { train_binary({fv({1.0})}, {fv({1.0, 2.0})}, {}); }), ErrorCode::DimensionMismatch);
    EXPECT_EQ(error_of([] { train_binary({fv({NAN})}, {fv({1.0})}, {}); }), ErrorCode::NonFinite);
    EXPECT_EQ(error_of([] { train_binary({fv({1.0})}, {fv({-1.0})}, {0.0, 10, 1}); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(error_of([] { train_binary({fv({1.0})}, {fv({-1.0})}, {1e-4, 0, 1}); }), ErrorCode::InvalidArgument);
}

TEST(TrainBinary, BitReproducible) {
    std::mt19937 rng(5);
    const auto pos = blob(rng, 1, 1, 30, 0.8), neg = blob(rng, -1, 0, 30, 0.8);
    EXPECT_EQ(train_binary(pos, neg, {}), train_binary(pos, neg, {}));
}

constexpr std::size_t kLen = 256;

SampleDatabase three_clusters(std::mt19937& rng, int n) {
    SampleDatabase db;
    std::normal_distribution<double> d(0.0, 0.05);
    const char* names[] = {"carol", "alice", "bob"};
    for (int c = 0; c < 3; ++c) {
        for (int i = 0; i < n; ++i) {
            FeatureVector v{std::vector<double>(kLen, 0.0)};
            v.values[static_cast<std::size_t>(c)] = 1.0 + d(rng);
            v.values[3] = d(rng);
            db[names[c]].push_back(v);
        }
    }
    return db;
}

TEST(Ovr, LabelsAreSortedAndMatchNearestCentroid) {
    std::mt19937 rng(1);
    const SampleDatabase db = three_clusters(rng, 15);
    const OvrModel model = train_ovr(db, {1, 1}, {});
    EXPECT_EQ(model.labels, (std::vector<std::string>{"alice", "bob", "carol"}));
    EXPECT_EQ(model.machines.size(), 3u);
    EXPECT_EQ(model.feature_length, kLen);

    std::map<std::string, std::vector<double>> centroid;
    for (const auto& [label, xs] : db) {
        std::vector<double> c(kLen, 0.0);
        for (const auto& x : xs)
            for (std::size_t j = 0; j < kLen; ++j) c[j] += x.values[j] / static_cast<double>(xs.size());
        centroid[label] = c;
    }
    const SampleDatabase queries = three_clusters(rng, 20);
    for (const auto& [_, xs] : queries) {
        for (const auto& x : xs) {
            std::string nearest;
            double best = INFINITY;
            for (const auto& [label, c] : centroid) {
                double d2 = 0;
                for (std::size_t j = 0; j < kLen; ++j) d2 += (x.values[j] - c[j]) * (x.values[j] - c[j]);
                if (d2 < best) best = d2, nearest = label;
            }
            EXPECT_EQ(predict(model, x).label, nearest);
        }
    }
}

TEST(Ovr, TwoLabelsWorkAndOneLabelIsRejected) {
    std::mt19937 rng(2);
    SampleDatabase db = three_clusters(rng, 5);
    db.erase("carol");
    const OvrModel model = train_ovr(db, {1, 1}, {});
    EXPECT_EQ(model.labels.size(), 2u);
    EXPECT_EQ(predict(model, db.at("alice")[0]).label, "alice");
    db.erase("bob");
    EXPECT_EQ(error_of([&] { train_ovr(db, {1, 1}, {}); }), ErrorCode::EmptyInput);
}

OvrModel hand_model() {
    OvrModel m;
    m.labels = {"a", "b"};
    m.feature_length = kLen;
    m.grid = {1, 1};
    m.machines = {{std::vector<double>(kLen, 0.0), 0.5, 1e-4}, {std::vector<double>(kLen, 0.0), 0.5, 1e-4}};
    m.machines[0].w[0] = 1.0;
    m.machines[1].w[1] = 1.0;
    return m;
}

TEST(Predict, TiesRejectionAndLengthCheck) {
    const OvrModel m = hand_model();
    const FeatureVector tie = fv({1.0, 1.0}, kLen);
    EXPECT_EQ(predict(m, tie).label, "a");
    EXPECT_EQ(predict(m, fv({0.0, 2.0}, kLen)).label, "b");
    EXPECT_DOUBLE_EQ(predict(m, fv({0.0, 2.0}, kLen)).score, 2.5);
    const Prediction rejected = predict(m, tie, INFINITY);
    EXPECT_EQ(rejected.label, kUnknownLabel);
    EXPECT_FALSE(rejected.known());
    EXPECT_EQ(predict(m, tie, 1.5).label, "a");
    EXPECT_EQ(error_of([&] { predict(m, fv({1.0})); }), ErrorCode::DimensionMismatch);
}

TEST(Predict, PositiveScalingOfAllMachinesKeepsLabels) {
    std::mt19937 rng(3);
    const SampleDatabase db = three_clusters(rng, 10);
    const OvrModel model = train_ovr(db, {1, 1}, {});
    for (double c : {0.5, 3.0, 1000.0}) {
        OvrModel scaled = model;
        for (auto& m : scaled.machines) {
            for (double& w : m.w) w *= c;
            m.b *= c;
        }
        for (const auto& [_, xs] : db)
            for (const auto& x : xs) EXPECT_EQ(predict(scaled, x).label, predict(model, x).label);
    }
}

TEST(ModelFile, RoundTripIsExactAndDeterministic) {
    TempDir dir;
    std::mt19937 rng(4);
    const SampleDatabase db = three_clusters(rng, 8);
    const OvrModel a = train_ovr(db, {1, 1}, {});
    const OvrModel b = train_ovr(db, {1, 1}, {});
    EXPECT_EQ(serialize_model(a), serialize_model(b));
    save_model(a, dir / "m.txt");
    const OvrModel loaded = load_model(dir / "m.txt");
    EXPECT_EQ(loaded, a);
    for (const auto& [_, xs] : db) {
        for (const auto& x : xs) {
            const Prediction p = predict(a, x), q = predict(loaded, x);
            EXPECT_EQ(p.label, q.label);
            EXPECT_EQ(p.score, q.score);
        }
    }
}

TEST(ModelFile, DetectsTruncationAndVersion) {
    const std::string text = serialize_model(hand_model());
    const std::size_t header_end = text.find('\n');
    for (std::size_t cut = header_end + 1; cut + 1 < text.size(); cut += 7)
        EXPECT_EQ(error_of([&] { deserialize_model(text.substr(0, cut)); }), ErrorCode::CorruptedPayload) << cut;
    EXPECT_EQ(error_of([&] { deserialize_model(""); }), ErrorCode::CorruptedPayload);

    std::string v2 = text;
    v2.replace(v2.find(" v1"), 3, " v2");
    EXPECT_EQ(error_of([&] { deserialize_model(v2); }), ErrorCode::VersionMismatch);

    std::string bad_number = text;
    bad_number.replace(bad_number.find("0.5"), 3, "0.x");
    EXPECT_EQ(error_of([&] { deserialize_model(bad_number); }), ErrorCode::CorruptedPayload);
}

}  // namespace
}  // namespace facekit
