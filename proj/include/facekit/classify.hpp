#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "facekit/features.hpp"

namespace facekit {

struct TrainConfig {
    double lambda = 1e-4;
    int epochs = 200;
    std::uint64_t seed = 42;
};

void validate(const TrainConfig& cfg);

struct LinearSvm {
    std::vector<double> w;
    double b = 0.0;
    double lambda = 1e-4;

    double decision(const std::vector<double>& x) const;

    friend bool operator==(const LinearSvm&, const LinearSvm&) = default;
};

/// lambda/2 * |w|^2 + mean hinge loss over the labelled set (y = +1 for
/// positives, -1 for negatives).
double svm_objective(const LinearSvm& svm, const std::vector<FeatureVector>& positives,
                     const std::vector<FeatureVector>& negatives);

/// Stochastic subgradient descent on the primal objective with step
/// 1/(lambda*t), one seeded shuffle per epoch. At every epoch end both the
/// current iterate and the running average of all iterates are scored; the
/// lowest-objective machine seen (w = 0, b = 0 included) is returned, so the
/// result never scores worse than the zero machine.
/// Bit-reproducible for identical inputs and seed.
LinearSvm train_binary(const std::vector<FeatureVector>& positives, const std::vector<FeatureVector>& negatives,
                       const TrainConfig& cfg);

struct OvrModel {
    std::vector<std::string> labels;  // lexicographic
    std::vector<LinearSvm> machines;  // parallel to labels
    std::size_t feature_length = 0;
    LbpParams grid;

    friend bool operator==(const OvrModel&, const OvrModel&) = default;
};

using SampleDatabase = std::map<std::string, std::vector<FeatureVector>>;

/// One machine per label: that label's samples against everyone else's.
/// Machines train concurrently; each is trained sequentially.
OvrModel train_ovr(const SampleDatabase& database, const LbpParams& grid, const TrainConfig& cfg);

inline constexpr const char* kUnknownLabel = "unknown";

struct Prediction {
    std::string label;
    double score = 0.0;

    bool known() const { return label != kUnknownLabel; }
};

/// Highest-scoring label (first in lexicographic order on ties), or
/// "unknown" when that score is below `reject_threshold`.
Prediction predict(const OvrModel& model, const FeatureVector& x,
                   double reject_threshold = -std::numeric_limits<double>::infinity());

std::string serialize_model(const OvrModel& model);
OvrModel deserialize_model(const std::string& text);
void save_model(const OvrModel& model, const std::filesystem::path& path);
OvrModel load_model(const std::filesystem::path& path);

}  // namespace facekit
