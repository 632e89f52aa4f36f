#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>

#include "profet/features.hpp"
#include "profet/forest.hpp"
#include "profet/linear.hpp"
#include "profet/mlp.hpp"

namespace profet {

// Middle order statistic of three finite values; always one of the inputs.
double median3(double a, double b, double c);

struct TrainConfig {
    std::size_t min_rows = 10;
    ForestConfig forest{};
    MlpConfig mlp{};
    // Recorded in train metadata. Kept caller-supplied (0 by default) so a
    // bundle built from the same corpus and seed is byte-identical.
    std::int64_t timestamp_unix_s = 0;
};

struct TrainMeta {
    std::size_t n_rows = 0;
    std::uint64_t seed = 0;
    std::int64_t timestamp_unix_s = 0;
};

// One anchor->target predictor: the three base models trained on identical
// rows, plus the vocabulary their feature vectors are defined against.
struct EnsemblePredictor {
    std::string anchor;
    std::string target;
    LinearModel linear;
    ForestModel forest;
    MlpModel mlp;
    OpVocabulary vocabulary;
    TrainMeta meta;
};

struct BasePredictions {
    double linear = 0.0;
    double forest = 0.0;
    double mlp = 0.0;
};

EnsemblePredictor train_pair(const PairedDataset& d, const TrainConfig& config,
                             std::uint64_t seed, ExecPolicy policy = default_exec_policy());

BasePredictions base_predictions(const EnsemblePredictor& p, std::span<const double> x);

// median3 over the base models, clamped below at 1e-6 ms.
double predict(const EnsemblePredictor& p, std::span<const double> x);

class PredictorRegistry {
public:
    using Key = std::pair<std::string, std::string>;  // (anchor, target)

    void insert(EnsemblePredictor p);
    const EnsemblePredictor* find(const std::string& anchor, const std::string& target) const;
    const std::map<Key, EnsemblePredictor>& predictors() const { return predictors_; }
    std::size_t size() const { return predictors_.size(); }
    bool empty() const { return predictors_.empty(); }

private:
    std::map<Key, EnsemblePredictor> predictors_;
};

// Bundle file (*.profet.json): two lines.
//   line 1  {"format":"profet-bundle","sha256":"<hex>","version":1}
//   line 2  the manifest, one canonical JSON document with every numeric
//           parameter inline (shortest round-trip rendering)
// The checksum covers the manifest line exactly as written, so truncation
// or edits surface as a checksum error while an unsupported version is
// reported as such before the body is touched.
inline constexpr int kBundleFormatVersion = 1;

// Returns the manifest checksum.
std::string save_bundle(const PredictorRegistry& r, const std::string& path);

struct LoadedBundle {
    PredictorRegistry registry;
    std::string checksum;
};

LoadedBundle load_bundle(const std::string& path);

}  // namespace profet
