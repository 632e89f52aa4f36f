#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "profet/errors.hpp"
#include "profet/trace.hpp"

namespace profet {

// Ordered operation vocabulary. Names are unique and lexicographically
// sorted, with the reserved OTHER slot always last. OTHER is this library's
// catch-all for operations outside the vocabulary: it keeps feature vectors
// fixed-length when a trace contains layers the training corpus never saw.
struct OpVocabulary {
    static constexpr const char* kOther = "OTHER";

    std::vector<std::string> names;  // sorted names + trailing OTHER
    int version = 1;
    std::string provenance;  // who built it, e.g. "corpus" or "train-split:holdout=<m>"

    std::size_t size() const { return names.size(); }
    std::size_t other_slot() const { return names.size() - 1; }

    // Slot of a real op name (never matches the OTHER slot).
    std::optional<std::size_t> index_of(std::string_view op) const;

    void validate() const;

    bool operator==(const OpVocabulary&) const = default;
};

// Fixed-length op-latency features in microseconds; row x_i of the design
// matrix. Length always equals the vocabulary it was built against.
using FeatureVector = std::vector<double>;

struct WorkloadScenario {
    std::string model_id;
    std::string instance;
    int batch_size = 1;   // >= 1
    int pixel_size = 1;   // square side length, >= 1

    bool operator==(const WorkloadScenario&) const = default;
};

// Pairing key: the mbp coordinate, i.e. a scenario with the instance
// dimension removed.
struct ScenarioKey {
    std::string model_id;
    int batch_size = 1;
    int pixel_size = 1;

    auto operator<=>(const ScenarioKey&) const = default;
    std::string to_string() const;

    static ScenarioKey of(const WorkloadScenario& s) {
        return {s.model_id, s.batch_size, s.pixel_size};
    }
};

// One profiled workload: op latencies from the profiling-enabled run and
// the batch latency from the separate run with profiling off.
struct Measurement {
    WorkloadScenario scenario;
    OpLatencyMap op_map;
    double batch_latency_ms = 0.0;  // > 0, finite

    void validate() const;
};

struct PairedRow {
    FeatureVector x;       // anchor-side features
    double y_ms = 0.0;     // target-side batch latency
    ScenarioKey key;
};

// Anchor->target training dataset: anchor features matched to
// target-measured labels over the scenario keys present on both sides.
struct PairedDataset {
    std::string anchor;
    std::string target;
    std::vector<PairedRow> rows;  // sorted by key
    OpVocabulary vocabulary;
    std::size_t skipped = 0;  // keys measured on only one side

    void validate() const;
};

// Vocabulary = ops appearing in at least min_count maps, sorted, plus OTHER.
OpVocabulary build_vocabulary(std::span<const OpLatencyMap> corpus, int min_count,
                              std::string provenance = "corpus");

// Slot k = summed latency of names[k]; ops outside the vocabulary fold into
// OTHER; vocabulary ops absent from the map contribute 0.
FeatureVector vectorize(const OpLatencyMap& m, const OpVocabulary& v);

PairedDataset assemble_pairs(std::span<const Measurement> measurements,
                             const std::string& anchor, const std::string& target,
                             const OpVocabulary& v);

// Corpus manifest (JSON): {"vocabulary": [names...], "measurements": [...]}.
// The vocabulary list may be empty, in which case consumers rebuild it from
// the measurements.
struct CorpusManifest {
    std::vector<std::string> vocabulary;
    std::vector<Measurement> measurements;
};

std::string corpus_to_json(const CorpusManifest& corpus);
CorpusManifest corpus_from_json(std::string_view text);
void save_corpus(const CorpusManifest& corpus, const std::string& path);
CorpusManifest load_corpus(const std::string& path);

// Instances / models present in a measurement set, sorted and deduplicated.
std::vector<std::string> instances_in(std::span<const Measurement> ms);
std::vector<std::string> models_in(std::span<const Measurement> ms);

}  // namespace profet
