#include "profet/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace profet {

using nlohmann::json;

std::optional<std::size_t> OpVocabulary::index_of(std::string_view op) const {
    if (names.empty()) return std::nullopt;
    auto begin = names.begin();
    auto end = names.end() - 1;  // exclude OTHER
    auto it = std::lower_bound(begin, end, op);
    if (it != end && *it == op) return static_cast<std::size_t>(it - begin);
    return std::nullopt;
}

void OpVocabulary::validate() const {
    if (names.empty()) throw ValidationError("vocabulary is empty");
    if (names.back() != kOther)
        throw ValidationError("vocabulary must end with the OTHER slot");
    for (std::size_t i = 0; i + 2 < names.size(); ++i) {
        if (!(names[i] < names[i + 1]))
            throw ValidationError("vocabulary names must be sorted and unique");
    }
    for (std::size_t i = 0; i + 1 < names.size(); ++i) {
        if (names[i] == kOther)
            throw ValidationError("OTHER may only appear as the final slot");
    }
}

std::string ScenarioKey::to_string() const {
    return model_id + "|b" + std::to_string(batch_size) + "|p" + std::to_string(pixel_size);
}

void Measurement::validate() const {
    if (scenario.model_id.empty()) throw ValidationError("measurement has empty model id");
    if (scenario.instance.empty()) throw ValidationError("measurement has empty instance id");
    if (scenario.batch_size < 1 || scenario.pixel_size < 1)
        throw ValidationError("batch and pixel sizes must be >= 1");
    if (!(batch_latency_ms > 0.0) || !std::isfinite(batch_latency_ms))
        throw ValidationError("batch latency must be positive and finite");
    for (const auto& [op, us] : op_map) {
        if (op.empty()) throw ValidationError("op map has an empty key");
        if (us < 0.0 || !std::isfinite(us))
            throw ValidationError("op map value for '" + op + "' must be >= 0 and finite");
    }
}

void PairedDataset::validate() const {
    if (anchor == target) throw ValidationError("anchor and target must differ");
    vocabulary.validate();
    std::set<ScenarioKey> seen;
    for (const auto& row : rows) {
        if (row.x.size() != vocabulary.size())
            throw ValidationError("row feature length does not match vocabulary");
        if (!(row.y_ms > 0.0) || !std::isfinite(row.y_ms))
            throw ValidationError("row label must be positive and finite");
        if (!seen.insert(row.key).second)
            throw ValidationError("duplicate scenario key " + row.key.to_string());
    }
}

OpVocabulary build_vocabulary(std::span<const OpLatencyMap> corpus, int min_count,
                              std::string provenance) {
    if (corpus.empty()) throw ValidationError("cannot build a vocabulary from an empty corpus");
    if (min_count < 1) throw ValidationError("min_count must be >= 1");

    std::map<std::string, int> doc_freq;
    for (const auto& m : corpus) {
        for (const auto& [op, us] : m) {
            (void)us;
            ++doc_freq[op];
        }
    }
    OpVocabulary v;
    for (const auto& [op, count] : doc_freq) {
        // A raw op literally named OTHER folds into the reserved slot.
        if (count >= min_count && op != OpVocabulary::kOther) v.names.push_back(op);
    }
    if (v.names.empty())
        throw ValidationError("no operation survived the min_count=" +
                              std::to_string(min_count) + " filter");
    v.names.push_back(OpVocabulary::kOther);
    v.provenance = std::move(provenance);
    v.validate();
    return v;
}

FeatureVector vectorize(const OpLatencyMap& m, const OpVocabulary& v) {
    FeatureVector x(v.size(), 0.0);
    for (const auto& [op, us] : m) {
        if (auto slot = v.index_of(op)) {
            x[*slot] += us;
        } else {
            x[v.other_slot()] += us;
        }
    }
    return x;
}

PairedDataset assemble_pairs(std::span<const Measurement> measurements,
                             const std::string& anchor, const std::string& target,
                             const OpVocabulary& v) {
    if (anchor == target)
        throw ValidationError("anchor and target must be different instances");
    v.validate();

    std::map<ScenarioKey, const Measurement*> anchor_side, target_side;
    for (const auto& m : measurements) {
        if (m.scenario.instance != anchor && m.scenario.instance != target) continue;
        auto& side = (m.scenario.instance == anchor) ? anchor_side : target_side;
        auto [it, inserted] = side.emplace(ScenarioKey::of(m.scenario), &m);
        if (!inserted)
            throw ValidationError("duplicate measurement for " + it->first.to_string() +
                                  " on " + m.scenario.instance);
    }

    PairedDataset ds;
    ds.anchor = anchor;
    ds.target = target;
    ds.vocabulary = v;
    for (const auto& [key, am] : anchor_side) {
        auto it = target_side.find(key);
        if (it == target_side.end()) {
            ++ds.skipped;
            continue;
        }
        ds.rows.push_back({vectorize(am->op_map, v), it->second->batch_latency_ms, key});
    }
    for (const auto& [key, tm] : target_side) {
        (void)tm;
        if (!anchor_side.contains(key)) ++ds.skipped;
    }
    if (ds.rows.empty())
        throw ValidationError("no scenario measured on both " + anchor + " and " + target);
    ds.validate();
    return ds;
}

namespace {

json measurement_to_json(const Measurement& m) {
    json ops = json::object();
    for (const auto& [op, us] : m.op_map) ops[op] = us;
    return json{{"scenario",
                 {{"model", m.scenario.model_id},
                  {"instance", m.scenario.instance},
                  {"batch", m.scenario.batch_size},
                  {"pixels", m.scenario.pixel_size}}},
                {"ops", ops},
                {"batch_latency_ms", m.batch_latency_ms}};
}

Measurement measurement_from_json(const json& j) {
    Measurement m;
    const auto& sc = j.at("scenario");
    m.scenario.model_id = sc.at("model").get<std::string>();
    m.scenario.instance = sc.at("instance").get<std::string>();
    m.scenario.batch_size = sc.at("batch").get<int>();
    m.scenario.pixel_size = sc.at("pixels").get<int>();
    for (const auto& [op, us] : j.at("ops").items()) {
        if (!us.is_number()) throw ParseError("op latency for '" + op + "' must be a number");
        m.op_map[op] = us.get<double>();
    }
    m.batch_latency_ms = j.at("batch_latency_ms").get<double>();
    m.validate();
    return m;
}

}  // namespace

std::string corpus_to_json(const CorpusManifest& corpus) {
    json j;
    j["vocabulary"] = corpus.vocabulary;
    json ms = json::array();
    for (const auto& m : corpus.measurements) ms.push_back(measurement_to_json(m));
    j["measurements"] = ms;
    return j.dump(2) + "\n";
}

CorpusManifest corpus_from_json(std::string_view text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ParseError("corpus manifest is not valid JSON");
    CorpusManifest corpus;
    try {
        if (j.contains("vocabulary"))
            corpus.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
        for (const auto& m : j.at("measurements")) {
            corpus.measurements.push_back(measurement_from_json(m));
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("corpus manifest: ") + e.what());
    }
    return corpus;
}

void save_corpus(const CorpusManifest& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << corpus_to_json(corpus);
    if (!out) throw IoError("failed to write '" + path + "'");
}

CorpusManifest load_corpus(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return corpus_from_json(ss.str());
}

namespace {

std::vector<std::string> sorted_unique(std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

}  // namespace

std::vector<std::string> instances_in(std::span<const Measurement> ms) {
    std::vector<std::string> out;
    out.reserve(ms.size());
    for (const auto& m : ms) out.push_back(m.scenario.instance);
    return sorted_unique(std::move(out));
}

std::vector<std::string> models_in(std::span<const Measurement> ms) {
    std::vector<std::string> out;
    out.reserve(ms.size());
    for (const auto& m : ms) out.push_back(m.scenario.model_id);
    return sorted_unique(std::move(out));
}

}  // namespace profet
