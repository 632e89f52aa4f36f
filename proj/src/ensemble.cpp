#include "profet/ensemble.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "profet/rng.hpp"
#include "profet/sha256.hpp"

namespace profet {

using nlohmann::json;

namespace {
constexpr double kLatencyFloorMs = 1e-6;
}

double median3(double a, double b, double c) {
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c))
        throw ValidationError("median3 requires finite inputs");
    return std::max(std::min(a, b), std::min(std::max(a, b), c));
}

EnsemblePredictor train_pair(const PairedDataset& d, const TrainConfig& config,
                             std::uint64_t seed, ExecPolicy policy) {
    d.validate();
    if (d.rows.size() < config.min_rows)
        throw ValidationError("train_pair: " + std::to_string(d.rows.size()) +
                              " rows, need at least " + std::to_string(config.min_rows));

    Matrix X(d.rows.size(), d.vocabulary.size());
    std::vector<double> y(d.rows.size());
    for (std::size_t i = 0; i < d.rows.size(); ++i) {
        auto dst = X.row(i);
        std::copy(d.rows[i].x.begin(), d.rows[i].x.end(), dst.begin());
        y[i] = d.rows[i].y_ms;
    }

    EnsemblePredictor p;
    p.anchor = d.anchor;
    p.target = d.target;
    p.vocabulary = d.vocabulary;
    try {
        p.linear = fit_ols(X, y);
    } catch (const Error& e) {
        throw ValidationError("linear: " + std::string(e.what()));
    }
    try {
        p.forest = fit_forest(X, y, config.forest, rng::combine(seed, "forest"), policy);
    } catch (const Error& e) {
        throw ValidationError("forest: " + std::string(e.what()));
    }
    try {
        p.mlp = fit_mlp(X, y, config.mlp, rng::combine(seed, "mlp"), policy);
    } catch (const Error& e) {
        throw ValidationError("mlp: " + std::string(e.what()));
    }
    p.meta = {d.rows.size(), seed, config.timestamp_unix_s};
    return p;
}

BasePredictions base_predictions(const EnsemblePredictor& p, std::span<const double> x) {
    if (x.size() != p.vocabulary.size())
        throw ValidationError("predict: expected " + std::to_string(p.vocabulary.size()) +
                              " features, got " + std::to_string(x.size()));
    return {predict_linear(p.linear, x), predict_forest(p.forest, x), predict_mlp(p.mlp, x)};
}

double predict(const EnsemblePredictor& p, std::span<const double> x) {
    BasePredictions b = base_predictions(p, x);
    double med = median3(b.linear, b.forest, b.mlp);
    return med > kLatencyFloorMs ? med : kLatencyFloorMs;
}

void PredictorRegistry::insert(EnsemblePredictor p) {
    if (p.anchor == p.target)
        throw ValidationError("registry rejects self-pair " + p.anchor);
    Key key{p.anchor, p.target};
    if (!predictors_.emplace(std::move(key), std::move(p)).second)
        throw ValidationError("registry already holds this (anchor, target) pair");
}

const EnsemblePredictor* PredictorRegistry::find(const std::string& anchor,
                                                 const std::string& target) const {
    auto it = predictors_.find({anchor, target});
    return it == predictors_.end() ? nullptr : &it->second;
}

namespace {

json matrix_to_json(const Matrix& m) {
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

Matrix matrix_from_json(const json& j) {
    Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    auto data = j.at("data").get<std::vector<double>>();
    if (data.size() != m.rows() * m.cols())
        throw BundleError(BundleError::Kind::Structure, "matrix payload size mismatch");
    m.data() = std::move(data);
    return m;
}

json predictor_to_json(const EnsemblePredictor& p) {
    json trees = json::array();
    for (const auto& tree : p.forest.trees) {
        json t;
        auto& feature = t["feature"] = json::array();
        auto& threshold = t["threshold"] = json::array();
        auto& left = t["left"] = json::array();
        auto& right = t["right"] = json::array();
        auto& value = t["value"] = json::array();
        for (const auto& n : tree.nodes) {
            feature.push_back(n.feature);
            threshold.push_back(n.threshold);
            left.push_back(n.left);
            right.push_back(n.right);
            value.push_back(n.value);
        }
        trees.push_back(std::move(t));
    }
    json layers = json::array();
    for (const auto& layer : p.mlp.layers)
        layers.push_back(json{{"w", matrix_to_json(layer.w)}, {"b", layer.b}});

    return json{
        {"anchor", p.anchor},
        {"target", p.target},
        {"vocabulary",
         {{"names", p.vocabulary.names},
          {"version", p.vocabulary.version},
          {"provenance", p.vocabulary.provenance}}},
        {"linear", {{"weights", p.linear.weights}, {"intercept", p.linear.intercept}}},
        {"forest",
         {{"config",
           {{"n_trees", p.forest.config.n_trees},
            {"max_depth", p.forest.config.max_depth},
            {"min_samples_leaf", p.forest.config.min_samples_leaf},
            {"bootstrap", p.forest.config.bootstrap},
            {"features_per_split", p.forest.config.features_per_split}}},
          {"seed", p.forest.seed},
          {"n_features", p.forest.n_features},
          {"trees", std::move(trees)}}},
        {"mlp",
         {{"layers", std::move(layers)},
          {"feature_mean", p.mlp.feature_mean},
          {"feature_std", p.mlp.feature_std},
          {"target_scale", p.mlp.target_scale}}},
        {"meta",
         {{"n_rows", p.meta.n_rows},
          {"seed", p.meta.seed},
          {"timestamp_unix_s", p.meta.timestamp_unix_s}}}};
}

EnsemblePredictor predictor_from_json(const json& j) {
    EnsemblePredictor p;
    p.anchor = j.at("anchor").get<std::string>();
    p.target = j.at("target").get<std::string>();
    const auto& voc = j.at("vocabulary");
    p.vocabulary.names = voc.at("names").get<std::vector<std::string>>();
    p.vocabulary.version = voc.at("version").get<int>();
    p.vocabulary.provenance = voc.at("provenance").get<std::string>();
    p.vocabulary.validate();

    const auto& lin = j.at("linear");
    p.linear.weights = lin.at("weights").get<std::vector<double>>();
    p.linear.intercept = lin.at("intercept").get<double>();

    const auto& fo = j.at("forest");
    const auto& fc = fo.at("config");
    p.forest.config.n_trees = fc.at("n_trees").get<int>();
    p.forest.config.max_depth = fc.at("max_depth").get<int>();
    p.forest.config.min_samples_leaf = fc.at("min_samples_leaf").get<int>();
    p.forest.config.bootstrap = fc.at("bootstrap").get<bool>();
    p.forest.config.features_per_split = fc.at("features_per_split").get<int>();
    p.forest.seed = fo.at("seed").get<std::uint64_t>();
    p.forest.n_features = fo.at("n_features").get<std::size_t>();
    for (const auto& t : fo.at("trees")) {
        RegressionTree tree;
        auto feature = t.at("feature").get<std::vector<int>>();
        auto threshold = t.at("threshold").get<std::vector<double>>();
        auto left = t.at("left").get<std::vector<int>>();
        auto right = t.at("right").get<std::vector<int>>();
        auto value = t.at("value").get<std::vector<double>>();
        if (feature.size() != threshold.size() || feature.size() != left.size() ||
            feature.size() != right.size() || feature.size() != value.size())
            throw BundleError(BundleError::Kind::Structure, "ragged tree arrays");
        tree.nodes.resize(feature.size());
        for (std::size_t i = 0; i < feature.size(); ++i)
            tree.nodes[i] = {feature[i], threshold[i], left[i], right[i], value[i]};
        p.forest.trees.push_back(std::move(tree));
    }

    const auto& mlp = j.at("mlp");
    for (const auto& layer : mlp.at("layers")) {
        p.mlp.layers.push_back(
            {matrix_from_json(layer.at("w")), layer.at("b").get<std::vector<double>>()});
    }
    p.mlp.feature_mean = mlp.at("feature_mean").get<std::vector<double>>();
    p.mlp.feature_std = mlp.at("feature_std").get<std::vector<double>>();
    p.mlp.target_scale = mlp.at("target_scale").get<double>();

    const auto& meta = j.at("meta");
    p.meta.n_rows = meta.at("n_rows").get<std::size_t>();
    p.meta.seed = meta.at("seed").get<std::uint64_t>();
    p.meta.timestamp_unix_s = meta.at("timestamp_unix_s").get<std::int64_t>();
    return p;
}

std::string manifest_body(const PredictorRegistry& r) {
    json pairs = json::array();
    for (const auto& [key, p] : r.predictors()) pairs.push_back(predictor_to_json(p));
    return json{{"pairs", std::move(pairs)}}.dump();
}

}  // namespace

std::string save_bundle(const PredictorRegistry& r, const std::string& path) {
    if (r.empty()) throw ValidationError("refusing to save an empty registry");
    const std::string body = manifest_body(r);
    const std::string digest = sha256_hex(body);
    json header{{"format", "profet-bundle"},
                {"sha256", digest},
                {"version", kBundleFormatVersion}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << header.dump() << '\n' << body << '\n';
    if (!out) throw IoError("failed to write '" + path + "'");
    return digest;
}

LoadedBundle load_bundle(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open bundle '" + path + "'");
    std::string header_line;
    if (!std::getline(in, header_line))
        throw BundleError(BundleError::Kind::Structure, "bundle is empty");
    json header = json::parse(header_line, nullptr, false);
    if (header.is_discarded() || !header.is_object())
        throw BundleError(BundleError::Kind::Structure, "bundle header is not a JSON object");
    if (header.value("format", "") != "profet-bundle")
        throw BundleError(BundleError::Kind::Structure, "not a profet bundle");
    const int version = header.value("version", -1);
    if (version != kBundleFormatVersion)
        throw BundleError(BundleError::Kind::Version,
                          "unsupported bundle version " + std::to_string(version));
    const std::string expected = header.value("sha256", "");

    std::string body;
    std::getline(in, body);
    const std::string digest = sha256_hex(body);
    if (digest != expected)
        throw BundleError(BundleError::Kind::Checksum,
                          "bundle checksum mismatch: header says " + expected +
                              ", body hashes to " + digest);

    json manifest = json::parse(body, nullptr, false);
    if (manifest.is_discarded())
        throw BundleError(BundleError::Kind::Structure, "bundle manifest is not valid JSON");
    LoadedBundle loaded;
    loaded.checksum = digest;
    try {
        for (const auto& pj : manifest.at("pairs"))
            loaded.registry.insert(predictor_from_json(pj));
    } catch (const json::exception& e) {
        throw BundleError(BundleError::Kind::Structure,
                          std::string("bundle manifest: ") + e.what());
    }
    return loaded;
}

}  // namespace profet
