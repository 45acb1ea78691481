#include <fstream>

#include <json.hpp>

#include "regimehmm/pipeline.hpp"

namespace regimehmm::pipeline {

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j) {
    std::vector<std::vector<double>> rows;
    for (const auto& row : j) {
        rows.push_back(row.get<std::vector<double>>());
    }
    return Matrix::from_rows(rows);
}

json chain_to_json(const hmm::ChainParams& chain) {
    return {{"n_states", chain.n_states},
            {"pi", chain.pi},
            {"trans", matrix_to_json(chain.trans)}};
}

hmm::ChainParams chain_from_json(const json& j) {
    hmm::ChainParams chain;
    chain.n_states = j.at("n_states").get<int>();
    chain.pi = j.at("pi").get<std::vector<double>>();
    chain.trans = matrix_from_json(j.at("trans"));
    chain.validate();
    return chain;
}

json mixture_to_json(const gmm::MixtureEmission& e) {
    json means = json::array(), variances = json::array();
    for (int s = 0; s < e.n_states; ++s) {
        means.push_back(matrix_to_json(e.means[s]));
        variances.push_back(matrix_to_json(e.variances[s]));
    }
    return {{"type", "gmm"},
            {"n_states", e.n_states},
            {"n_components", e.n_components},
            {"dim", e.dim},
            {"var_floor", e.var_floor},
            {"weights", matrix_to_json(e.weights)},
            {"means", std::move(means)},
            {"variances", std::move(variances)}};
}

gmm::MixtureEmission mixture_from_json(const json& j) {
    gmm::MixtureEmission e;
    e.n_states = j.at("n_states").get<int>();
    e.n_components = j.at("n_components").get<int>();
    e.dim = j.at("dim").get<int>();
    e.var_floor = j.at("var_floor").get<double>();
    e.weights = matrix_from_json(j.at("weights"));
    for (const auto& m : j.at("means")) {
        e.means.push_back(matrix_from_json(m));
    }
    for (const auto& v : j.at("variances")) {
        e.variances.push_back(matrix_from_json(v));
    }
    e.validate();
    return e;
}

json boost_params_to_json(const gbt::BoostParams& p) {
    return {{"n_rounds", p.n_rounds},
            {"max_depth", p.max_depth},
            {"learning_rate", p.learning_rate},
            {"reg_lambda", p.reg_lambda},
            {"feature_subsample", p.feature_subsample},
            {"min_split_gain", p.min_split_gain}};
}

gbt::BoostParams boost_params_from_json(const json& j) {
    gbt::BoostParams p;
    p.n_rounds = j.at("n_rounds").get<int>();
    p.max_depth = j.at("max_depth").get<int>();
    p.learning_rate = j.at("learning_rate").get<double>();
    p.reg_lambda = j.at("reg_lambda").get<double>();
    p.feature_subsample = j.at("feature_subsample").get<double>();
    p.min_split_gain = j.at("min_split_gain").get<double>();
    return p;
}

// Tree nodes serialize as [feature, threshold, default_left, left, right,
// leaf_value]; feature -1 marks a leaf.
json ensemble_to_json(const gbt::BoostedEnsemble& e) {
    json rounds = json::array();
    for (const auto& round : e.rounds) {
        json round_json = json::array();
        for (const auto& tree : round) {
            json nodes = json::array();
            for (const auto& n : tree.nodes) {
                nodes.push_back(json::array({n.feature, n.threshold,
                                             n.default_left ? 1 : 0, n.left, n.right,
                                             n.leaf_value}));
            }
            round_json.push_back(std::move(nodes));
        }
        rounds.push_back(std::move(round_json));
    }
    return {{"type", "boosted"},
            {"n_classes", e.n_classes},
            {"n_features", e.n_features},
            {"params", boost_params_to_json(e.params)},
            {"rounds", std::move(rounds)}};
}

gbt::BoostedEnsemble ensemble_from_json(const json& j) {
    gbt::BoostedEnsemble e;
    e.n_classes = j.at("n_classes").get<int>();
    e.n_features = j.at("n_features").get<int>();
    e.params = boost_params_from_json(j.at("params"));
    for (const auto& round_json : j.at("rounds")) {
        std::vector<gbt::RegressionTree> round;
        for (const auto& nodes : round_json) {
            gbt::RegressionTree tree;
            for (const auto& n : nodes) {
                gbt::TreeNode node;
                node.feature = n.at(0).get<int>();
                node.threshold = n.at(1).get<double>();
                node.default_left = n.at(2).get<int>() != 0;
                node.left = n.at(3).get<int>();
                node.right = n.at(4).get<int>();
                node.leaf_value = n.at(5).get<double>();
                tree.nodes.push_back(node);
            }
            round.push_back(std::move(tree));
        }
        e.rounds.push_back(std::move(round));
    }
    return e;
}

json model_to_json(const train::RegimeModel& model) {
    json j;
    j["chain"] = chain_to_json(model.chain);
    if (model.emission_kind == train::EmissionKind::mixture) {
        j["emission"] = mixture_to_json(model.mixture);
    } else {
        json emission = ensemble_to_json(model.ensemble);
        emission["state_priors"] = model.state_priors;
        j["emission"] = std::move(emission);
    }
    j["trace"] = {{"log_likelihood", model.trace.log_likelihood},
                  {"converged", model.trace.converged},
                  {"iterations", model.trace.iterations}};
    return j;
}

train::RegimeModel model_from_json(const json& j) {
    train::RegimeModel model;
    model.chain = chain_from_json(j.at("chain"));
    const auto& emission = j.at("emission");
    const auto type = emission.at("type").get<std::string>();
    if (type == "gmm") {
        model.emission_kind = train::EmissionKind::mixture;
        model.mixture = mixture_from_json(emission);
    } else if (type == "boosted") {
        model.emission_kind = train::EmissionKind::boosted;
        model.ensemble = ensemble_from_json(emission);
        model.state_priors = emission.at("state_priors").get<std::vector<double>>();
    } else {
        fail(ErrorCode::schema_mismatch, "unknown emission type '" + type + "'");
    }
    const auto& trace = j.at("trace");
    model.trace.log_likelihood = trace.at("log_likelihood").get<std::vector<double>>();
    model.trace.converged = trace.at("converged").get<bool>();
    model.trace.iterations = trace.at("iterations").get<int>();
    return model;
}

json lstm_to_json(const lstm::LstmParams& p) {
    return {{"input_dim", p.input_dim},
            {"hidden_dim", p.hidden_dim},
            {"w_forget", matrix_to_json(p.w_forget)},
            {"w_input", matrix_to_json(p.w_input)},
            {"w_cand", matrix_to_json(p.w_cand)},
            {"w_output", matrix_to_json(p.w_output)},
            {"b_forget", p.b_forget},
            {"b_input", p.b_input},
            {"b_cand", p.b_cand},
            {"b_output", p.b_output},
            {"w_readout", matrix_to_json(p.w_readout)},
            {"b_readout", p.b_readout}};
}

lstm::LstmParams lstm_from_json(const json& j) {
    lstm::LstmParams p;
    p.input_dim = j.at("input_dim").get<int>();
    p.hidden_dim = j.at("hidden_dim").get<int>();
    p.w_forget = matrix_from_json(j.at("w_forget"));
    p.w_input = matrix_from_json(j.at("w_input"));
    p.w_cand = matrix_from_json(j.at("w_cand"));
    p.w_output = matrix_from_json(j.at("w_output"));
    p.b_forget = j.at("b_forget").get<std::vector<double>>();
    p.b_input = j.at("b_input").get<std::vector<double>>();
    p.b_cand = j.at("b_cand").get<std::vector<double>>();
    p.b_output = j.at("b_output").get<std::vector<double>>();
    p.w_readout = matrix_from_json(j.at("w_readout"));
    p.b_readout = j.at("b_readout").get<std::vector<double>>();
    p.validate();
    return p;
}

json config_to_json(const PipelineConfig& c) {
    json groups = json::array();
    for (const auto& g : c.groups) {
        groups.push_back(
            {{"name", g.name}, {"columns", g.columns}, {"prefix", g.prefix}});
    }
    return {
        {"seed", c.seed},
        {"groups", std::move(groups)},
        {"barrier",
         {{"pt_mult", c.barrier.pt_mult},
          {"sl_mult", c.barrier.sl_mult},
          {"horizon", c.barrier.horizon},
          {"vol_span", c.barrier.vol_span},
          {"use_high_low", c.barrier.use_high_low}}},
        {"fit",
         {{"n_states", c.fit.n_states},
          {"max_iters", c.fit.max_iters},
          {"tol", c.fit.tol},
          {"emission",
           c.fit.emission == train::EmissionKind::mixture ? "gmm" : "boosted"},
          {"mixture",
           {{"n_components", c.fit.mixture.n_components},
            {"var_floor", c.fit.mixture.var_floor}}},
          {"boosted", boost_params_to_json(c.fit.boosted)}}},
        {"lstm",
         {{"epochs", c.lstm.epochs},
          {"learning_rate", c.lstm.learning_rate},
          {"hidden_dim", c.lstm.hidden_dim},
          {"clip_norm", c.lstm.clip_norm}}},
    };
}

PipelineConfig config_from_json(const json& j) {
    PipelineConfig c = PipelineConfig::defaults();
    if (j.contains("seed")) {
        c.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("groups")) {
        c.groups.clear();
        for (const auto& g : j.at("groups")) {
            FactorGroup group;
            group.name = g.at("name").get<std::string>();
            if (g.contains("columns")) {
                group.columns = g.at("columns").get<std::vector<std::string>>();
            }
            if (g.contains("prefix")) {
                group.prefix = g.at("prefix").get<std::string>();
            }
            c.groups.push_back(std::move(group));
        }
    }
    if (j.contains("barrier")) {
        const auto& b = j.at("barrier");
        c.barrier.pt_mult = b.value("pt_mult", c.barrier.pt_mult);
        c.barrier.sl_mult = b.value("sl_mult", c.barrier.sl_mult);
        c.barrier.horizon = b.value("horizon", c.barrier.horizon);
        c.barrier.vol_span = b.value("vol_span", c.barrier.vol_span);
        c.barrier.use_high_low = b.value("use_high_low", c.barrier.use_high_low);
    }
    if (j.contains("fit")) {
        const auto& f = j.at("fit");
        c.fit.n_states = f.value("n_states", c.fit.n_states);
        c.fit.max_iters = f.value("max_iters", c.fit.max_iters);
        c.fit.tol = f.value("tol", c.fit.tol);
        if (f.contains("emission")) {
            const auto kind = f.at("emission").get<std::string>();
            if (kind == "gmm") {
                c.fit.emission = train::EmissionKind::mixture;
            } else if (kind == "boosted") {
                c.fit.emission = train::EmissionKind::boosted;
            } else {
                fail(ErrorCode::parse_failure, "emission must be 'gmm' or 'boosted'");
            }
        }
        if (f.contains("mixture")) {
            const auto& m = f.at("mixture");
            c.fit.mixture.n_components = m.value("n_components", c.fit.mixture.n_components);
            c.fit.mixture.var_floor = m.value("var_floor", c.fit.mixture.var_floor);
        }
        if (f.contains("boosted")) {
            const auto& b = f.at("boosted");
            c.fit.boosted.n_rounds = b.value("n_rounds", c.fit.boosted.n_rounds);
            c.fit.boosted.max_depth = b.value("max_depth", c.fit.boosted.max_depth);
            c.fit.boosted.learning_rate =
                b.value("learning_rate", c.fit.boosted.learning_rate);
            c.fit.boosted.reg_lambda = b.value("reg_lambda", c.fit.boosted.reg_lambda);
            c.fit.boosted.feature_subsample =
                b.value("feature_subsample", c.fit.boosted.feature_subsample);
            c.fit.boosted.min_split_gain =
                b.value("min_split_gain", c.fit.boosted.min_split_gain);
        }
    }
    if (j.contains("lstm")) {
        const auto& l = j.at("lstm");
        c.lstm.epochs = l.value("epochs", c.lstm.epochs);
        c.lstm.learning_rate = l.value("learning_rate", c.lstm.learning_rate);
        c.lstm.hidden_dim = l.value("hidden_dim", c.lstm.hidden_dim);
        c.lstm.clip_norm = l.value("clip_norm", c.lstm.clip_norm);
    }
    return c;
}

json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::io_failure, "cannot open '" + path.string() + "'");
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorCode::parse_failure, "'" + path.string() + "': " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) {
        fail(ErrorCode::io_failure, "cannot write '" + path.string() + "'");
    }
    out << j.dump(1) << '\n';
    if (!out) {
        fail(ErrorCode::io_failure, "write failed for '" + path.string() + "'");
    }
}

}  // namespace

void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle) {
    json groups = json::array();
    for (const auto& g : bundle.groups) {
        groups.push_back({{"name", g.name},
                          {"columns", g.columns},
                          {"model", model_to_json(g.model)}});
    }
    json j = {
        {"schema_version", bundle.schema_version},
        {"kind", "regimehmm_model_bundle"},
        {"config", config_to_json(bundle.config)},
        {"groups", std::move(groups)},
        {"lstm", bundle.has_lstm ? lstm_to_json(bundle.lstm_params) : json(nullptr)},
        {"lstm_train_accuracy", bundle.lstm_train_accuracy},
    };
    write_json_file(path, j);
}

ModelBundle load_bundle(const std::filesystem::path& path) {
    const json j = load_json_file(path);
    try {
        ModelBundle bundle;
        bundle.schema_version = j.at("schema_version").get<int>();
        if (bundle.schema_version != kSchemaVersion) {
            fail(ErrorCode::schema_mismatch,
                 "unsupported schema_version " + std::to_string(bundle.schema_version) +
                     " in '" + path.string() + "'");
        }
        bundle.config = config_from_json(j.at("config"));
        for (const auto& g : j.at("groups")) {
            GroupModel group;
            group.name = g.at("name").get<std::string>();
            group.columns = g.at("columns").get<std::vector<std::string>>();
            group.model = model_from_json(g.at("model"));
            bundle.groups.push_back(std::move(group));
        }
        if (bundle.groups.empty()) {
            fail(ErrorCode::schema_mismatch,
                 "'" + path.string() + "' contains no fitted groups");
        }
        if (!j.at("lstm").is_null()) {
            bundle.has_lstm = true;
            bundle.lstm_params = lstm_from_json(j.at("lstm"));
        }
        bundle.lstm_train_accuracy = j.value("lstm_train_accuracy", 0.0);
        return bundle;
    } catch (const json::exception& e) {
        fail(ErrorCode::schema_mismatch, "'" + path.string() + "': " + e.what());
    }
}

PipelineConfig load_config(const std::filesystem::path& path) {
    return config_from_json(load_json_file(path));
}

void save_config(const std::filesystem::path& path, const PipelineConfig& config) {
    write_json_file(path, config_to_json(config));
}

}  // namespace regimehmm::pipeline
