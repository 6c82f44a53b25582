#include "featrisk_tools/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace featrisk::tools {

namespace {

using json = nlohmann::json;

json scalar_to_json(const YAML::Node& node) {
    const std::string& s = node.Scalar();
    if (node.Tag() == "!") {
        return s;  // quoted
    }
    if (s == "~" || s == "null" || s.empty()) return nullptr;
    if (s == "true" || s == "True") return true;
    if (s == "false" || s == "False") return false;
    const char* begin = s.c_str();
    char* end = nullptr;
    errno = 0;
    const long long i = std::strtoll(begin, &end, 10);
    if (errno == 0 && end != begin && *end == '\0') return i;
    errno = 0;
    const double d = std::strtod(begin, &end);
    if (errno == 0 && end != begin && *end == '\0') return d;
    if (s == ".inf" || s == "inf") return std::numeric_limits<double>::infinity();
    return s;
}

json yaml_to_json(const YAML::Node& node) {
    switch (node.Type()) {
        case YAML::NodeType::Null:
        case YAML::NodeType::Undefined:
            return nullptr;
        case YAML::NodeType::Scalar:
            return scalar_to_json(node);
        case YAML::NodeType::Sequence: {
            json arr = json::array();
            for (const auto& item : node) arr.push_back(yaml_to_json(item));
            return arr;
        }
        case YAML::NodeType::Map: {
            json obj = json::object();
            for (const auto& kv : node) {
                const std::string key = kv.first.as<std::string>();
                if (obj.contains(key)) throw ConfigError("duplicate key '" + key + "'");
                obj[key] = yaml_to_json(kv.second);
            }
            return obj;
        }
    }
    return nullptr;
}

// Walks one object, remembers which keys were read, rejects the rest.
class Reader {
public:
    Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) fail("expected a mapping");
    }

    bool has(const std::string& key) const { return obj_.contains(key) && !obj_.at(key).is_null(); }

    bool explicit_null(const std::string& key) {
        seen_.insert(key);
        return obj_.contains(key) && obj_.at(key).is_null();
    }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return obj_.at(key);
    }

    Reader child(const std::string& key) {
        seen_.insert(key);
        return Reader(obj_.at(key), at(key));
    }

    double number(const std::string& key, double def) {
        seen_.insert(key);
        if (!has(key)) return def;
        const json& v = obj_.at(key);
        if (!v.is_number()) fail_key(key, "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) fail_key(key, "must be finite");
        return d;
    }

    int integer(const std::string& key, int def) {
        seen_.insert(key);
        if (!has(key)) return def;
        const json& v = obj_.at(key);
        if (!v.is_number_integer()) fail_key(key, "expected an integer");
        const long long i = v.get<long long>();
        if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max()) {
            fail_key(key, "out of range");
        }
        return static_cast<int>(i);
    }

    bool boolean(const std::string& key, bool def) {
        seen_.insert(key);
        if (!has(key)) return def;
        if (!obj_.at(key).is_boolean()) fail_key(key, "expected true or false");
        return obj_.at(key).get<bool>();
    }

    std::string text(const std::string& key, const std::string& def, std::initializer_list<const char*> allowed) {
        seen_.insert(key);
        if (!has(key)) return def;
        if (!obj_.at(key).is_string()) fail_key(key, "expected a string");
        const std::string s = obj_.at(key).get<std::string>();
        if (allowed.size() > 0) {
            bool ok = false;
            std::string options;
            for (const char* a : allowed) {
                ok = ok || s == a;
                options += std::string(options.empty() ? "" : ", ") + a;
            }
            if (!ok) fail_key(key, "'" + s + "' is not one of {" + options + "}");
        }
        return s;
    }

    void finish() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (!seen_.count(it.key())) fail("unknown key '" + it.key() + "'");
        }
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigError((path_.empty() ? std::string("config") : path_) + ": " + msg);
    }
    [[noreturn]] void fail_key(const std::string& key, const std::string& msg) const { fail_at(at(key), msg); }

    std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    [[noreturn]] static void fail_at(const std::string& path, const std::string& msg) {
        throw ConfigError(path + ": " + msg);
    }

    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

void require(bool cond, const std::string& path, const std::string& msg) {
    if (!cond) throw ConfigError(path + ": " + msg);
}

std::vector<double> number_list(const json& v, const std::string& path) {
    require(v.is_array() && !v.empty(), path, "expected a non-empty list");
    std::vector<double> out;
    for (const json& x : v) {
        require(x.is_number(), path, "list entries must be numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

// values: [..] | log: [lo, hi] + points | linear: [lo, hi] + points
std::vector<double> read_values(Reader& r, bool integral) {
    std::vector<double> out;
    int forms = static_cast<int>(r.has("values")) + static_cast<int>(r.has("log")) +
                static_cast<int>(r.has("linear"));
    if (forms != 1) r.fail("give exactly one of values, log, linear");
    if (r.has("values")) {
        out = number_list(r.raw("values"), r.at("values"));
        r.integer("points", 0);
    } else {
        const std::string key = r.has("log") ? "log" : "linear";
        const std::vector<double> ends = number_list(r.raw(key), r.at(key));
        require(ends.size() == 2, r.at(key), "expected [from, to]");
        const int points = r.integer("points", 10);
        require(points >= 1, r.at("points"), "must be >= 1");
        const bool log = key == "log";
        if (log) require(ends[0] > 0.0 && ends[1] > 0.0, r.at(key), "log grid needs positive ends");
        for (int i = 0; i < points; ++i) {
            const double f = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
            out.push_back(log ? std::exp(std::log(ends[0]) + f * (std::log(ends[1]) - std::log(ends[0])))
                              : ends[0] + f * (ends[1] - ends[0]));
        }
    }
    if (integral) {
        std::vector<double> rounded;
        for (double v : out) {
            const double x = std::round(v);
            if (rounded.empty() || rounded.back() != x) rounded.push_back(x);
        }
        out = rounded;
    }
    return out;
}

CovarianceConfig read_covariance(Reader r) {
    CovarianceConfig c;
    c.type = r.text("type", c.type, {"ar1", "identity", "wishart_jitter"});
    c.rho = r.number("rho", c.rho);
    c.m = r.integer("m", c.m);
    c.jitter = r.number("jitter", c.jitter);
    require(std::abs(c.rho) < 1.0, r.at("rho"), "need |rho| < 1");
    require(c.m >= 0, r.at("m"), "must be >= 0");
    require(c.jitter >= 0.0, r.at("jitter"), "must be >= 0");
    r.finish();
    return c;
}

GroundTruthConfig read_truth(Reader r) {
    GroundTruthConfig g;
    g.type = r.text("type", g.type, {"ar1", "identity"});
    g.rho = r.number("rho", g.rho);
    g.scale = r.number("scale", g.scale);
    require(std::abs(g.rho) < 1.0, r.at("rho"), "need |rho| < 1");
    require(g.scale > 0.0, r.at("scale"), "must be positive");
    r.finish();
    return g;
}

TaskConfig read_task(Reader r) {
    TaskConfig t;
    t.sigma2 = r.number("sigma2", t.sigma2);
    t.scale = r.number("scale", t.scale);
    // absent keeps the default, null switches calibration off and uses scale
    if (r.explicit_null("snr")) {
        t.snr.reset();
    } else {
        t.snr = r.number("snr", *t.snr);
        require(*t.snr >= 0.0, r.at("snr"), "must be >= 0");
    }
    require(t.sigma2 >= 0.0, r.at("sigma2"), "must be >= 0");
    require(t.scale >= 0.0, r.at("scale"), "must be >= 0");
    r.finish();
    return t;
}

InstanceConfig read_instance(Reader r) {
    InstanceConfig ic;
    ic.p = r.integer("p", 0);
    ic.q = r.integer("q", 0);
    require(ic.p >= 1, r.at("p"), "required, >= 1");
    require(ic.q >= 1, r.at("q"), "required, >= 1");
    if (r.has("covariance")) ic.covariance = read_covariance(r.child("covariance"));
    else r.number("covariance", 0);
    if (r.has("ground_truth")) ic.ground_truth = read_truth(r.child("ground_truth"));
    else r.number("ground_truth", 0);
    if (r.has("task")) ic.task = read_task(r.child("task"));
    else r.number("task", 0);
    r.finish();
    return ic;
}

PredictorConfig read_predictor(Reader r) {
    PredictorConfig pc;
    const std::string type = r.text("type", "", {"ridgeless", "fixed", "ofp", "eep"});
    if (type.empty()) r.fail("type is required");
    pc.type = type == "ridgeless" ? PredictorType::ridgeless
              : type == "fixed"   ? PredictorType::fixed
              : type == "ofp"     ? PredictorType::ofp
                                  : PredictorType::eep;
    const std::string def_name = type == "ridgeless" ? "RP" : type == "fixed" ? "O" : type == "ofp" ? "OFP" : "EEP";
    pc.name = r.text("name", def_name, {});
    require(!pc.name.empty(), r.at("name"), "must not be empty");
    pc.k = r.integer("k", 0);
    require(pc.k >= 0, r.at("k"), "must be >= 0");
    pc.representation = r.text("representation", pc.representation, {"truth", "random", "zero"});
    if (r.has("lambda")) {
        Reader l = r.child("lambda");
        pc.lambda.lambda_alpha = l.number("alpha", pc.lambda.lambda_alpha);
        pc.lambda.lambda_beta = l.number("beta", pc.lambda.lambda_beta);
        pc.lambda.lambda = l.number("lambda", pc.lambda.lambda);
        l.finish();
        try {
            pc.lambda.validate();
        } catch (const std::exception& e) {
            r.fail(std::string("lambda: ") + e.what());
        }
    } else {
        r.number("lambda", 0);
    }
    if (pc.type != PredictorType::fixed && (r.has("lambda") || r.has("representation"))) {
        r.fail("lambda and representation apply to type 'fixed' only");
    }
    r.finish();
    return pc;
}

OptimizerSettings read_optimizer(Reader r) {
    OptimizerSettings o;
    o.step = r.number("step", o.step);
    o.max_episodes = r.integer("max_episodes", o.max_episodes);
    o.episode_length = r.integer("episode_length", o.episode_length);
    o.improve_tol = r.number("improve_tol", o.improve_tol);
    o.patience = r.integer("patience", o.patience);
    o.max_restarts = r.integer("max_restarts", o.max_restarts);
    o.mode = r.text("mode", "avg", {"avg", "worst"}) == "avg" ? ObjectiveMode::avg : ObjectiveMode::worst;
    require(o.step > 0.0, r.at("step"), "must be positive");
    require(o.max_episodes >= 1 && o.episode_length >= 1 && o.patience >= 1, r.at("max_episodes"),
            "episode counts must be >= 1");
    require(o.improve_tol >= 0.0 && o.max_restarts >= 0, r.at("improve_tol"), "must be >= 0");
    r.finish();
    return o;
}

UpstreamSettings read_upstream(Reader r, int p) {
    UpstreamSettings u;
    u.sigma2_pre = r.number("sigma2_pre", u.sigma2_pre);
    u.seeds = r.integer("seeds", u.seeds);
    u.shared_design = r.boolean("shared_design", u.shared_design);
    require(u.sigma2_pre >= 0.0, r.at("sigma2_pre"), "must be >= 0");
    require(u.seeds >= 1, r.at("seeds"), "must be >= 1");
    if (!r.has("n_pre")) r.fail("n_pre grid is required");
    Reader g = r.child("n_pre");
    for (double v : read_values(g, true)) {
        require(v > p, r.at("n_pre"), "every n_pre must exceed p");
        u.n_pre.push_back(static_cast<int>(v));
    }
    g.finish();
    r.finish();
    return u;
}

const char* default_param(ExperimentKind k) {
    return k == ExperimentKind::concentration ? "q" : "n";
}

}  // namespace

const char* to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::risk_curve: return "risk-curve";
        case ExperimentKind::ablation: return "ablation";
        case ExperimentKind::spectrum: return "spectrum";
        case ExperimentKind::full_opt: return "full-opt";
        case ExperimentKind::heatmap: return "heatmap";
        case ExperimentKind::upstream: return "upstream";
        case ExperimentKind::concentration: return "concentration";
    }
    return "unknown";
}

ExperimentKind parse_kind(const std::string& s) {
    for (ExperimentKind k : {ExperimentKind::risk_curve, ExperimentKind::ablation, ExperimentKind::spectrum,
                             ExperimentKind::full_opt, ExperimentKind::heatmap, ExperimentKind::upstream,
                             ExperimentKind::concentration}) {
        if (s == to_string(k)) return k;
    }
    throw ConfigError("kind: unknown experiment kind '" + s + "'");
}

const char* to_string(PredictorType t) {
    switch (t) {
        case PredictorType::ridgeless: return "ridgeless";
        case PredictorType::fixed: return "fixed";
        case PredictorType::ofp: return "ofp";
        case PredictorType::eep: return "eep";
    }
    return "unknown";
}

nlohmann::json load_document(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    if (path.extension() == ".json") {
        try {
            return json::parse(buf.str());
        } catch (const json::parse_error& e) {
            throw ConfigError(path.string() + ": " + e.what());
        }
    }
    try {
        return yaml_to_json(YAML::Load(buf.str()));
    } catch (const YAML::Exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

ExperimentConfig parse_config(const nlohmann::json& doc) {
    Reader r(doc, "");
    ExperimentConfig cfg;
    if (!r.has("kind")) r.fail("kind is required");
    cfg.kind = parse_kind(r.text("kind", "", {}));
    if (r.has("seed")) {
        const json& s = r.raw("seed");
        require(s.is_number_unsigned() || (s.is_number_integer() && s.get<long long>() >= 0), "seed",
                "expected a nonnegative integer");
        cfg.seed = s.get<std::uint64_t>();
    } else {
        r.number("seed", 0);
    }
    cfg.n = r.integer("n", 0);
    cfg.replicates = r.integer("replicates", cfg.replicates);
    cfg.task_draws = r.integer("task_draws", cfg.kind == ExperimentKind::concentration ? 200 : 0);
    cfg.spectrum_c = r.number("spectrum_c", cfg.spectrum_c);
    require(cfg.replicates == 0 || cfg.replicates >= 2, "replicates", "must be 0 or >= 2");
    require(cfg.task_draws >= 0, "task_draws", "must be >= 0");
    require(cfg.spectrum_c > 0.0, "spectrum_c", "must be positive");
    if (!r.has("instance")) r.fail("instance is required");
    cfg.instance = read_instance(r.child("instance"));

    const bool needs_grid = cfg.kind != ExperimentKind::heatmap && cfg.kind != ExperimentKind::upstream;
    if (r.has("grid")) {
        Reader g = r.child("grid");
        cfg.grid.param = g.text("param", default_param(cfg.kind), {"n", "m", "k", "q", "snr", "rho"});
        cfg.grid.values = read_values(g, cfg.grid.param != "snr" && cfg.grid.param != "rho");
        g.finish();
    } else if (needs_grid) {
        r.fail("grid is required for kind " + std::string(to_string(cfg.kind)));
    } else {
        r.number("grid", 0);
    }
    const std::string param = cfg.grid.param;
    const auto allowed = [&](std::initializer_list<const char*> ok) {
        for (const char* a : ok) {
            if (param == a) return;
        }
        throw ConfigError("grid.param: '" + param + "' is not valid for kind " + to_string(cfg.kind));
    };
    switch (cfg.kind) {
        case ExperimentKind::risk_curve:
        case ExperimentKind::full_opt:
            allowed({"n"});
            break;
        case ExperimentKind::ablation:
            allowed({"n", "m", "k", "q", "snr", "rho"});
            break;
        case ExperimentKind::spectrum:
            allowed({"n", "q", "snr"});
            break;
        case ExperimentKind::concentration:
            allowed({"q"});
            break;
        default:
            break;
    }
    for (double v : cfg.grid.values) {
        if (param == "snr" || param == "rho") {
            require(param == "snr" ? v >= 0.0 : std::abs(v) < 1.0, "grid.values", "value out of range");
        } else {
            require(v >= 1.0, "grid.values", "grid values must be >= 1");
        }
    }

    if (r.has("predictors")) {
        const json& list = r.raw("predictors");
        require(list.is_array() && !list.empty(), "predictors", "expected a non-empty list");
        std::set<std::string> names;
        for (std::size_t i = 0; i < list.size(); ++i) {
            PredictorConfig pc = read_predictor(Reader(list[i], "predictors[" + std::to_string(i) + "]"));
            require(names.insert(pc.name).second, "predictors", "duplicate predictor name '" + pc.name + "'");
            cfg.predictors.push_back(pc);
        }
    } else {
        r.number("predictors", 0);
        cfg.predictors.push_back({"RP", PredictorType::ridgeless, {1.0, 0.0, 1.0}, "truth", 0});
    }
    if (r.has("optimizer")) cfg.optimizer = read_optimizer(r.child("optimizer"));
    else r.number("optimizer", 0);

    if (cfg.kind == ExperimentKind::upstream) {
        if (!r.has("upstream")) r.fail("upstream section is required for kind upstream");
        cfg.upstream = read_upstream(r.child("upstream"), cfg.instance.p);
    } else if (r.has("upstream")) {
        r.fail("upstream section applies to kind upstream only");
    } else {
        r.number("upstream", 0);
    }
    if (cfg.kind == ExperimentKind::heatmap || cfg.kind == ExperimentKind::upstream || (needs_grid && param != "n")) {
        require(cfg.n >= 1, "n", "required (downstream sample size) for kind " + std::string(to_string(cfg.kind)));
    }
    if (cfg.kind == ExperimentKind::heatmap) {
        require(cfg.predictors.front().type == PredictorType::ofp || cfg.predictors.front().type == PredictorType::eep ||
                    cfg.predictors.front().type == PredictorType::fixed,
                "predictors", "heatmap needs a predictor with a representation (fixed, ofp or eep)");
    }
    r.finish();
    return cfg;
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
    json j;
    j["kind"] = to_string(cfg.kind);
    j["seed"] = cfg.seed;
    j["n"] = cfg.n;
    j["replicates"] = cfg.replicates;
    j["task_draws"] = cfg.task_draws;
    j["spectrum_c"] = cfg.spectrum_c;
    const InstanceConfig& ic = cfg.instance;
    j["instance"] = {{"p", ic.p},
                     {"q", ic.q},
                     {"covariance",
                      {{"type", ic.covariance.type},
                       {"rho", ic.covariance.rho},
                       {"m", ic.covariance.m},
                       {"jitter", ic.covariance.jitter}}},
                     {"ground_truth",
                      {{"type", ic.ground_truth.type}, {"rho", ic.ground_truth.rho}, {"scale", ic.ground_truth.scale}}},
                     {"task",
                      {{"sigma2", ic.task.sigma2},
                       {"scale", ic.task.scale},
                       {"snr", ic.task.snr ? json(*ic.task.snr) : json(nullptr)}}}};
    if (!cfg.grid.values.empty()) j["grid"] = {{"param", cfg.grid.param}, {"values", cfg.grid.values}};
    j["predictors"] = json::array();
    for (const PredictorConfig& pc : cfg.predictors) {
        json pj = {{"name", pc.name}, {"type", to_string(pc.type)}, {"k", pc.k}};
        if (pc.type == PredictorType::fixed) {
            pj["representation"] = pc.representation;
            pj["lambda"] = {{"alpha", pc.lambda.lambda_alpha}, {"beta", pc.lambda.lambda_beta}, {"lambda", pc.lambda.lambda}};
        }
        j["predictors"].push_back(pj);
    }
    const OptimizerSettings& o = cfg.optimizer;
    j["optimizer"] = {{"step", o.step},
                      {"max_episodes", o.max_episodes},
                      {"episode_length", o.episode_length},
                      {"improve_tol", o.improve_tol},
                      {"patience", o.patience},
                      {"max_restarts", o.max_restarts},
                      {"mode", to_string(o.mode)}};
    if (cfg.kind == ExperimentKind::upstream) {
        j["upstream"] = {{"n_pre", {{"values", cfg.upstream.n_pre}}},
                         {"sigma2_pre", cfg.upstream.sigma2_pre},
                         {"seeds", cfg.upstream.seeds},
                         {"shared_design", cfg.upstream.shared_design}};
    }
    return j;
}

}  // namespace featrisk::tools
