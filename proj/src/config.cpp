#include "drift/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include <set>

#include <nlohmann/json.hpp>

#include "drift/errors.hpp"
#include "drift/hash.hpp"

extern char** environ;

namespace drift {

using json = nlohmann::ordered_json;

namespace {

enum class Kind { String, Unsigned, Integer, Real, Boolean, StringList, UnsignedList, RealList, Objectives };

struct Field {
    const char* name;
    Kind kind;
    std::function<void(RunConfig&, const json&)> set;
    std::function<json(const RunConfig&)> get;
    bool affects_results = true;
};

template <class T>
T as(const json& v, const char* key) {
    try {
        if constexpr (std::is_same_v<T, std::uint64_t> || std::is_same_v<T, std::size_t>) {
            if (!v.is_number_unsigned()) throw ConfigError(std::string(key) + ": expected a non-negative integer");
        } else if constexpr (std::is_same_v<T, long> || std::is_same_v<T, int>) {
            if (!v.is_number_integer()) throw ConfigError(std::string(key) + ": expected an integer");
        } else if constexpr (std::is_same_v<T, double>) {
            if (v.is_string() && (v == "inf" || v == "infinity")) return std::numeric_limits<double>::infinity();
            if (!v.is_number()) throw ConfigError(std::string(key) + ": expected a number");
        } else if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ConfigError(std::string(key) + ": expected true or false");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ConfigError(std::string(key) + ": expected a string");
        }
        return v.get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string(key) + ": " + e.what());
    }
}

template <class T>
std::vector<T> as_list(const json& v, const char* key) {
    if (!v.is_array()) throw ConfigError(std::string(key) + ": expected a list");
    std::vector<T> out;
    for (const auto& item : v) out.push_back(as<T>(item, key));
    return out;
}

json real(double v) { return std::isinf(v) ? json("inf") : json(v); }

std::vector<Field> make_fields() {
#define DRIFT_FIELD(key, kind, type, member)                                                   \
    Field {                                                                                    \
        key, kind, [](RunConfig& c, const json& v) { c.member = as<type>(v, key); },           \
            [](const RunConfig& c) -> json { return c.member; }                                \
    }
    std::vector<Field> f = {
        DRIFT_FIELD("app", Kind::String, std::string, app),
        DRIFT_FIELD("eval_app", Kind::String, std::string, eval_app),
        Field{"objectives", Kind::Objectives,
              [](RunConfig& c, const json& v) {
                  if (!v.is_array()) throw ConfigError("objectives: expected a list");
                  c.objectives.clear();
                  for (const auto& item : v) c.objectives.push_back(parse_objective(as<std::string>(item, "objectives")));
              },
              [](const RunConfig& c) {
                  json out = json::array();
                  for (const auto& o : c.objectives) out.push_back(o.event_name + ":" + std::to_string(o.target_count));
                  return out;
              }},
        DRIFT_FIELD("episodes", Kind::Unsigned, std::size_t, episodes),
        DRIFT_FIELD("max_len", Kind::Unsigned, std::size_t, max_len),
        DRIFT_FIELD("seed", Kind::Unsigned, std::uint64_t, seed),
        Field{"exclude_events", Kind::StringList,
              [](RunConfig& c, const json& v) { c.exclude_events = as_list<std::string>(v, "exclude_events"); },
              [](const RunConfig& c) -> json { return c.exclude_events; }},
        DRIFT_FIELD("data", Kind::String, std::string, data),
        DRIFT_FIELD("out", Kind::String, std::string, out),
        DRIFT_FIELD("process", Kind::String, std::string, process),
        DRIFT_FIELD("min_count", Kind::Integer, int, min_count),
        DRIFT_FIELD("include_automation_id", Kind::Boolean, bool, include_automation_id),
        DRIFT_FIELD("discount", Kind::Real, double, trainer.discount),
        DRIFT_FIELD("target_update_frequency", Kind::Integer, long, trainer.target_update_frequency),
        DRIFT_FIELD("batch_size", Kind::Unsigned, std::size_t, trainer.batch_size),
        DRIFT_FIELD("learning_rate", Kind::Real, double, trainer.learning_rate),
        DRIFT_FIELD("total_steps", Kind::Integer, long, trainer.total_steps),
        DRIFT_FIELD("eval_every", Kind::Integer, long, trainer.eval_every),
        DRIFT_FIELD("heads", Kind::Unsigned, std::size_t, trainer.shape.heads),
        DRIFT_FIELD("head_width", Kind::Unsigned, std::size_t, trainer.shape.head_width),
        DRIFT_FIELD("leaky_slope", Kind::Real, double, trainer.shape.leaky_slope),
        Field{"policy", Kind::String,
              [](RunConfig& c, const json& v) { c.policy.kind = parse_policy_kind(as<std::string>(v, "policy")); },
              [](const RunConfig& c) -> json { return std::string(to_string(c.policy.kind)); }},
        Field{"temperature", Kind::Real, [](RunConfig& c, const json& v) { c.policy.temperature = as<double>(v, "temperature"); },
              [](const RunConfig& c) { return real(c.policy.temperature); }},
        DRIFT_FIELD("checkpoint", Kind::String, std::string, checkpoint),
        DRIFT_FIELD("qtable", Kind::String, std::string, qtable),
        DRIFT_FIELD("vocab", Kind::String, std::string, vocab),
        DRIFT_FIELD("eval_steps", Kind::Unsigned, std::size_t, eval_steps),
        DRIFT_FIELD("folds", Kind::Unsigned, std::size_t, folds),
        Field{"seeds", Kind::UnsignedList, [](RunConfig& c, const json& v) { c.seeds = as_list<std::uint64_t>(v, "seeds"); },
              [](const RunConfig& c) -> json { return c.seeds; }},
        Field{"temperatures", Kind::RealList,
              [](RunConfig& c, const json& v) { c.temperatures = as_list<double>(v, "temperatures"); },
              [](const RunConfig& c) {
                  json out = json::array();
                  for (double t : c.temperatures) out.push_back(real(t));
                  return out;
              }},
        DRIFT_FIELD("random_runs", Kind::Unsigned, std::size_t, random_runs),
        DRIFT_FIELD("random_episodes", Kind::Unsigned, std::size_t, random_episodes),
        DRIFT_FIELD("qhash_epochs", Kind::Unsigned, std::size_t, qhash_epochs),
        DRIFT_FIELD("qhash_learning_rate", Kind::Real, double, qhash_learning_rate),
        DRIFT_FIELD("jobs", Kind::Unsigned, std::size_t, jobs),
    };
#undef DRIFT_FIELD
    for (auto& field : f) {
        const std::string name = field.name;
        if (name == "jobs" || name == "out") field.affects_results = false;
    }
    return f;
}

const std::vector<Field>& fields() {
    static const std::vector<Field> f = make_fields();
    return f;
}

const Field* find_field(std::string_view name) {
    for (const auto& f : fields()) {
        if (name == f.name) return &f;
    }
    return nullptr;
}

json parse_scalar(const std::string& key, Kind kind, const std::string& text) {
    try {
        switch (kind) {
            case Kind::String:
                return text;
            case Kind::Unsigned: {
                std::size_t used = 0;
                const auto v = std::stoull(text, &used);
                if (used != text.size() || text.front() == '-') throw std::invalid_argument(text);
                return v;
            }
            case Kind::Integer: {
                std::size_t used = 0;
                const auto v = std::stoll(text, &used);
                if (used != text.size()) throw std::invalid_argument(text);
                return v;
            }
            case Kind::Real: {
                if (text == "inf" || text == "infinity") return "inf";
                std::size_t used = 0;
                const double v = std::stod(text, &used);
                if (used != text.size()) throw std::invalid_argument(text);
                return v;
            }
            case Kind::Boolean:
                if (text == "true" || text == "1") return true;
                if (text == "false" || text == "0") return false;
                throw std::invalid_argument(text);
            default:
                break;
        }
    } catch (const std::exception&) {
        throw ConfigError(key + ": cannot parse '" + text + "'");
    }
    throw ConfigError(key + ": not a scalar field");
}

std::vector<std::string> split_commas(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

Objective parse_objective(const std::string& text) {
    Objective o;
    const auto colon = text.rfind(':');
    o.event_name = text.substr(0, colon);
    if (colon != std::string::npos) {
        try {
            std::size_t used = 0;
            o.target_count = std::stoi(text.substr(colon + 1), &used);
            if (used != text.size() - colon - 1) throw std::invalid_argument(text);
        } catch (const std::exception&) {
            throw ConfigError("objective '" + text + "': bad target count");
        }
    }
    if (o.event_name.empty()) throw ConfigError("objective: empty event name");
    if (o.target_count < 1) throw ConfigError("objective '" + text + "': target count must be positive");
    return o;
}

std::string RunConfig::resolved_eval_app() const {
    if (!eval_app.empty()) return eval_app;
    for (const auto& spec : list_builtin_apps()) {
        if (spec.name == app + "_perturbed") return spec.name;
    }
    return app;
}

void RunConfig::validate() const {
    if (objectives.empty()) throw ConfigError("objectives: at least one objective is required");
    if (episodes == 0) throw ConfigError("episodes: must be positive");
    if (max_len == 0) throw ConfigError("max_len: must be positive");
    if (min_count < 1) throw ConfigError("min_count: must be at least 1");
    if (eval_steps == 0) throw ConfigError("eval_steps: must be positive");
    if (folds < 2) throw ConfigError("folds: must be at least 2");
    if (seeds.empty()) throw ConfigError("seeds: at least one seed is required");
    if (jobs == 0) throw ConfigError("jobs: must be positive");
    if (random_runs == 0) throw ConfigError("random_runs: must be positive");
    if (random_episodes == 0) throw ConfigError("random_episodes: must be positive");
    if (!(qhash_learning_rate > 0.0 && qhash_learning_rate <= 1.0)) {
        throw ConfigError("qhash_learning_rate: must lie in (0, 1]");
    }
    for (double t : temperatures) {
        if (!(t > 0.0)) throw ConfigError("temperatures: every temperature must be positive");
    }
    trainer.validate();
    policy.validate();
    for (const auto& [key, path] : {std::pair{"data", data}, {"checkpoint", checkpoint}, {"qtable", qtable}, {"vocab", vocab}}) {
        if (!path.empty() && !std::ifstream(path)) throw ConfigError(std::string(key) + ": cannot open '" + path + "'");
    }
}

std::string RunConfig::to_json() const {
    json j;
    for (const auto& f : fields()) {
        if (f.affects_results) j[f.name] = f.get(*this);
    }
    return j.dump();
}

std::string RunConfig::fingerprint() const { return to_hex(fnv1a(to_json())); }

void apply_config_json(RunConfig& config, const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        const Field* f = find_field(key);
        if (!f) throw ConfigError("unknown key '" + key + "'");
        f->set(config, value);
    }
}

void apply_config_file(RunConfig& config, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    apply_config_json(config, ss.str());
}

namespace {

std::string variable_name(const char* key) {
    std::string var = "DRIFT_";
    for (const char* c = key; *c; ++c) var.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(*c))));
    return var;
}

}  // namespace

void apply_env_overrides(RunConfig& config, const std::map<std::string, std::string>& environment) {
    std::set<std::string> known;
    for (const auto& f : fields()) known.insert(variable_name(f.name));
    for (const auto& [var, value] : environment) {
        if (var.rfind("DRIFT_", 0) == 0 && !known.count(var)) throw ConfigError("unknown variable " + var);
    }
    for (const auto& f : fields()) {
        auto it = environment.find(variable_name(f.name));
        if (it == environment.end()) continue;
        const std::string& text = it->second;
        json value;
        switch (f.kind) {
            case Kind::StringList:
            case Kind::Objectives:
                value = split_commas(text);
                break;
            case Kind::UnsignedList:
            case Kind::RealList: {
                value = json::array();
                const Kind item = f.kind == Kind::UnsignedList ? Kind::Unsigned : Kind::Real;
                for (const auto& s : split_commas(text)) value.push_back(parse_scalar(f.name, item, s));
                break;
            }
            default:
                value = parse_scalar(f.name, f.kind, text);
        }
        f.set(config, value);
    }
}

std::map<std::string, std::string> drift_environment() {
    std::map<std::string, std::string> out;
    for (char** e = environ; e && *e; ++e) {
        const std::string_view entry(*e);
        if (!entry.starts_with("DRIFT_")) continue;
        const auto eq = entry.find('=');
        if (eq == std::string_view::npos) continue;
        out.emplace(std::string(entry.substr(0, eq)), std::string(entry.substr(eq + 1)));
    }
    return out;
}

}  // namespace drift
