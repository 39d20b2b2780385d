#include "drift/featurize.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "drift/data.hpp"
#include "drift/errors.hpp"
#include "drift/hash.hpp"

namespace drift {
namespace {

constexpr std::array<std::string_view, kPropertyCount> kPropertyNames = {"AutomationID", "ClassName",
                                                                         "ControlType", "ProcessName"};

std::string_view property_value(const UIProperties& p, Property which) {
    switch (which) {
        case Property::AutomationId: return p.automation_id ? std::string_view(*p.automation_id) : kNoAutomationId;
        case Property::ClassName: return p.class_name;
        case Property::ControlType: return p.control_type;
        case Property::ProcessName: return p.process_name;
    }
    return {};
}

}  // namespace

std::string_view property_name(Property p) { return kPropertyNames[static_cast<std::size_t>(p)]; }

Vocabulary::Vocabulary(std::array<std::vector<std::string>, kPropertyCount> values, int min_count,
                       bool include_automation_id)
    : values_(std::move(values)), min_count_(min_count), include_automation_id_(include_automation_id) {
    index();
}

void Vocabulary::index() {
    width_ = 0;
    for (std::size_t p = 0; p < kPropertyCount; ++p) {
        lookup_[p].clear();
        for (std::size_t k = 0; k < values_[p].size(); ++k) lookup_[p].emplace(values_[p][k], k + 1);
        offsets_[p] = width_;
        width_ += values_[p].size() + 1;
    }
}

std::size_t Vocabulary::lookup(Property p, std::string_view value) const {
    const auto& m = lookup_[static_cast<std::size_t>(p)];
    auto it = m.find(value);
    return it == m.end() ? 0 : it->second;
}

std::string Vocabulary::to_json() const {
    nlohmann::ordered_json j;
    j["format"] = "drift-vocabulary/1";
    j["min_count"] = min_count_;
    j["include_automation_id"] = include_automation_id_;
    j["z"] = width_;
    nlohmann::ordered_json props;
    for (std::size_t p = 0; p < kPropertyCount; ++p) {
        auto list = nlohmann::ordered_json::array();
        list.push_back(kOtherValue);
        for (const auto& v : values_[p]) list.push_back(v);
        props[std::string(kPropertyNames[p])] = std::move(list);
    }
    j["properties"] = std::move(props);
    return j.dump(2);
}

Vocabulary Vocabulary::from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text.begin(), text.end());
        if (j.at("format") != "drift-vocabulary/1") throw IoError("unsupported vocabulary format");
        std::array<std::vector<std::string>, kPropertyCount> values;
        for (std::size_t p = 0; p < kPropertyCount; ++p) {
            auto list = j.at("properties").at(std::string(kPropertyNames[p])).get<std::vector<std::string>>();
            if (list.empty() || list.front() != kOtherValue) throw IoError("property map must start with Other");
            values[p].assign(list.begin() + 1, list.end());
        }
        Vocabulary v(std::move(values), j.at("min_count").get<int>(), j.value("include_automation_id", true));
        if (j.at("z").get<std::size_t>() != v.width()) throw IoError("vocabulary z does not match its maps");
        return v;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("vocabulary: ") + e.what());
    }
}

std::uint64_t Vocabulary::fingerprint() const { return fnv1a(to_json()); }

void Vocabulary::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << to_json() << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

Vocabulary build_vocabulary(std::span<const Episode> episodes, int min_count, bool include_automation_id) {
    if (episodes.empty()) throw EmptyCorpus("no episodes");
    if (min_count < 1) throw EmptyCorpus("min_count must be positive");

    std::array<std::unordered_map<std::string, long>, kPropertyCount> counts;
    auto count_tree = [&](const UITree& tree) {
        for (std::size_t i = 0; i < tree.size(); ++i) {
            for (std::size_t p = 0; p < kPropertyCount; ++p) {
                ++counts[p][std::string(property_value(tree.props(i), static_cast<Property>(p)))];
            }
        }
    };
    bool any = false;
    for (const auto& ep : episodes) {
        for (const auto& t : ep.transitions) {
            count_tree(*t.state);
            any = true;
        }
        if (!ep.transitions.empty()) count_tree(*ep.transitions.back().next_state);
    }
    if (!any) throw EmptyCorpus("episodes contain no transitions");

    std::array<std::vector<std::string>, kPropertyCount> values;
    for (std::size_t p = 0; p < kPropertyCount; ++p) {
        if (p == static_cast<std::size_t>(Property::AutomationId) && !include_automation_id) continue;
        std::vector<std::pair<std::string, long>> kept;
        for (auto& [value, n] : counts[p]) {
            if (n >= min_count) kept.emplace_back(value, n);
        }
        std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
            return a.second != b.second ? a.second > b.second : a.first < b.first;
        });
        for (auto& [value, n] : kept) values[p].push_back(std::move(value));
    }
    return Vocabulary(std::move(values), min_count, include_automation_id);
}

VectorizedState vectorize_state(const UITree& tree, const Vocabulary& vocab) {
    VectorizedState out{Matrix(tree.size(), vocab.width()), {}};
    for (std::size_t i = 0; i < tree.size(); ++i) {
        for (std::size_t p = 0; p < kPropertyCount; ++p) {
            const auto prop = static_cast<Property>(p);
            out.features(i, vocab.block_offset(prop) + vocab.lookup(prop, property_value(tree.props(i), prop))) = 1.0;
        }
    }
    out.edges.reserve(2 * (tree.size() - 1));
    for (std::size_t i = 0; i < tree.size(); ++i) {
        for (int c : tree.children(i)) {
            out.edges.emplace_back(static_cast<int>(i), c);
            out.edges.emplace_back(c, static_cast<int>(i));
        }
    }
    return out;
}

VectorizedAction vectorize_action(const UIAction& action, const UITree& tree,
                                  std::span<const ActionType> registered_types) {
    auto node = tree.find(action.node);
    if (!node) throw NodeNotInState("node " + action.node.hex() + " is not in the state");
    auto type_it = std::find(registered_types.begin(), registered_types.end(), action.type);
    if (type_it == registered_types.end()) {
        throw ShapeMismatch("action type " + std::string(to_string(action.type)) + " is not registered");
    }
    VectorizedAction out{std::vector<double>(registered_types.size(), 0.0), std::vector<double>(tree.size(), 0.0)};
    out.type_one_hot[static_cast<std::size_t>(type_it - registered_types.begin())] = 1.0;
    out.node_one_hot[*node] = 1.0;
    return out;
}

std::span<const ActionType> default_action_types() {
    static constexpr std::array<ActionType, 1> kTypes = {ActionType::LeftClick};
    return kTypes;
}

EncodedState encode_state(const UITree& tree, const Vocabulary& vocab, std::span<const ActionType> registered_types) {
    EncodedState out{vectorize_state(tree, vocab), enumerate_actions(tree, registered_types), {}, tree.canonical_hash()};
    out.slots.reserve(out.actions.size());
    for (const auto& action : out.actions) {
        // Duplicated identifiers resolve to their first pre-order occurrence.
        const std::size_t node = *tree.find(action.node);
        const auto type = static_cast<std::size_t>(
            std::find(registered_types.begin(), registered_types.end(), action.type) - registered_types.begin());
        out.slots.push_back({node, type});
    }
    return out;
}

}  // namespace drift
