#include "drift/uitree.hpp"

#include <algorithm>
#include <array>
#include <functional>

#include <nlohmann/json.hpp>

#include "drift/errors.hpp"
#include "drift/hash.hpp"

namespace drift {
namespace {

constexpr std::uint8_t kFieldSeparator = 0x1F;

constexpr std::array<std::string_view, 5> kActionableTypes = {"Button", "ListItem", "MenuItem", "Hyperlink",
                                                              "TabItem"};

constexpr std::array<std::string_view, kActionTypeCount> kActionTypeNames = {"LeftClick", "RightClick",
                                                                             "DoubleClick"};

void append_json_string(std::string& out, std::string_view s) {
    out.push_back('"');
    for (char ch : s) {
        const auto c = static_cast<unsigned char>(ch);
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\b': out += "\\b"; break;
            case '\f': out += "\\f"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (c < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out.push_back(ch);
                }
        }
    }
    out.push_back('"');
}

void append_properties(std::string& out, const UIProperties& p) {
    out += "{";
    if (p.automation_id) {
        out += "\"AutomationID\":";
        append_json_string(out, *p.automation_id);
        out += ",";
    }
    out += "\"ClassName\":";
    append_json_string(out, p.class_name);
    out += ",\"ControlType\":";
    append_json_string(out, p.control_type);
    out += ",\"ProcessName\":";
    append_json_string(out, p.process_name);
    out += "}";
}

template <class ChildrenFn>
void append_document(std::string& out, const UIProperties& props, ChildrenFn&& for_each_child) {
    out += "{\"Identifier\":\"";
    out += node_identifier(props).hex();
    out += "\",\"UIProperties\":[";
    append_properties(out, props);
    out += "],\"Children\":[";
    bool first = true;
    for_each_child([&](auto&& emit) {
        if (!first) out += ",";
        first = false;
        emit();
    });
    out += "]}";
}

void append_node(std::string& out, const UINode& node) {
    append_document(out, node.props, [&](auto&& visit) {
        for (const auto& child : node.children) visit([&] { append_node(out, child); });
    });
}

void append_flat(std::string& out, const UITree& tree, std::size_t i) {
    append_document(out, tree.props(i), [&](auto&& visit) {
        for (int c : tree.children(i)) visit([&] { append_flat(out, tree, static_cast<std::size_t>(c)); });
    });
}

std::string required_string(const nlohmann::json& obj, const char* key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) throw SchemaViolation(path + ": missing required property " + key);
    if (!it->is_string()) throw SchemaViolation(path + ": property " + key + " must be a string");
    std::string value = it->get<std::string>();
    if (value.empty()) throw SchemaViolation(path + ": property " + key + " must be non-empty");
    return value;
}

UINode node_from_json(const nlohmann::json& j, std::vector<std::string>& ancestry, const std::string& path) {
    if (!j.is_object()) throw SchemaViolation(path + ": node must be an object");

    std::string stored_id;
    if (auto it = j.find("Identifier"); it != j.end()) {
        if (!it->is_string()) throw SchemaViolation(path + ": Identifier must be a string");
        stored_id = it->get<std::string>();
        if (!stored_id.empty() && std::find(ancestry.begin(), ancestry.end(), stored_id) != ancestry.end()) {
            throw CycleDetected(path + ": Identifier " + stored_id + " repeats an ancestor");
        }
    }

    auto props_it = j.find("UIProperties");
    if (props_it == j.end()) throw SchemaViolation(path + ": missing UIProperties");
    if (!props_it->is_array() || props_it->size() != 1 || !(*props_it)[0].is_object()) {
        throw SchemaViolation(path + ": UIProperties must be an array holding one object");
    }
    const auto& pj = (*props_it)[0];
    UINode node;
    if (auto it = pj.find("AutomationID"); it != pj.end() && !it->is_null()) {
        if (!it->is_string()) throw SchemaViolation(path + ": AutomationID must be a string");
        node.props.automation_id = it->get<std::string>();
    }
    node.props.class_name = required_string(pj, "ClassName", path);
    node.props.control_type = required_string(pj, "ControlType", path);
    node.props.process_name = required_string(pj, "ProcessName", path);

    if (auto it = j.find("Children"); it != j.end()) {
        if (!it->is_array()) throw SchemaViolation(path + ": Children must be an array");
        if (!stored_id.empty()) ancestry.push_back(stored_id);
        node.children.reserve(it->size());
        for (std::size_t k = 0; k < it->size(); ++k) {
            node.children.push_back(node_from_json((*it)[k], ancestry, path + "/" + std::to_string(k)));
        }
        if (!stored_id.empty()) ancestry.pop_back();
    }
    return node;
}

void filter_into(const UITree& tree, std::size_t i, std::string_view process, bool inside, UINode& parent) {
    const auto& p = tree.props(i);
    const bool is_desktop = p == desktop_properties();
    if (inside) {
        if (p.process_name != process) return;
        UINode copy{p, {}};
        for (int c : tree.children(i)) filter_into(tree, static_cast<std::size_t>(c), process, true, copy);
        parent.children.push_back(std::move(copy));
        return;
    }
    if (!is_desktop && p.process_name == process) {
        filter_into(tree, i, process, true, parent);
        return;
    }
    for (int c : tree.children(i)) filter_into(tree, static_cast<std::size_t>(c), process, false, parent);
}

}  // namespace

std::string NodeIdentifier::hex() const { return to_hex(value); }

std::string_view to_string(ActionType type) { return kActionTypeNames[static_cast<std::size_t>(type)]; }

std::optional<ActionType> parse_action_type(std::string_view name) {
    for (std::size_t i = 0; i < kActionTypeNames.size(); ++i) {
        if (kActionTypeNames[i] == name) return static_cast<ActionType>(i);
    }
    return std::nullopt;
}

bool is_actionable(std::string_view control_type) {
    return std::find(kActionableTypes.begin(), kActionableTypes.end(), control_type) != kActionableTypes.end();
}

NodeIdentifier node_identifier(const UIProperties& p) {
    Fnv1a h;
    h.byte(p.automation_id ? 1 : 0);
    if (p.automation_id) h.bytes(*p.automation_id);
    h.byte(kFieldSeparator).bytes(p.class_name);
    h.byte(kFieldSeparator).bytes(p.control_type);
    h.byte(kFieldSeparator).bytes(p.process_name);
    return {h.value()};
}

UITree::UITree(const UINode& root) {
    flatten(root, -1);
    hash_ = fnv1a(serialize_tree(*this));
}

void UITree::flatten(const UINode& node, int parent) {
    const int index = static_cast<int>(nodes_.size());
    nodes_.push_back(FlatNode{node.props, node_identifier(node.props), parent, {}});
    nodes_.back().children.reserve(node.children.size());
    for (const auto& child : node.children) {
        nodes_[static_cast<std::size_t>(index)].children.push_back(static_cast<int>(nodes_.size()));
        flatten(child, index);
    }
}

std::optional<std::size_t> UITree::find(NodeIdentifier id) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].id == id) return i;
    }
    return std::nullopt;
}

UINode UITree::to_node() const {
    std::function<UINode(std::size_t)> build = [&](std::size_t i) {
        UINode n{nodes_[i].props, {}};
        n.children.reserve(nodes_[i].children.size());
        for (int c : nodes_[i].children) n.children.push_back(build(static_cast<std::size_t>(c)));
        return n;
    };
    return build(0);
}

std::string serialize_tree(const UITree& tree) {
    std::string out;
    out.reserve(tree.size() * 160);
    append_flat(out, tree, 0);
    return out;
}

std::string serialize_node(const UINode& node) {
    std::string out;
    append_node(out, node);
    return out;
}

UINode parse_node(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedDocument(e.what());
    }
    std::vector<std::string> ancestry;
    return node_from_json(j, ancestry, "");
}

UITree parse_tree(std::string_view text) { return UITree(parse_node(text)); }

std::vector<UIAction> enumerate_actions(const UITree& tree, std::span<const ActionType> types) {
    std::vector<UIAction> out;
    for (std::size_t i = 0; i < tree.size(); ++i) {
        if (!is_actionable(tree.props(i).control_type)) continue;
        for (ActionType t : types) out.push_back({tree.identifier(i), t});
    }
    return out;
}

std::vector<UIAction> enumerate_actions(const UITree& tree) {
    constexpr std::array<ActionType, 1> kDefault = {ActionType::LeftClick};
    return enumerate_actions(tree, kDefault);
}

std::vector<std::size_t> actionable_nodes(const UITree& tree) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < tree.size(); ++i) {
        if (is_actionable(tree.props(i).control_type)) out.push_back(i);
    }
    return out;
}

const UIProperties& desktop_properties() {
    static const UIProperties desktop{std::nullopt, "#32769", "Pane", "explorer"};
    return desktop;
}

UITree filter_process(const UITree& tree, std::string_view process) {
    UINode root{desktop_properties(), {}};
    filter_into(tree, 0, process, false, root);
    return UITree(root);
}

std::uint64_t canonical_state_hash(const UITree& tree) { return tree.canonical_hash(); }

}  // namespace drift
