#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace drift {

/// The four properties that identify a GUI element.
struct UIProperties {
    std::optional<std::string> automation_id;
    std::string class_name;
    std::string control_type;
    std::string process_name;

    friend bool operator==(const UIProperties&, const UIProperties&) = default;
};

/// Recursive builder form of a GUI element. Used to construct trees by hand
/// and by the document parser; `UITree` is the immutable flattened form.
struct UINode {
    UIProperties props;
    std::vector<UINode> children;

    friend bool operator==(const UINode&, const UINode&) = default;
};

/// Hash of a node's UIProperties, independent of its children.
struct NodeIdentifier {
    std::uint64_t value = 0;

    std::string hex() const;
    friend auto operator<=>(const NodeIdentifier&, const NodeIdentifier&) = default;
};

enum class ActionType : std::uint8_t { LeftClick = 0, RightClick = 1, DoubleClick = 2 };

inline constexpr std::size_t kActionTypeCount = 3;

std::string_view to_string(ActionType type);
std::optional<ActionType> parse_action_type(std::string_view name);

struct UIAction {
    NodeIdentifier node;
    ActionType type = ActionType::LeftClick;

    friend bool operator==(const UIAction&, const UIAction&) = default;
};

/// Control types whose elements can be acted upon.
bool is_actionable(std::string_view control_type);

NodeIdentifier node_identifier(const UIProperties& props);
inline NodeIdentifier node_identifier(const UINode& node) { return node_identifier(node.props); }

/// Immutable GUI state. Nodes are stored in pre-order; index 0 is the root.
class UITree {
public:
    explicit UITree(const UINode& root);

    std::size_t size() const noexcept { return nodes_.size(); }
    const UIProperties& props(std::size_t i) const { return nodes_[i].props; }
    NodeIdentifier identifier(std::size_t i) const { return nodes_[i].id; }
    /// Parent index, or -1 for the root.
    int parent(std::size_t i) const { return nodes_[i].parent; }
    std::span<const int> children(std::size_t i) const { return nodes_[i].children; }

    /// First pre-order index carrying `id`, if any.
    std::optional<std::size_t> find(NodeIdentifier id) const;

    /// Reconstructs the recursive form.
    UINode to_node() const;

    /// Hash of the canonical serialization; computed once at construction.
    std::uint64_t canonical_hash() const noexcept { return hash_; }

    friend bool operator==(const UITree& a, const UITree& b) { return a.hash_ == b.hash_ && a.to_node() == b.to_node(); }

private:
    struct FlatNode {
        UIProperties props;
        NodeIdentifier id;
        int parent = -1;
        std::vector<int> children;
    };

    void flatten(const UINode& node, int parent);

    std::vector<FlatNode> nodes_;
    std::uint64_t hash_ = 0;
};

using TreePtr = std::shared_ptr<const UITree>;

inline TreePtr make_tree(const UINode& root) { return std::make_shared<const UITree>(root); }

/// Canonical compact document (keys Identifier, UIProperties, Children).
std::string serialize_tree(const UITree& tree);
std::string serialize_node(const UINode& node);

/// Parses a tree document. The stored Identifier is informational: node
/// identifiers are always recomputed from the properties.
/// Throws MalformedDocument, SchemaViolation or CycleDetected.
UITree parse_tree(std::string_view text);
UINode parse_node(std::string_view text);

std::vector<UIAction> enumerate_actions(const UITree& tree, std::span<const ActionType> types);
std::vector<UIAction> enumerate_actions(const UITree& tree);

/// Pre-order indices of actionable nodes.
std::vector<std::size_t> actionable_nodes(const UITree& tree);

/// Properties of the synthetic Desktop root.
const UIProperties& desktop_properties();

/// Keeps the subtrees created by `process`, re-rooted under a Desktop node.
/// Desktop nodes are never matched themselves; matching is on the topmost
/// nodes whose process_name equals `process`, and within a kept subtree only
/// descendants of the same process survive.
UITree filter_process(const UITree& tree, std::string_view process);

std::uint64_t canonical_state_hash(const UITree& tree);

}  // namespace drift
