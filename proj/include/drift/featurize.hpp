#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "drift/matrix.hpp"
#include "drift/uitree.hpp"

namespace drift {

struct Episode;

/// The four one-hot blocks of a node embedding, in layout order.
enum class Property : std::uint8_t { AutomationId = 0, ClassName = 1, ControlType = 2, ProcessName = 3 };
inline constexpr std::size_t kPropertyCount = 4;

std::string_view property_name(Property p);

/// Value used for an absent AutomationID.
inline constexpr std::string_view kNoAutomationId = "<none>";
/// Label of the reserved bucket at index 0 of every property map.
inline constexpr std::string_view kOtherValue = "Other";

/// Per-property value→index maps. Index 0 of each map is the Other bucket
/// that absorbs rare and unseen values.
class Vocabulary {
public:
    Vocabulary() = default;

    /// `values[p]` lists the kept values of property p in index order,
    /// starting at index 1 (the Other bucket is implicit).
    Vocabulary(std::array<std::vector<std::string>, kPropertyCount> values, int min_count,
               bool include_automation_id = true);

    /// Index within the property's block; 0 when unseen.
    std::size_t lookup(Property p, std::string_view value) const;
    std::size_t block_size(Property p) const { return values_[static_cast<std::size_t>(p)].size() + 1; }
    std::size_t block_offset(Property p) const { return offsets_[static_cast<std::size_t>(p)]; }
    /// Kept values of p, in index order starting at index 1.
    std::span<const std::string> values(Property p) const { return values_[static_cast<std::size_t>(p)]; }

    /// Node embedding width z.
    std::size_t width() const noexcept { return width_; }
    int min_count() const noexcept { return min_count_; }
    bool includes_automation_id() const noexcept { return include_automation_id_; }

    /// FNV-1a over the serialized form; checkpoints record it.
    std::uint64_t fingerprint() const;

    std::string to_json() const;
    static Vocabulary from_json(std::string_view text);
    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
        return a.values_ == b.values_ && a.min_count_ == b.min_count_ &&
               a.include_automation_id_ == b.include_automation_id_;
    }

private:
    void index();

    std::array<std::vector<std::string>, kPropertyCount> values_;
    std::array<std::map<std::string, std::size_t, std::less<>>, kPropertyCount> lookup_;
    std::array<std::size_t, kPropertyCount> offsets_{};
    std::size_t width_ = 0;
    int min_count_ = 1;
    bool include_automation_id_ = true;
};

/// Values occurring at least `min_count` times across every state in the
/// episodes get their own index, ordered by descending count then
/// lexicographically. With `include_automation_id` false the AutomationID
/// block holds only the Other bucket. Throws EmptyCorpus.
Vocabulary build_vocabulary(std::span<const Episode> episodes, int min_count, bool include_automation_id = true);

/// Directed (source, target) pairs.
using EdgeList = std::vector<std::pair<int, int>>;

struct VectorizedAction {
    std::vector<double> type_one_hot;  // a_e
    std::vector<double> node_one_hot;  // a_i
};

/// n×z one-hot matrix (four ones per row) and bidirectional tree edges.
struct VectorizedState {
    Matrix features;
    EdgeList edges;
};

VectorizedState vectorize_state(const UITree& tree, const Vocabulary& vocab);

/// Throws NodeNotInState if the identifier does not occur in `tree`.
VectorizedAction vectorize_action(const UIAction& action, const UITree& tree,
                                  std::span<const ActionType> registered_types);

/// An enumerated action as (resolved node row, action-type index): the
/// positions of the ones in (a_i, a_e).
struct ActionSlot {
    std::size_t node = 0;
    std::size_t type = 0;

    friend bool operator==(const ActionSlot&, const ActionSlot&) = default;
};

/// A state ready for the Q-network: its graph, its dynamic action set in
/// enumeration order, and the canonical hash of the tree it came from.
struct EncodedState {
    VectorizedState graph;
    std::vector<UIAction> actions;
    std::vector<ActionSlot> slots;  // parallel to `actions`
    std::uint64_t hash = 0;
};

EncodedState encode_state(const UITree& tree, const Vocabulary& vocab, std::span<const ActionType> registered_types);

/// Registered action types used when none are configured.
std::span<const ActionType> default_action_types();

}  // namespace drift
