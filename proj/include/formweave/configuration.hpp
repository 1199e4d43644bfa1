#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <formweave/feature_model.hpp>
#include <formweave/value.hpp>

namespace formweave {

enum class DecisionState { Undecided, Selected, Eliminated };

std::string_view to_string(DecisionState s) noexcept;

/// A family model plus per-instance decisions. Only decided states are
/// stored; absent paths are undecided. Keys are instance paths, so nodes
/// below a cloned feature appear once per clone ("F[1].Name", "F[2].Name").
struct ApplicationFeatureModel {
    std::shared_ptr<const FeatureModel> family;
    std::map<std::string, DecisionState, std::less<>> states;
    std::map<std::string, int, std::less<>> clones;
    std::map<std::string, Value, std::less<>> values;

    DecisionState state(std::string_view path) const;
    bool selected(std::string_view path) const { return state(path) == DecisionState::Selected; }
    bool eliminated(std::string_view path) const { return state(path) == DecisionState::Eliminated; }
    const Value* value(std::string_view path) const;
    std::optional<int> clone_count(std::string_view path) const;

    friend bool operator==(const ApplicationFeatureModel& a, const ApplicationFeatureModel& b);
};

// -- instance tree --------------------------------------------------------------

enum class InstanceRole {
    Feature,    // root, non-multi solitary, or grouped feature
    Container,  // a multi-instance solitary feature; children are its clones
    Instance,   // one clone "F[i]" of a container
    Group,
};

struct InstanceEntry {
    std::string path;
    const Node* node = nullptr;
    InstanceRole role = InstanceRole::Feature;
    int parent = -1;
    int clone_index = 0;            // Instance only, 1-based
    std::vector<int> children;
};

/// The family tree expanded by the current clone counts, in document
/// (preorder) order.
class InstanceTree {
public:
    InstanceTree(const FeatureModel& family, const std::map<std::string, int, std::less<>>& clones);
    explicit InstanceTree(const ApplicationFeatureModel& app);

    const std::vector<InstanceEntry>& entries() const noexcept { return entries_; }
    const InstanceEntry& operator[](int i) const { return entries_[static_cast<std::size_t>(i)]; }
    int index_of(std::string_view path) const;
    const InstanceEntry* find(std::string_view path) const;

private:
    void add(const Node& node, std::string path, InstanceRole role, int parent, int clone_index,
             const std::map<std::string, int, std::less<>>& clones);

    std::vector<InstanceEntry> entries_;
    std::map<std::string, int, std::less<>> index_;
};

struct GroupStatus {
    int selected = 0;
    std::vector<int> undecided;     // member entry indices, document order
    int remaining_min = 0;          // further selections still required
    int remaining_max = 0;          // further selections still allowed
};

GroupStatus group_status(const ApplicationFeatureModel& app, const InstanceTree& tree, const InstanceEntry& group);

// -- decisions ------------------------------------------------------------------

namespace decision {
struct Select { std::string path; };
struct Eliminate { std::string path; };
struct SetValue { std::string path; Value value; };
struct ResolveGroup { std::string group; std::vector<std::string> members; };
struct Clone { std::string path; int count = 0; };
} // namespace decision

using Decision = std::variant<decision::Select, decision::Eliminate, decision::SetValue,
                              decision::ResolveGroup, decision::Clone>;

std::string describe(const Decision& d);
const std::string& target_path(const Decision& d);

/// Precondition failures of a decision: unknown path, already decided,
/// type mismatch, clone count outside the cardinality.
class DecisionError : public Error {
public:
    DecisionError(std::string path, const std::string& message);
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// A decision that contradicts an earlier decision or a constraint once
/// propagated. Carries the decision's target and the node that clashed.
class ConflictError : public Error {
public:
    ConflictError(std::string trigger, std::string conflicting, const std::string& reason);
    const std::string& trigger() const noexcept { return trigger_; }
    const std::string& conflicting() const noexcept { return conflicting_; }

private:
    std::string trigger_;
    std::string conflicting_;
};

/// Root selected and mandatory descendants propagated.
ApplicationFeatureModel new_configuration(std::shared_ptr<const FeatureModel> family);

/// Applies `d` and propagates to a fixpoint; the input is left untouched.
ApplicationFeatureModel specialize(const ApplicationFeatureModel& app, const Decision& d);

/// Forced consequences of the current states: parent/mandatory-child
/// selection, subtree elimination, fixed clone counts, group maxima and
/// requires/excludes in both directions. Throws ConflictError.
void propagate(ApplicationFeatureModel& app, const std::string& trigger = {});

// -- queries ----------------------------------------------------------------------

enum class ItemKind { Value, Optional, Group, CloneCount };
enum class ItemTag { Mandatory, Optional, Group };

std::string_view to_string(ItemKind k) noexcept;
std::string_view to_string(ItemTag t) noexcept;

struct OpenItem {
    ItemKind kind = ItemKind::Value;
    ItemTag tag = ItemTag::Mandatory;
    bool mandatory = true;          // the configuration cannot complete without it
    std::string path;

    friend bool operator==(const OpenItem&, const OpenItem&) = default;
};

/// Undecided variability points and unset attributes on selected nodes, in
/// document order.
std::vector<OpenItem> open_items(const ApplicationFeatureModel& app);

struct Violation {
    std::string rule;               // cardinality, group-cardinality, requires, excludes, parent, value
    std::vector<std::string> paths;
    std::string message;
};

std::vector<Violation> check_constraints(const ApplicationFeatureModel& app);

bool is_complete(const ApplicationFeatureModel& app);

/// Selected instance paths in document order; identifies a configuration's
/// structure independent of attribute values.
std::vector<std::string> structure_key(const ApplicationFeatureModel& app);

// -- serialization ----------------------------------------------------------------

std::string serialize_application_model(const ApplicationFeatureModel& app);
ApplicationFeatureModel parse_application_model(std::string_view text);

} // namespace formweave
