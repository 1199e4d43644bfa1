#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <formweave/error.hpp>
#include <formweave/value.hpp>

namespace formweave {

enum class NodeKind { Solitary, Group, Grouped, Reference };

std::string_view to_string(NodeKind k) noexcept;

/// How many clones of a solitary feature may exist. [1..1] is mandatory,
/// [0..1] optional; anything with max > 1 is a multi-instance feature.
struct FeatureCardinality {
    static constexpr int unbounded = -1;

    int min = 1;
    int max = 1;

    bool is_unbounded() const noexcept { return max == unbounded; }
    bool is_multi() const noexcept { return is_unbounded() || max > 1; }
    bool is_mandatory() const noexcept { return min >= 1; }
    bool admits(int count) const noexcept { return count >= min && (is_unbounded() || count <= max); }

    friend bool operator==(const FeatureCardinality&, const FeatureCardinality&) = default;
};

/// Group member selection bounds. [1..1] is xor, [1..k] is or.
struct GroupCardinality {
    int min = 1;
    int max = 1;

    friend bool operator==(const GroupCardinality&, const GroupCardinality&) = default;
};

struct AttributeSpec {
    ValueType type = ValueType::String;

    friend bool operator==(const AttributeSpec&, const AttributeSpec&) = default;
};

struct Node {
    NodeKind kind = NodeKind::Solitary;
    std::string name;
    std::optional<std::string> description;
    FeatureCardinality cardinality;        // Solitary only
    GroupCardinality group;                // Group only
    std::optional<AttributeSpec> attribute;
    std::string target;                    // Reference only
    std::vector<Node> children;
    int line = 0;                          // source line; not part of equality

    bool is_feature() const noexcept { return kind == NodeKind::Solitary || kind == NodeKind::Grouped; }
    bool is_multi() const noexcept { return kind == NodeKind::Solitary && cardinality.is_multi(); }

    /// Description when present, otherwise the name.
    const std::string& label() const noexcept { return description ? *description : name; }

    friend bool operator==(const Node& a, const Node& b);
};

enum class ConstraintKind { Requires, Excludes };

std::string_view to_string(ConstraintKind k) noexcept;

struct CrossTreeConstraint {
    ConstraintKind kind = ConstraintKind::Requires;
    std::string from;
    std::string to;

    friend bool operator==(const CrossTreeConstraint&, const CrossTreeConstraint&) = default;
};

/// A family feature model. The root node carries the model name and is
/// always a [1..1] solitary feature.
struct FeatureModel {
    Node root;
    std::vector<CrossTreeConstraint> constraints;

    const std::string& name() const noexcept { return root.name; }
    const std::string& title() const noexcept { return root.label(); }

    friend bool operator==(const FeatureModel&, const FeatureModel&) = default;
};

// -- paths ------------------------------------------------------------------

/// Paths are dot-joined name sequences from the root, e.g. "Felling.Applicant.Name".
/// Instance paths may carry clone indices: "Move.FamilyMember[2].Name".
std::vector<std::string> split_path(std::string_view path);
std::string join_path(std::string_view parent, std::string_view child);

/// Strips clone indices: "Move.FamilyMember[2].Name" -> "Move.FamilyMember.Name".
std::string family_path(std::string_view instance_path);

const Node* find_node(const FeatureModel& m, std::string_view path);

/// True when some strict ancestor of `path` is a multi-instance feature.
bool inside_multi_subtree(const FeatureModel& m, std::string_view path);

/// Preorder walk: fn(node, path, parent-or-null).
void for_each_node(const FeatureModel& m,
                   const std::function<void(const Node&, const std::string&, const Node*)>& fn);

bool is_identifier(std::string_view s) noexcept;

// -- parsing ----------------------------------------------------------------

/// Returns the document text of the named model, or nullopt.
using ModelResolver = std::function<std::optional<std::string>(const std::string& target)>;

/// Looks for "<dir>/<target>.fm.xml", then "<dir>/shared/<target>.fm.xml".
ModelResolver directory_resolver(std::filesystem::path dir);

struct ParseOptions {
    ModelResolver resolver;
    bool validate = true;
};

struct Diagnostic {
    std::string path;
    std::string rule;
    std::string message;

    friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

class ModelError : public Error {
public:
    explicit ModelError(std::vector<Diagnostic> diagnostics);
    const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

private:
    std::vector<Diagnostic> diagnostics_;
};

/// Parses the canonical feature-model XML. Model references are inlined.
/// Structural problems throw ParseError (with line); with `validate` set, a
/// non-empty validate_model result throws ModelError.
FeatureModel parse_feature_model(std::string_view text, const ParseOptions& options = {});

/// Reads a model file, resolving references against its directory.
FeatureModel load_feature_model(const std::filesystem::path& file, bool validate = true);

std::string serialize_feature_model(const FeatureModel& m);

// -- validation -------------------------------------------------------------

struct ValidateOptions {
    bool strict_types = false;   // rejects boolean/date attribute types
};

/// Rule ids: name-invalid, duplicate-path, root-kind, root-cardinality,
/// min-negative, min-gt-max, max-zero, group-empty, group-min-gt-max,
/// group-size, group-member-kind, grouped-outside-group,
/// reference-unresolved, attribute-on-group, constraint-dangling,
/// constraint-endpoint-kind, constraint-self, constraint-in-clone-subtree,
/// attribute-type-extension.
std::vector<Diagnostic> validate_model(const FeatureModel& m, const ValidateOptions& options = {});

std::string read_file(const std::filesystem::path& file);

} // namespace formweave
