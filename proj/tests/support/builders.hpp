#pragma once

#include <filesystem>
#include <initializer_list>
#include <memory>
#include <optional>
#include <string>

#include <formweave/feature_model.hpp>

namespace formweave::testing {

inline Node solitary(std::string name, int min, int max, std::optional<ValueType> attr = {},
                     std::initializer_list<Node> children = {}, std::optional<std::string> desc = {})
{
    Node n;
    n.kind = NodeKind::Solitary;
    n.name = std::move(name);
    n.cardinality = {min, max};
    if (attr)
        n.attribute = AttributeSpec{*attr};
    n.children = children;
    n.description = std::move(desc);
    return n;
}

inline Node mandatory(std::string name, std::optional<ValueType> attr = {}, std::initializer_list<Node> children = {},
                      std::optional<std::string> desc = {})
{
    return solitary(std::move(name), 1, 1, attr, children, std::move(desc));
}

inline Node optional(std::string name, std::optional<ValueType> attr = {}, std::initializer_list<Node> children = {},
                     std::optional<std::string> desc = {})
{
    return solitary(std::move(name), 0, 1, attr, children, std::move(desc));
}

inline Node member(std::string name, std::optional<ValueType> attr = {}, std::initializer_list<Node> children = {})
{
    Node n;
    n.kind = NodeKind::Grouped;
    n.name = std::move(name);
    if (attr)
        n.attribute = AttributeSpec{*attr};
    n.children = children;
    return n;
}

inline Node group(std::string name, int gmin, int gmax, std::initializer_list<Node> members,
                  std::optional<std::string> desc = {})
{
    Node n;
    n.kind = NodeKind::Group;
    n.name = std::move(name);
    n.group = {gmin, gmax};
    n.children = members;
    n.description = std::move(desc);
    return n;
}

inline std::shared_ptr<const FeatureModel> model(std::string root, std::initializer_list<Node> children,
                                                 std::initializer_list<CrossTreeConstraint> constraints = {})
{
    FeatureModel m;
    m.root.name = std::move(root);
    m.root.children = children;
    m.constraints = constraints;
    return std::make_shared<const FeatureModel>(std::move(m));
}

inline std::filesystem::path source_path(const std::string& rel)
{
    return std::filesystem::path(FORMWEAVE_SOURCE_DIR) / rel;
}

} // namespace formweave::testing
