#pragma once

// Shared pieces of the canonical model XML used by both the family-model
// and the application-model readers/writers.

#include <formweave/feature_model.hpp>

#include "xml_dom.hpp"

#include <string_view>
#include <utility>
#include <vector>

namespace formweave::detail {

inline constexpr std::string_view fm_namespace = "urn:formweave:feature-model";

extern const std::vector<std::pair<ValueType, std::string>> type_elements;

std::string_view type_element(ValueType t);
std::string type_stem(ValueType t);

/// `app_mode` admits state/clones attributes, fm:Instance children and value
/// nesting; those are skipped here and read by the application-model parser.
FeatureModel dom_to_model(const xml::Element& root, bool app_mode);
void inline_references(FeatureModel& m, const ModelResolver& resolver);

void write_node_open(xml::Writer& w, const Node& n, xml::Writer::Attributes extra);
void write_annotation(xml::Writer& w, const Node& n);
void write_attribute(xml::Writer& w, const Node& n, const Value* value);

} // namespace formweave::detail
