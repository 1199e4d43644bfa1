#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <formweave/configuration.hpp>
#include <formweave/cui.hpp>

namespace formweave {

enum class Direction { FmToCui, CuiToFm, FmToReport };

std::string_view to_string(Direction d) noexcept;

// Which part of the output a fm-to-cui rule contributes. The first matching
// rule fires per facet, so a node can get a label from one rule and its
// control from another.
enum class Facet { Page, Label, Widget, Trailer, Decode, Report };

std::string_view to_string(Facet f) noexcept;

enum class NamingStyle {
    Dotted,         // "Felling.Applicant.Name"
    Concatenated,   // "FellingApplicantName", ancestor names run together
};

/// Widget name for an instance path. Dotted names are the instance path
/// itself; concatenated names drop the separators but keep clone indices.
std::string widget_name(std::string_view instance_path, NamingStyle style = NamingStyle::Dotted);

/// Label of an instance entry: node label, plus " [i]" for every clone index
/// on the path.
std::string instance_label(const InstanceEntry& e);

struct TraceEntry {
    std::string path;
    std::string rule;
    std::string label_rule;   // fm-to-cui only
    std::string emitted;      // widget name, decision, or report field

    friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

using TransformationTrace = std::vector<TraceEntry>;

/// What a fm-to-cui or report rule sees.
struct RuleContext {
    const ApplicationFeatureModel& app;
    const InstanceTree& tree;
    const InstanceEntry* entry = nullptr;   // null for page/trailer rules
    const OpenItem* item = nullptr;         // null for page/trailer/report rules
    NamingStyle naming = NamingStyle::Dotted;
    const std::map<std::string, std::string>* prefills = nullptr;   // instance path -> text
};

/// Accumulates the output of fm-to-cui rules.
struct Emission {
    Page page;
    std::string label;
    std::vector<Decision> forced;
    std::vector<ReportField> fields;
    std::string emitted;
};

/// What a cui-to-fm rule sees: one input widget and its submitted text.
struct DecodeContext {
    const ApplicationFeatureModel& app;
    const InstanceTree& tree;
    const InstanceEntry& entry;
    const Input& input;
    const std::string* answer;   // null when absent
};

struct TransformationRule {
    std::string id;
    Direction direction = Direction::FmToCui;
    Facet facet = Facet::Widget;
    std::string condition;   // human-readable summary
    bool extension = false;

    std::function<bool(const RuleContext&)> applies;
    std::function<void(const RuleContext&, Emission&)> emit;

    // cui-to-fm only
    std::function<bool(const DecodeContext&)> decodes;
    std::function<Decision(const DecodeContext&)> decode;   // throws LexicalError / Error
};

struct RuleSet {
    Direction direction = Direction::FmToCui;
    std::vector<TransformationRule> rules;
};

const RuleSet& default_fm_to_cui_rules();
const RuleSet& default_cui_to_fm_rules();
const RuleSet& default_report_rules();

/// JSON array of {id, direction, facet, condition, extension} over the three
/// default rule sets.
std::string rule_registry_json();

/// Raised when a scope item matches no widget rule.
class RuleCoverageError : public Error {
public:
    using Error::Error;
};

struct FormPlan {
    Page page;
    TransformationTrace trace;
    std::vector<Decision> forced;   // applied before any answer on submit
};

struct FmToCuiOptions {
    NamingStyle naming = NamingStyle::Dotted;
    std::map<std::string, std::string> prefills;   // instance path -> text
    std::string page_id = "page-001";
};

/// Builds one page covering `scope` (document order). Throws
/// RuleCoverageError if an item has no widget rule.
FormPlan fm_to_cui(const ApplicationFeatureModel& app, const std::vector<OpenItem>& scope,
                   const RuleSet& rules = default_fm_to_cui_rules(), const FmToCuiOptions& options = {});

struct FieldError {
    std::string name;
    std::string message;

    friend bool operator==(const FieldError&, const FieldError&) = default;
};

/// Submitted answers rejected: missing required field, lexical error,
/// unknown field, or a decision that conflicts with the model.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<FieldError> errors);
    const std::vector<FieldError>& errors() const noexcept { return errors_; }

private:
    std::vector<FieldError> errors_;
};

using Answers = std::map<std::string, std::string>;

/// Applies forced decisions in order, skipping a group resolution whose
/// members an earlier decision already selected. Appends "forced" entries
/// to `trace`. Throws what specialize throws.
ApplicationFeatureModel apply_forced(ApplicationFeatureModel app, const std::vector<Decision>& forced,
                                     TransformationTrace& trace);

struct CuiToFmResult {
    ApplicationFeatureModel app;
    TransformationTrace trace;
};

/// Applies the plan's forced decisions, then one decision per input widget in
/// page order. Checkbox sets answer with comma-joined member names; an
/// optional-feature checkbox selects when its answer is present and non-empty.
/// Throws ValidationError; `app` is never modified.
CuiToFmResult cui_to_fm(const ApplicationFeatureModel& app, const FormPlan& plan, const Answers& answers,
                        const RuleSet& rules = default_cui_to_fm_rules(), NamingStyle naming = NamingStyle::Dotted);

/// Raised by fm_to_report on an incomplete model.
class IncompleteError : public Error {
public:
    explicit IncompleteError(std::vector<std::string> open_paths);
    const std::vector<std::string>& open_paths() const noexcept { return open_paths_; }

private:
    std::vector<std::string> open_paths_;
};

struct ReportResult {
    Report report;
    TransformationTrace trace;
};

ReportResult fm_to_report(const ApplicationFeatureModel& app, const std::string& citizen_id = {},
                          const RuleSet& rules = default_report_rules());

} // namespace formweave
