#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include <formweave/data_admin.hpp>
#include <formweave/transform.hpp>
#include <formweave/workflow.hpp>

namespace formweave {

enum class GeneratorMode { Offline, Initial, Runtime };

std::string_view to_string(GeneratorMode m) noexcept;
std::optional<GeneratorMode> generator_mode_from_string(std::string_view s) noexcept;

enum class Phase { Collecting, Complete, Reported };

std::string_view to_string(Phase p) noexcept;
std::optional<Phase> phase_from_string(std::string_view s) noexcept;

/// Operation not allowed in the session's current phase.
class PhaseError : public Error {
public:
    using Error::Error;
};

struct HistoryEntry {
    Page page;
    Answers answers;
};

struct Session {
    std::string id;
    std::shared_ptr<const Service> service;
    std::string citizen_id;
    GeneratorMode mode = GeneratorMode::Offline;
    ApplicationFeatureModel app;
    std::vector<HistoryEntry> history;
    InvocationHistory invoked;
    std::map<std::string, std::string> prefills;   // instance path -> text
    Phase phase = Phase::Collecting;
    std::vector<std::string> warnings;
    std::optional<FormPlan> current;                // set while collecting
    std::optional<Report> report;                   // set once reported
    int pages_issued = 0;
    nlohmann::ordered_json events = nlohmann::ordered_json::array();
};

/// Fresh configuration, then the first page. Initial mode invokes the single
/// highest-yield function once and keeps its values as prefills; a failure
/// there becomes a warning. Runtime mode follows the workflow strategy,
/// invoking functions until the user must be asked; a data-administration
/// failure during start is rethrown (DataAdminError). `client` may be null
/// when no function is ever called.
Session session_start(std::shared_ptr<const Service> service, std::string citizen_id, GeneratorMode mode,
                      const DataAdminClient* client);

/// Throws PhaseError unless collecting.
const Page& session_page(const Session& s);

/// Applies the answers to the current page and advances. On ValidationError
/// the session is unchanged. Throws PhaseError unless collecting.
void session_submit(Session& s, const Answers& answers, const DataAdminClient* client);

/// Builds the report once (phase becomes reported); later calls return the
/// same report. Throws IncompleteError while collecting.
const Report& session_report(Session& s);

/// Rebuilds `current` for a collecting session whose model was restored
/// from storage. Functions are not invoked.
void session_resume(Session& s);

struct GeneratedForm {
    WebApplication application;
    FormPlan plan;
    std::vector<std::string> warnings;
};

/// The complete form of a fresh configuration, no data calls.
GeneratedForm generate_offline(std::shared_ptr<const FeatureModel> family);

/// The offline form with prefills from one pre-pass call.
GeneratedForm generate_initial(std::shared_ptr<const Service> service, const std::string& citizen_id,
                               const DataAdminClient* client);

/// Answers keyed by widget name, as read from a scripted source file:
/// {"answersByName": {...}, "citizenId": "..."}.
struct ScriptedAnswers {
    Answers answers_by_name;
    std::string citizen_id;
};

ScriptedAnswers parse_scripted_answers(std::string_view json_text);
ScriptedAnswers load_scripted_answers(const std::filesystem::path& file);

/// Answers for the inputs of `page`: the scripted value when there is one,
/// else the widget's prefill. Radio answers outside the offered options are
/// dropped and checkbox sets are cut down to the offered options. An
/// optional-feature checkbox is ticked when its name has a non-empty value.
Answers answer_page(const Page& page, const ScriptedAnswers& scripted);

/// Runs a whole session from scripted answers and produces its report.
/// Throws ValidationError when the script misses a required field.
Session simulate(std::shared_ptr<const Service> service, GeneratorMode mode, const DataAdminClient* client,
                 const ScriptedAnswers& scripted);

/// {"traceVersion": 1, "service", "mode", "citizenId", "events": [...]}.
std::string session_trace_json(const Session& s);

} // namespace formweave
