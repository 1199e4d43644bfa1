#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <formweave/configuration.hpp>

namespace formweave {

/// A data-administration function: which attribute values it needs and
/// which it can fill. Paths are family paths outside multi-instance subtrees.
struct DataFunction {
    std::string name;
    std::vector<std::string> inputs;
    std::vector<std::string> provides;

    friend bool operator==(const DataFunction&, const DataFunction&) = default;
};

struct FunctionCatalog {
    std::string service;
    std::vector<DataFunction> functions;

    const DataFunction* find(std::string_view name) const;
};

/// {"service": ..., "functions": [{"name", "inputs": [...], "provides": [...]}]}
FunctionCatalog parse_catalog(std::string_view json_text);
FunctionCatalog load_catalog(const std::filesystem::path& file);

/// Rule ids: catalog-service, function-duplicate, function-name,
/// path-unresolved, path-in-clone-subtree, path-no-attribute,
/// input-provided-overlap.
std::vector<Diagnostic> validate_catalog(const FunctionCatalog& cat, const FeatureModel& family);

/// A family model with its function catalog. Catalog-less services get an
/// empty catalog.
struct Service {
    std::shared_ptr<const FeatureModel> family;
    FunctionCatalog catalog;

    const std::string& name() const { return family->name(); }
};

/// Loads "<dir>/<name>.fm.xml" plus "<dir>/<name>.catalog.json" when present;
/// throws ModelError / ParseError / Error on invalid input.
Service load_service(const std::filesystem::path& model_file);

using InvocationHistory = std::set<std::string>;

namespace step {
struct AskUser { std::vector<OpenItem> items; };
struct CallFunction { std::string function; };
struct Finish {};
} // namespace step

using WorkflowStep = std::variant<step::AskUser, step::CallFunction, step::Finish>;

std::string describe(const WorkflowStep& s);

bool inputs_satisfied(const ApplicationFeatureModel& app, const DataFunction& fn);

/// 0 when invoked before or inputs are missing; otherwise the number of
/// provided paths that are open value items.
int yield_of(const ApplicationFeatureModel& app, const DataFunction& fn, const InvocationHistory& history);

class WorkflowStrategy {
public:
    virtual ~WorkflowStrategy() = default;
    virtual WorkflowStep next(const ApplicationFeatureModel& app, const FunctionCatalog& cat,
                              const InvocationHistory& history) const = 0;
};

/// Mandatory items no function can still fill first, then the
/// highest-yield invocable function (ties by name), then optional items.
class FixedStrategy : public WorkflowStrategy {
public:
    WorkflowStep next(const ApplicationFeatureModel& app, const FunctionCatalog& cat,
                      const InvocationHistory& history) const override;
};

WorkflowStep plan_next(const ApplicationFeatureModel& app, const FunctionCatalog& cat, const InvocationHistory& history);

/// Values returned by a data-administration call, as lexical text.
using FunctionValues = std::map<std::string, std::string>;

struct ApplyResult {
    ApplicationFeatureModel app;
    std::vector<std::string> notices;   // skipped values
};

/// Sets each returned value whose node is selected and unset. Values for
/// other nodes are skipped with a notice. Throws LexicalError on a value
/// that does not fit the node's type, Error on a path outside `provides`.
ApplyResult apply_function_result(const ApplicationFeatureModel& app, const DataFunction& fn,
                                  const FunctionValues& result);

} // namespace formweave
