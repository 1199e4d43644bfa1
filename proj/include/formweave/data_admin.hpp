#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <formweave/workflow.hpp>

namespace formweave {

class DataAdminError : public Error {
public:
    enum class Kind { UnknownCitizen, UnknownFunction, Unavailable, Transport };

    DataAdminError(Kind kind, const std::string& message);
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

std::string_view to_string(DataAdminError::Kind k) noexcept;

/// Seam to the data administration. Implementations return only paths in
/// `fn.provides`.
class DataAdminClient {
public:
    virtual ~DataAdminClient() = default;
    virtual FunctionValues invoke(const DataFunction& fn, const std::string& citizen_id,
                                  const FunctionValues& inputs) const = 0;
};

/// citizen -> function -> path -> lexical value, plus functions that fail
/// as unavailable.
struct FixtureStore {
    std::map<std::string, std::map<std::string, FunctionValues>> citizens;
    std::set<std::string> unavailable;
};

/// {"citizens": {"C1": {"fn": {"path": value}}}, "unavailable": ["fn"]}.
/// Values may be JSON strings, numbers or booleans. Each path must be
/// provided by the same-named function of some service and parse under the
/// node's type. An empty document is an empty store.
FixtureStore parse_fixtures(std::string_view json_text, const std::vector<Service>& services);
FixtureStore load_fixtures(const std::filesystem::path& file, const std::vector<Service>& services);

class FixtureClient : public DataAdminClient {
public:
    /// Function names known to the backend are those of `services`.
    FixtureClient(FixtureStore store, const std::vector<Service>& services);

    FunctionValues invoke(const DataFunction& fn, const std::string& citizen_id,
                          const FunctionValues& inputs) const override;

    /// Values for a function known only by name: filtered to the union of
    /// `provides` across services.
    FunctionValues invoke_by_name(const std::string& name, const std::string& citizen_id,
                                  const FunctionValues& inputs) const;

    const FixtureStore& store() const noexcept { return store_; }

private:
    FunctionValues lookup(const std::string& name, const std::string& citizen_id) const;

    FixtureStore store_;
    std::map<std::string, std::set<std::string>> provides_;   // function -> union of provided paths
};

/// Calls POST /functions/{name} with {citizenId, inputs} and reads
/// {values}. 404 and 503 bodies map to the error kinds; anything else is a
/// transport error.
class HttpDataAdminClient : public DataAdminClient {
public:
    HttpDataAdminClient(std::string host, int port);

    FunctionValues invoke(const DataFunction& fn, const std::string& citizen_id,
                          const FunctionValues& inputs) const override;

private:
    std::string host_;
    int port_;
};

} // namespace formweave
