#include <formweave/data_admin.hpp>

#include <algorithm>

#include <httplib.h>
#include <json.hpp>

namespace formweave {

DataAdminError::DataAdminError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}

std::string_view to_string(DataAdminError::Kind k) noexcept
{
    switch (k) {
    case DataAdminError::Kind::UnknownCitizen: return "unknown_citizen";
    case DataAdminError::Kind::UnknownFunction: return "unknown_function";
    case DataAdminError::Kind::Unavailable: return "unavailable";
    case DataAdminError::Kind::Transport: return "transport";
    }
    return "?";
}

namespace {

std::string scalar_text(const nlohmann::json& v, const std::string& where)
{
    if (v.is_string())
        return v.get<std::string>();
    if (v.is_boolean())
        return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer())
        return std::to_string(v.get<std::int64_t>());
    if (v.is_number())
        return v.dump();
    throw ParseError("fixtures: " + where + ": value must be a string, number or boolean");
}

} // namespace

FixtureStore parse_fixtures(std::string_view json_text, const std::vector<Service>& services)
{
    FixtureStore store;
    if (std::all_of(json_text.begin(), json_text.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); }))
        return store;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("fixtures: ") + e.what());
    }
    if (!j.is_object())
        throw ParseError("fixtures: top level must be an object");

    auto type_of = [&](const std::string& fn, const std::string& path) -> std::optional<ValueType> {
        for (const auto& s : services) {
            const auto* f = s.catalog.find(fn);
            if (!f || std::find(f->provides.begin(), f->provides.end(), path) == f->provides.end())
                continue;
            if (const Node* n = find_node(*s.family, path); n && n->attribute)
                return n->attribute->type;
        }
        return std::nullopt;
    };
    auto known_function = [&](const std::string& fn) {
        return std::any_of(services.begin(), services.end(), [&](const Service& s) { return s.catalog.find(fn); });
    };

    if (j.contains("citizens")) {
        if (!j["citizens"].is_object())
            throw ParseError("fixtures: citizens must be an object");
        for (const auto& [citizen, fns] : j["citizens"].items()) {
            auto& entry = store.citizens[citizen];
            if (!fns.is_object())
                throw ParseError("fixtures: " + citizen + ": must be an object");
            for (const auto& [fn, values] : fns.items()) {
                if (!known_function(fn))
                    throw ParseError("fixtures: " + citizen + ": function " + fn + " is not in any catalog");
                auto& out = entry[fn];
                for (const auto& [path, v] : values.items()) {
                    auto where = citizen + "." + fn + ": " + path;
                    auto type = type_of(fn, path);
                    if (!type)
                        throw ParseError("fixtures: " + where + " is not provided by " + fn + " in any catalog", 0, path);
                    auto text = scalar_text(v, where);
                    if (!Value::try_parse(*type, text))
                        throw ParseError("fixtures: " + where + ": '" + text + "' is not a valid "
                                             + std::string(to_string(*type)),
                                         0, path);
                    out[path] = text;
                }
            }
        }
    }
    if (j.contains("unavailable"))
        for (const auto& fn : j["unavailable"])
            store.unavailable.insert(fn.get<std::string>());
    return store;
}

FixtureStore load_fixtures(const std::filesystem::path& file, const std::vector<Service>& services)
{
    return parse_fixtures(read_file(file), services);
}

FixtureClient::FixtureClient(FixtureStore store, const std::vector<Service>& services) : store_(std::move(store))
{
    for (const auto& s : services)
        for (const auto& fn : s.catalog.functions)
            provides_[fn.name].insert(fn.provides.begin(), fn.provides.end());
}

FunctionValues FixtureClient::lookup(const std::string& name, const std::string& citizen_id) const
{
    if (!provides_.count(name))
        throw DataAdminError(DataAdminError::Kind::UnknownFunction, "unknown function " + name);
    if (store_.unavailable.count(name))
        throw DataAdminError(DataAdminError::Kind::Unavailable, name + " is unavailable");
    auto cit = store_.citizens.find(citizen_id);
    if (cit == store_.citizens.end())
        throw DataAdminError(DataAdminError::Kind::UnknownCitizen, "unknown citizen " + citizen_id);
    auto fit = cit->second.find(name);
    return fit == cit->second.end() ? FunctionValues{} : fit->second;
}

FunctionValues FixtureClient::invoke(const DataFunction& fn, const std::string& citizen_id,
                                     const FunctionValues&) const
{
    FunctionValues out;
    for (const auto& [path, v] : lookup(fn.name, citizen_id))
        if (std::find(fn.provides.begin(), fn.provides.end(), path) != fn.provides.end())
            out[path] = v;
    return out;
}

FunctionValues FixtureClient::invoke_by_name(const std::string& name, const std::string& citizen_id,
                                             const FunctionValues&) const
{
    auto all = lookup(name, citizen_id);
    const auto& allowed = provides_.at(name);
    FunctionValues out;
    for (const auto& [path, v] : all)
        if (allowed.count(path))
            out[path] = v;
    return out;
}

HttpDataAdminClient::HttpDataAdminClient(std::string host, int port) : host_(std::move(host)), port_(port) {}

FunctionValues HttpDataAdminClient::invoke(const DataFunction& fn, const std::string& citizen_id,
                                           const FunctionValues& inputs) const
{
    httplib::Client cli(host_, port_);
    cli.set_connection_timeout(5);
    cli.set_read_timeout(10);
    nlohmann::json body{{"citizenId", citizen_id}, {"inputs", inputs}};
    auto res = cli.Post("/functions/" + fn.name, body.dump(), "application/json");
    if (!res)
        throw DataAdminError(DataAdminError::Kind::Transport, "data administration unreachable: " + httplib::to_string(res.error()));
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception&) {
        throw DataAdminError(DataAdminError::Kind::Transport, "malformed response from data administration");
    }
    if (res->status != 200) {
        auto kind = j.value("error", std::string{});
        auto msg = j.value("message", kind);
        if (kind == "unknown_citizen")
            throw DataAdminError(DataAdminError::Kind::UnknownCitizen, msg);
        if (kind == "unknown_function")
            throw DataAdminError(DataAdminError::Kind::UnknownFunction, msg);
        if (kind == "unavailable")
            throw DataAdminError(DataAdminError::Kind::Unavailable, msg);
        throw DataAdminError(DataAdminError::Kind::Transport, "HTTP " + std::to_string(res->status));
    }
    FunctionValues out;
    if (j.contains("values") && j["values"].is_object())
        for (const auto& [path, v] : j["values"].items())
            if (v.is_string() && std::find(fn.provides.begin(), fn.provides.end(), path) != fn.provides.end())
                out[path] = v.get<std::string>();
    return out;
}

} // namespace formweave
