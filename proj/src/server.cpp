#include <formweave/server.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>

#include <httplib.h>
#include <json.hpp>

namespace formweave {

using ojson = nlohmann::ordered_json;

ServiceDirectory load_service_directory(const std::filesystem::path& dir)
{
    ServiceDirectory out;
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) {
        out.warnings.push_back(dir.string() + ": not a directory");
        return out;
    }
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        auto name = e.path().filename().string();
        if (e.is_regular_file() && name.size() > 7 && name.ends_with(".fm.xml"))
            files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        try {
            out.services.push_back(std::make_shared<const Service>(load_service(f)));
        } catch (const std::exception& e) {
            out.warnings.push_back(f.filename().string() + ": " + e.what());
        }
    }
    std::sort(out.services.begin(), out.services.end(), [](const auto& a, const auto& b) { return a->name() < b->name(); });
    return out;
}

// -- snapshots ----------------------------------------------------------------

std::string sessions_to_json(const std::vector<const Session*>& sessions)
{
    ojson arr = ojson::array();
    for (const auto* s : sessions) {
        ojson history = ojson::array();
        for (const auto& h : s->history)
            history.push_back({{"page", ojson::parse(page_to_wire(h.page))}, {"answers", h.answers}});
        arr.push_back({{"id", s->id},
                       {"service", s->service->name()},
                       {"citizenId", s->citizen_id},
                       {"mode", to_string(s->mode)},
                       {"phase", to_string(s->phase)},
                       {"pagesIssued", s->pages_issued},
                       {"model", serialize_application_model(s->app)},
                       {"invoked", s->invoked},
                       {"prefills", s->prefills},
                       {"warnings", s->warnings},
                       {"history", history},
                       {"events", s->events}});
    }
    return ojson{{"version", 1}, {"sessions", arr}}.dump(2);
}

std::vector<Session> sessions_from_json(std::string_view json_text,
                                        const std::vector<std::shared_ptr<const Service>>& services)
{
    std::vector<Session> out;
    ojson j;
    try {
        j = ojson::parse(json_text);
    } catch (const ojson::exception& e) {
        throw ParseError(std::string("snapshot: ") + e.what());
    }
    for (const auto& js : j.at("sessions")) {
        auto name = js.at("service").get<std::string>();
        auto it = std::find_if(services.begin(), services.end(), [&](const auto& s) { return s->name() == name; });
        if (it == services.end())
            continue;
        Session s;
        s.id = js.at("id").get<std::string>();
        s.service = *it;
        s.citizen_id = js.value("citizenId", std::string{});
        auto mode = generator_mode_from_string(js.at("mode").get<std::string>());
        auto phase = phase_from_string(js.at("phase").get<std::string>());
        if (!mode || !phase)
            throw ParseError("snapshot: bad mode or phase for session " + s.id);
        s.mode = *mode;
        s.phase = *phase;
        s.pages_issued = js.value("pagesIssued", 0);
        s.app = parse_application_model(js.at("model").get<std::string>());
        if (!(*s.app.family == *s.service->family))
            continue;   // the service changed since the snapshot
        s.app.family = s.service->family;
        s.invoked = js.value("invoked", std::set<std::string>{});
        s.prefills = js.value("prefills", std::map<std::string, std::string>{});
        s.warnings = js.value("warnings", std::vector<std::string>{});
        for (const auto& h : js.value("history", ojson::array()))
            s.history.push_back({page_from_wire(h.at("page").dump()), h.at("answers").get<Answers>()});
        s.events = js.value("events", ojson::array());
        session_resume(s);
        if (s.phase == Phase::Reported)
            s.report = fm_to_report(s.app, s.citizen_id).report;
        out.push_back(std::move(s));
    }
    return out;
}

// -- server -------------------------------------------------------------------

namespace {

struct SessionSlot {
    std::mutex mutex;
    Session session;
};

std::string random_id()
{
    static std::mutex m;
    static std::random_device rd;
    std::lock_guard lock(m);
    static const char* hex = "0123456789abcdef";
    std::string id;
    for (int i = 0; i < 4; ++i) {
        auto v = rd();
        for (int k = 0; k < 8; ++k) {
            id += hex[v & 0xf];
            v >>= 4;
        }
    }
    return id;
}

void send_json(httplib::Response& res, int status, const ojson& body)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message)
{
    send_json(res, status, {{"error", message}});
}

std::string text_of(const ojson& v)
{
    if (v.is_string())
        return v.get<std::string>();
    if (v.is_boolean())
        return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer())
        return std::to_string(v.get<std::int64_t>());
    if (v.is_number())
        return v.dump();
    throw Error("answer values must be strings, numbers or booleans");
}

ojson page_body(const Session& s)
{
    if (s.phase != Phase::Collecting)
        return {{"phase", to_string(s.phase)}, {"warnings", s.warnings}};
    auto j = ojson::parse(page_to_wire(session_page(s)));
    j["phase"] = to_string(s.phase);
    j["warnings"] = s.warnings;
    return j;
}

} // namespace

struct Server::Impl {
    ServerConfig config;
    ServiceDirectory directory;
    std::unique_ptr<FixtureClient> client;
    httplib::Server http;

    mutable std::mutex store_mutex;
    std::map<std::string, std::shared_ptr<SessionSlot>> sessions;
    std::mutex snapshot_mutex;

    void log(const std::string& line) const
    {
        if (config.log)
            config.log(line);
        else
            std::cerr << line << '\n';
    }

    std::shared_ptr<const Service> service(const std::string& name) const
    {
        for (const auto& s : directory.services)
            if (s->name() == name)
                return s;
        return nullptr;
    }

    std::shared_ptr<SessionSlot> slot(const std::string& id) const
    {
        std::lock_guard lock(store_mutex);
        auto it = sessions.find(id);
        return it == sessions.end() ? nullptr : it->second;
    }

    std::string snapshot() const
    {
        std::vector<std::shared_ptr<SessionSlot>> slots;
        {
            std::lock_guard lock(store_mutex);
            for (const auto& [_, s] : sessions)
                slots.push_back(s);
        }
        std::vector<Session> copies;
        copies.reserve(slots.size());
        for (const auto& s : slots) {
            std::lock_guard lock(s->mutex);
            copies.push_back(s->session);
        }
        std::vector<const Session*> ptrs;
        for (const auto& c : copies)
            ptrs.push_back(&c);
        return sessions_to_json(ptrs);
    }

    void save()
    {
        if (!config.snapshot_file)
            return;
        std::lock_guard lock(snapshot_mutex);
        auto tmp = *config.snapshot_file;
        tmp += ".tmp";
        {
            std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
            f << snapshot();
            if (!f) {
                log("snapshot: cannot write " + tmp.string());
                return;
            }
        }
        std::error_code ec;
        std::filesystem::rename(tmp, *config.snapshot_file, ec);
        if (ec)
            log("snapshot: " + ec.message());
    }

    void restore()
    {
        if (!config.snapshot_file || !std::filesystem::exists(*config.snapshot_file))
            return;
        try {
            for (auto& s : sessions_from_json(read_file(*config.snapshot_file), directory.services)) {
                auto slot = std::make_shared<SessionSlot>();
                auto id = s.id;
                slot->session = std::move(s);
                sessions[id] = slot;
            }
            log("restored " + std::to_string(sessions.size()) + " sessions");
        } catch (const std::exception& e) {
            log(std::string("snapshot ignored: ") + e.what());
        }
    }

    void routes();
};

void Server::Impl::routes()
{
    http.Get("/services", [this](const httplib::Request&, httplib::Response& res) {
        ojson arr = ojson::array();
        for (const auto& s : directory.services)
            arr.push_back({{"serviceName", s->name()}, {"title", s->family->title()}});
        send_json(res, 200, arr);
    });

    http.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
        ojson body;
        try {
            body = ojson::parse(req.body);
        } catch (const ojson::exception&) {
            return send_error(res, 400, "body is not JSON");
        }
        if (!body.is_object() || !body.contains("service") || !body["service"].is_string())
            return send_error(res, 400, "service is required");
        auto mode = generator_mode_from_string(body.value("mode", std::string{}));
        if (!mode)
            return send_error(res, 400, "mode must be offline, initial or runtime");
        auto svc = service(body["service"].get<std::string>());
        if (!svc)
            return send_error(res, 404, "unknown service " + body["service"].get<std::string>());
        std::string citizen = body.contains("citizenId") && body["citizenId"].is_string()
                                  ? body["citizenId"].get<std::string>()
                                  : std::string{};
        auto slot = std::make_shared<SessionSlot>();
        try {
            slot->session = session_start(svc, citizen, *mode, client.get());
        } catch (const DataAdminError& e) {
            return send_error(res, 502, e.what());
        }
        auto id = random_id();
        slot->session.id = id;
        ojson out{{"sessionId", id}, {"phase", to_string(slot->session.phase)}, {"warnings", slot->session.warnings}};
        {
            std::lock_guard lock(store_mutex);
            sessions[id] = slot;
        }
        save();
        send_json(res, 201, out);
    });

    http.Get(R"(/sessions/([0-9a-f]+)/page)", [this](const httplib::Request& req, httplib::Response& res) {
        auto s = slot(req.matches[1]);
        if (!s)
            return send_error(res, 404, "unknown session");
        std::lock_guard lock(s->mutex);
        bool html = req.get_header_value("Accept").find("text/html") != std::string::npos;
        if (!html)
            return send_json(res, 200, page_body(s->session));
        if (s->session.phase == Phase::Collecting) {
            res.set_content(render_html(session_page(s->session)), "text/html; charset=utf-8");
        } else {
            Page done{"complete", s->session.service->family->title(), {Output{"The form is complete."}}, {}};
            res.set_content(render_html(done), "text/html; charset=utf-8");
        }
    });

    http.Post(R"(/sessions/([0-9a-f]+)/answers)", [this](const httplib::Request& req, httplib::Response& res) {
        auto s = slot(req.matches[1]);
        if (!s)
            return send_error(res, 404, "unknown session");
        Answers answers;
        try {
            auto body = ojson::parse(req.body);
            const auto& a = body.contains("answers") ? body["answers"] : body;
            if (!a.is_object())
                return send_error(res, 400, "answers must be an object");
            for (const auto& [k, v] : a.items())
                answers[k] = text_of(v);
        } catch (const std::exception& e) {
            return send_error(res, 400, std::string("bad answers: ") + e.what());
        }
        {
            std::lock_guard lock(s->mutex);
            auto& session = s->session;
            if (session.phase != Phase::Collecting)
                return send_error(res, 409, "session is " + std::string(to_string(session.phase)));
            try {
                session_submit(session, answers, client.get());
            } catch (const ValidationError& e) {
                Page annotated = session_page(session);
                ojson errors = ojson::object();
                for (const auto& f : e.errors()) {
                    annotated.errors[f.name] = f.message;
                    errors[f.name] = f.message;
                }
                return send_json(res, 422, {{"errors", errors}, {"page", ojson::parse(page_to_wire(annotated))}});
            } catch (const Error& e) {
                return send_error(res, 500, e.what());
            }
            send_json(res, 200, page_body(session));
        }
        save();
    });

    http.Get(R"(/sessions/([0-9a-f]+)/report)", [this](const httplib::Request& req, httplib::Response& res) {
        auto s = slot(req.matches[1]);
        if (!s)
            return send_error(res, 404, "unknown session");
        auto fmt = report_format_from_string(req.has_param("format") ? req.get_param_value("format") : "xml");
        if (!fmt)
            return send_error(res, 400, "format must be xml or text");
        bool changed = false;
        {
            std::lock_guard lock(s->mutex);
            try {
                changed = s->session.phase != Phase::Reported;
                const auto& r = session_report(s->session);
                res.set_content(render_report(r, *fmt),
                                *fmt == ReportFormat::Xml ? "application/xml" : "text/plain; charset=utf-8");
            } catch (const IncompleteError& e) {
                return send_json(res, 409, {{"error", "session is not complete"}, {"openItems", e.open_paths()}});
            }
        }
        if (changed)
            save();
    });

    http.Post(R"(/functions/([A-Za-z_][A-Za-z0-9_]*))", [this](const httplib::Request& req, httplib::Response& res) {
        std::string citizen;
        FunctionValues inputs;
        try {
            auto body = ojson::parse(req.body);
            citizen = body.value("citizenId", std::string{});
            if (body.contains("inputs"))
                for (const auto& [k, v] : body["inputs"].items())
                    inputs[k] = text_of(v);
        } catch (const std::exception& e) {
            return send_error(res, 400, std::string("bad request: ") + e.what());
        }
        try {
            auto values = client->invoke_by_name(req.matches[1], citizen, inputs);
            send_json(res, 200, {{"values", values}});
        } catch (const DataAdminError& e) {
            int status = e.kind() == DataAdminError::Kind::Unavailable ? 503 : 404;
            send_json(res, status, {{"error", to_string(e.kind())}, {"message", e.what()}});
        }
    });
}

Server::Server(ServerConfig config) : impl_(std::make_unique<Impl>())
{
    impl_->config = std::move(config);
    impl_->directory = load_service_directory(impl_->config.services_dir);
    for (const auto& w : impl_->directory.warnings)
        impl_->log("warning: " + w);
    std::vector<Service> plain;
    for (const auto& s : impl_->directory.services)
        plain.push_back(*s);
    FixtureStore store;
    if (impl_->config.fixtures)
        store = load_fixtures(*impl_->config.fixtures, plain);
    impl_->client = std::make_unique<FixtureClient>(std::move(store), plain);
    impl_->restore();
    impl_->routes();
}

Server::~Server() { stop(); }

const std::vector<std::string>& Server::warnings() const { return impl_->directory.warnings; }

int Server::bind_to_any_port(const std::string& host) { return impl_->http.bind_to_any_port(host); }

bool Server::bind(const std::string& host, int port) { return impl_->http.bind_to_port(host, port); }

bool Server::listen_after_bind() { return impl_->http.listen_after_bind(); }

void Server::stop()
{
    if (impl_->http.is_running())
        impl_->http.stop();
}

void Server::wait_until_ready() const { impl_->http.wait_until_ready(); }

std::string Server::snapshot_json() const { return impl_->snapshot(); }

} // namespace formweave
