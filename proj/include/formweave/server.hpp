#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <formweave/interaction.hpp>

namespace formweave {

struct ServiceDirectory {
    std::vector<std::shared_ptr<const Service>> services;   // sorted by name
    std::vector<std::string> warnings;                      // files that failed to load
};

/// Every "<name>.fm.xml" directly in `dir` is a service; "shared/" only
/// holds referenced fragments. Broken services are skipped with a warning.
ServiceDirectory load_service_directory(const std::filesystem::path& dir);

struct ServerConfig {
    std::filesystem::path services_dir;
    std::optional<std::filesystem::path> fixtures;
    std::optional<std::filesystem::path> snapshot_file;
    std::function<void(const std::string&)> log;   // stderr when empty
};

/// HTTP session service:
///   GET  /services
///   POST /sessions                      {service, citizenId, mode}
///   GET  /sessions/{id}/page            JSON, or HTML with Accept: text/html
///   POST /sessions/{id}/answers         {answers: {name: value}}
///   GET  /sessions/{id}/report?format=xml|text
///   POST /functions/{name}              {citizenId, inputs} -> {values}
/// Requests for one session are serialized; distinct sessions run
/// concurrently. With a snapshot file the store is reloaded at construction
/// and rewritten after every change.
class Server {
public:
    explicit Server(ServerConfig config);
    ~Server();

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    const std::vector<std::string>& warnings() const;

    /// Binds to a free port and returns it.
    int bind_to_any_port(const std::string& host = "127.0.0.1");
    bool bind(const std::string& host, int port);
    /// Blocks until stop().
    bool listen_after_bind();
    void stop();
    void wait_until_ready() const;

    std::string snapshot_json() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Session store contents as JSON, and back. Sessions whose service is no
/// longer known are dropped on restore.
std::string sessions_to_json(const std::vector<const Session*>& sessions);
std::vector<Session> sessions_from_json(std::string_view json_text,
                                        const std::vector<std::shared_ptr<const Service>>& services);

} // namespace formweave
