// formweave command-line tool: validate, generate, simulate, enumerate, serve.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include <formweave/enumerate.hpp>
#include <formweave/server.hpp>

using namespace formweave;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_domain = 1;
constexpr int exit_usage = 2;

std::filesystem::path default_catalog(const std::filesystem::path& model)
{
    auto name = model.filename().string();
    auto stem = name.ends_with(".fm.xml") ? name.substr(0, name.size() - 7) : model.stem().string();
    return model.parent_path() / (stem + ".catalog.json");
}

std::shared_ptr<const Service> service_from(const std::filesystem::path& model, const std::string& catalog)
{
    Service s;
    s.family = std::make_shared<const FeatureModel>(load_feature_model(model));
    auto cat = catalog.empty() ? default_catalog(model) : std::filesystem::path(catalog);
    if (std::filesystem::exists(cat)) {
        s.catalog = load_catalog(cat);
        auto diags = validate_catalog(s.catalog, *s.family);
        if (!diags.empty())
            throw ModelError(std::move(diags));
    } else if (!catalog.empty()) {
        throw IoError("cannot read " + catalog);
    } else {
        s.catalog.service = s.family->name();
    }
    return std::make_shared<const Service>(std::move(s));
}

// Fixture files are shared by every service in a directory.
std::vector<Service> fixture_services(const Service& service, const std::filesystem::path& model)
{
    std::vector<Service> out{service};
    auto dir = model.parent_path().empty() ? std::filesystem::path(".") : model.parent_path();
    for (const auto& s : load_service_directory(dir).services)
        if (s->name() != service.name())
            out.push_back(*s);
    return out;
}

void print_diagnostics(const std::vector<Diagnostic>& diags)
{
    for (const auto& d : diags)
        std::cerr << d.path << ": " << d.rule << ": " << d.message << '\n';
}

bool write_file(const std::filesystem::path& p, const std::string& text)
{
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f << text;
    return static_cast<bool>(f);
}

int cmd_validate(const std::string& file, bool strict_types)
{
    FeatureModel m;
    try {
        m = load_feature_model(file, false);
    } catch (const ModelError& e) {
        print_diagnostics(e.diagnostics());
        return exit_domain;
    } catch (const ParseError& e) {
        std::cerr << file << ": " << e.what() << '\n';
        return exit_usage;
    } catch (const IoError& e) {
        std::cerr << e.what() << '\n';
        return exit_usage;
    }
    auto diags = validate_model(m, {strict_types});
    print_diagnostics(diags);
    return diags.empty() ? exit_ok : exit_domain;
}

int cmd_generate(const std::string& file, const std::string& mode_name, const std::string& citizen,
                 const std::string& fixtures, const std::string& catalog, const std::string& out_dir)
{
    auto mode = generator_mode_from_string(mode_name);
    if (!mode || *mode == GeneratorMode::Runtime) {
        std::cerr << "generate: mode must be offline or initial\n";
        return exit_usage;
    }
    if (*mode == GeneratorMode::Initial && (citizen.empty() || fixtures.empty())) {
        std::cerr << "generate: initial mode needs --citizen and --fixtures\n";
        return exit_usage;
    }
    auto service = service_from(file, catalog);
    GeneratedForm form;
    if (*mode == GeneratorMode::Offline) {
        form = generate_offline(service->family);
    } else {
        auto all = fixture_services(*service, file);
        FixtureClient client(load_fixtures(fixtures, all), all);
        form = generate_initial(service, citizen, &client);
    }
    for (const auto& w : form.warnings)
        std::cerr << "warning: " << w << '\n';
    std::filesystem::create_directories(out_dir);
    const auto& page = form.application.pages.front();
    auto base = std::filesystem::path(out_dir) / page.id;
    if (!write_file(base.string() + ".html", render_html(page)) || !write_file(base.string() + ".json", page_to_wire(page))) {
        std::cerr << "generate: cannot write to " << out_dir << '\n';
        return exit_usage;
    }
    return exit_ok;
}

int cmd_simulate(const std::string& file, const std::string& catalog, const std::string& fixtures,
                 const std::string& answers_file, const std::string& mode_name, const std::string& trace_file,
                 const std::string& format_name)
{
    auto mode = generator_mode_from_string(mode_name);
    auto format = report_format_from_string(format_name);
    if (!mode || !format) {
        std::cerr << "simulate: bad --mode or --format\n";
        return exit_usage;
    }
    auto service = service_from(file, catalog);
    auto scripted = load_scripted_answers(answers_file);
    auto all = fixture_services(*service, file);
    FixtureStore store;
    if (!fixtures.empty())
        store = load_fixtures(fixtures, all);
    FixtureClient client(std::move(store), all);
    Session s;
    try {
        s = simulate(service, *mode, &client, scripted);
    } catch (const ValidationError& e) {
        for (const auto& f : e.errors())
            std::cerr << (f.name.empty() ? "" : f.name + ": ") << f.message << '\n';
        return exit_domain;
    }
    for (const auto& w : s.warnings)
        std::cerr << "warning: " << w << '\n';
    if (!trace_file.empty() && !write_file(trace_file, session_trace_json(s) + "\n")) {
        std::cerr << "simulate: cannot write " << trace_file << '\n';
        return exit_usage;
    }
    std::cout << render_report(*s.report, *format);
    return exit_ok;
}

int cmd_enumerate(const std::string& file, int bound, std::size_t ceiling)
{
    auto family = std::make_shared<const FeatureModel>(load_feature_model(file));
    std::vector<ApplicationFeatureModel> configs;
    try {
        configs = enumerate_configurations(family, {bound, ceiling});
    } catch (const EnumerationLimit& e) {
        std::cerr << e.what() << '\n';
        return exit_domain;
    }
    std::cout << configs.size() << '\n';
    for (const auto& c : configs) {
        std::string line;
        for (const auto& p : structure_key(c))
            line += (line.empty() ? "" : " ") + p;
        std::cout << line << '\n';
    }
    return exit_ok;
}

Server* running = nullptr;

void on_signal(int)
{
    if (running)
        running->stop();
}

int cmd_serve(int port, const std::string& services, const std::string& fixtures, const std::string& snapshot)
{
    ServerConfig cfg;
    cfg.services_dir = services;
    if (!fixtures.empty())
        cfg.fixtures = fixtures;
    if (!snapshot.empty())
        cfg.snapshot_file = snapshot;
    Server server(std::move(cfg));
    if (!server.bind("0.0.0.0", port)) {
        std::cerr << "serve: cannot bind port " << port << '\n';
        return exit_usage;
    }
    running = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << "listening on port " << port << '\n';
    server.listen_after_bind();
    running = nullptr;
    return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"formweave: e-form generation from feature models"};
    app.require_subcommand(1);

    std::string model, mode = "offline", citizen, fixtures, catalog, out_dir = ".", answers, trace, format = "text";
    std::string services_dir = "services", snapshot;
    bool strict_types = false;
    int bound = 2;
    std::size_t ceiling = 100000;
    int port = 8080;

    auto* validate = app.add_subcommand("validate", "check a feature model");
    validate->add_option("model", model, "model file")->required();
    validate->add_flag("--strict-types", strict_types, "reject boolean and date attributes");

    auto* generate = app.add_subcommand("generate", "write the first form page as HTML and JSON");
    generate->add_option("model", model, "model file")->required();
    generate->add_option("--mode", mode, "offline or initial");
    generate->add_option("--citizen", citizen, "citizen id for initial mode");
    generate->add_option("--fixtures", fixtures, "fixture file for initial mode");
    generate->add_option("--catalog", catalog, "function catalog (default: next to the model)");
    generate->add_option("--out", out_dir, "output directory");

    auto* sim = app.add_subcommand("simulate", "run a scripted session and print its report");
    sim->add_option("model", model, "model file")->required();
    sim->add_option("--catalog", catalog, "function catalog (default: next to the model)");
    sim->add_option("--fixtures", fixtures, "fixture file");
    sim->add_option("--answers", answers, "scripted answers file")->required();
    sim->add_option("--mode", mode, "offline, initial or runtime");
    sim->add_option("--trace", trace, "trace output file");
    sim->add_option("--format", format, "report format: text or xml");

    auto* enumerate = app.add_subcommand("enumerate", "list every configuration");
    enumerate->add_option("model", model, "model file")->required();
    enumerate->add_option("--bound", bound, "clone bound")->check(CLI::PositiveNumber);
    enumerate->add_option("--ceiling", ceiling, "maximum number of configurations");

    auto* serve = app.add_subcommand("serve", "run the HTTP session service");
    serve->add_option("--port", port, "port")->envname("FORMWEAVE_PORT");
    serve->add_option("--services-dir", services_dir, "services directory");
    serve->add_option("--fixtures", fixtures, "fixture file");
    serve->add_option("--snapshot-file", snapshot, "session snapshot file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*validate)
            return cmd_validate(model, strict_types);
        if (*generate)
            return cmd_generate(model, mode, citizen, fixtures, catalog, out_dir);
        if (*sim)
            return cmd_simulate(model, catalog, fixtures, answers, mode, trace, format);
        if (*enumerate)
            return cmd_enumerate(model, bound, ceiling);
        if (*serve)
            return cmd_serve(port, services_dir, fixtures, snapshot);
    } catch (const ModelError& e) {
        print_diagnostics(e.diagnostics());
        return exit_domain;
    } catch (const ParseError& e) {
        std::cerr << e.what() << '\n';
        return exit_usage;
    } catch (const IoError& e) {
        std::cerr << e.what() << '\n';
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return exit_domain;
    }
    return exit_usage;
}
