// animate: interactive symbolic animator for the bundled protocol models.
//
//   animate --model NSPK3                 interactive
//   animate --model NSPK3 --script f.txt  run commands from a file
//   animate --model NSPK3 --json          one JSON message per line
//   animate serve --port 7070 | --stdio   line-delimited JSON service

#include "dyanim/server.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

using dyanim::facade::AnimatorSession;
using dyanim::facade::ServiceOptions;
using dyanim::facade::WireMessage;

std::string model_names_text()
{
    std::string out;
    for (const auto& n : dyanim::proto::model_names()) out += (out.empty() ? "" : ", ") + n;
    return out;
}

int animate(const std::string& model_name, const std::optional<std::string>& script, bool as_json,
            const ServiceOptions& options)
{
    auto model = dyanim::proto::make_model(model_name);
    if (!model) {
        std::cerr << "unknown model '" << model_name << "'; available models: " << model_names_text() << "\n";
        return 2;
    }

    std::ifstream file;
    if (script) {
        file.open(*script);
        if (!file) {
            std::cerr << "cannot open script '" << *script << "'\n";
            return 1;
        }
    }
    std::istream& in = script ? static_cast<std::istream&>(file) : std::cin;

    bool failed = false;
    auto emit = [&](const WireMessage& m) {
        if (m.kind == dyanim::wire::kind::error) failed = true;
        if (as_json) {
            std::cout << m.dump() << "\n";
        } else {
            std::cout << dyanim::facade::text::format(m);
        }
        std::cout << std::flush;
    };

    ServiceOptions opts = options;
    if (script && opts.base_dir.empty()) opts.base_dir = std::filesystem::path{*script}.parent_path();
    AnimatorSession session{std::move(*model), opts};

    if (!as_json) std::cout << "Starting ITree Animation...\n";
    emit(session.view());

    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (script) {
            if (line.empty() || line.front() == '#') continue;
            if (!as_json) std::cout << line << "\n";
        }
        if (line.empty()) {
            emit(session.view());
            continue;
        }
        failed = false;
        bool go_on = session.execute_line(line, emit);
        if (script && failed) {
            std::cerr << *script << ":" << n << ": command failed: " << line << "\n";
            return 1;
        }
        if (!go_on) break;
    }
    if (!as_json) std::cout << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Symbolic animator for security protocols under a Dolev-Yao intruder"};
    app.require_subcommand(0, 1);

    std::string model;
    std::optional<std::string> script;
    bool as_json = false;
    std::optional<std::size_t> depth_budget;
    unsigned jobs = 1;

    app.add_option("--model", model, "Protocol model: " + model_names_text());
    app.add_option("--script", script, "Read commands from a file; stop at the first failing command");
    app.add_flag("--json", as_json, "Print one JSON wire message per line");
    app.add_option("--depth-budget", depth_budget, "Refuse searches deeper than this");
    app.add_option("--jobs", jobs, "Worker threads for searches")->check(CLI::Range(1u, 256u));

    CLI::App* serve = app.add_subcommand("serve", "Run the line-delimited JSON service");
    std::uint16_t port = 7070;
    bool stdio = false;
    serve->add_option("--port", port, "TCP port on 127.0.0.1 (0 picks one)");
    serve->add_flag("--stdio", stdio, "Serve a single client on stdin/stdout");
    serve->add_option("--depth-budget", depth_budget, "Refuse searches deeper than this");
    serve->add_option("--jobs", jobs, "Worker threads for searches")->check(CLI::Range(1u, 256u));

    CLI11_PARSE(app, argc, argv);

    ServiceOptions options;
    options.depth_budget = depth_budget;
    options.workers = jobs;

    try {
        if (serve->parsed()) {
            if (stdio) {
                dyanim::facade::serve_stream(std::cin, std::cout, options);
                return 0;
            }
            dyanim::facade::TcpServer server{options};
            std::uint16_t bound = server.listen(port);
            std::cout << "listening on 127.0.0.1:" << bound << std::endl;
            server.run();
            return 0;
        }
        if (model.empty()) {
            std::cerr << "--model is required; available models: " << model_names_text() << "\n";
            return 2;
        }
        return animate(model, script, as_json, options);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
