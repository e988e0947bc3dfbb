// Command-line front end: run / validate scenario files, parse queries.
//
// Exit codes: 0 ok, 1 scenario error (also: validation findings), 2 query
// error (syntax/validation, and --strict unresolved streams).

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "semstream/errors.hpp"
#include "semstream/query.hpp"
#include "semstream/scenario.hpp"

namespace fs = std::filesystem;
using namespace semstream;

namespace {

int doRun(const std::string& path, bool strict, std::int64_t seed, const std::string& outDir,
          const std::string& modeName) {
    Scenario scenario = loadScenario(path);
    if (seed >= 0)
        scenario.seed = static_cast<std::uint64_t>(seed);
    const RunMode mode = modeName == "threaded" ? RunMode::Threaded : RunMode::Reference;

    const RunReport report = runScenario(scenario, mode);

    for (const auto& [rel, content] : report.outputs) {
        const fs::path target = fs::path(outDir) / rel;
        fs::create_directories(target.parent_path());
        std::ofstream out(target, std::ios::binary);
        if (!out)
            throw ScenarioError("cannot write " + target.string());
        out << content;
    }
    std::cout << path << ": published=" << report.broker.published
              << " delivered=" << report.broker.delivered << " -> " << outDir << "\n";

    if (strict && !report.unresolved.empty()) {
        for (const std::string& line : report.unresolved)
            std::cerr << "unresolved: " << line << "\n";
        return 2;
    }
    return 0;
}

int doValidate(const std::string& path) {
    const std::vector<std::string> problems = validateScenario(path);
    for (const std::string& p : problems)
        std::cout << p << "\n";
    return problems.empty() ? 0 : 1;
}

int doParse(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ScenarioError("cannot read query file " + path);
    std::ostringstream text;
    text << in.rdbuf();
    std::cout << toDebugString(parseQuery(text.str()));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"semantic stream scenarios: run, validate, inspect"};
    app.require_subcommand(1);

    std::string scenarioPath;
    std::string queryPath;
    std::string outDir = ".";
    std::string modeName = "ref";
    std::int64_t seed = -1;
    bool strict = false;

    CLI::App* run = app.add_subcommand("run", "execute a scenario and write its outputs");
    run->add_option("file", scenarioPath, "scenario file")->required();
    run->add_flag("--strict", strict, "exit 2 when a ground stream selector never resolves");
    run->add_option("--seed", seed, "override run.seed");
    run->add_option("--out", outDir, "output directory (created if missing)");
    run->add_option("--mode", modeName, "scheduler mode")
        ->check(CLI::IsMember({"ref", "threaded"}));

    CLI::App* validate = app.add_subcommand("validate", "check a scenario without running it");
    validate->add_option("file", scenarioPath, "scenario file")->required();

    CLI::App* parse = app.add_subcommand("parse", "parse one query file and print its AST");
    parse->add_option("file", queryPath, "query file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return doRun(scenarioPath, strict, seed, outDir, modeName);
        if (validate->parsed())
            return doValidate(scenarioPath);
        return doParse(queryPath);
    } catch (const QuerySyntaxError& e) {
        std::cerr << "query error: " << e.what() << "\n";
        return 2;
    } catch (const QueryValidationError& e) {
        std::cerr << "query error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
