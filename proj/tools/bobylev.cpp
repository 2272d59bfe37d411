#include <omp.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "bobylev/errors.hpp"
#include "bobylev/lab.hpp"

namespace {

// Exit codes: 0 all checks pass, 1 a check failed, 2 bad input, 3 a hypothesis
// gate rejected the data, 4 a numerical failure.
enum Exit { ok = 0, check_failed = 1, bad_input = 2, hypothesis = 3, numerical = 4 };

void cap_threads() {
    if (const char* env = std::getenv("BOBYLEV_THREADS")) {
        char* end = nullptr;
        const long n = std::strtol(env, &end, 10);
        if (*env == '\0' || *end != '\0' || n < 1) throw bobylev::ConfigError("BOBYLEV_THREADS must be a positive integer");
        omp_set_num_threads(static_cast<int>(n));
    }
}

bool kind_allowed(const std::string& cmd, bobylev::ExperimentKind k) {
    using K = bobylev::ExperimentKind;
    if (cmd == "constants") return k == K::constants_report;
    if (cmd == "converge") return k == K::cutoff_limits || k == K::deviator_sweep;
    if (cmd == "selfsim") return k == K::selfsim;
    if (cmd == "evolve") return k == K::evolve;
    return k == K::theorem_1_1 || k == K::theorem_1_2 || k == K::corollary_1_3;
}

void write_rejection(const std::string& out, const bobylev::ScenarioConfig& cfg, const std::string& hyp,
                     const std::string& what) {
    std::filesystem::create_directories(out);
    std::ofstream os(std::filesystem::path(out) / "summary.txt");
    os << "kind = " << bobylev::kind_name(cfg.kind) << "\n"
       << "name = " << cfg.name << "\n"
       << "hypothesis_violated = " << hyp << "\n"
       << "detail = " << what << "\n"
       << "passed = false\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fourier-space Boltzmann flows for Maxwell molecules"};
    app.require_subcommand(1);
    std::string config, out;
    const char* names[] = {"constants", "evolve", "selfsim", "converge", "verify"};
    const char* help[] = {"kernel constants report", "evolve a characteristic function",
                          "construct a self-similar profile", "cutoff and deviator convergence sweeps",
                          "check a decay or stability statement"};
    for (int j = 0; j < 5; ++j) {
        auto* sub = app.add_subcommand(names[j], help[j]);
        sub->add_option("--config", config, "scenario file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory")->required();
    }
    CLI11_PARSE(app, argc, argv);
    const std::string cmd = app.get_subcommands().front()->get_name();

    bobylev::ScenarioConfig cfg;
    try {
        cap_threads();
        cfg = bobylev::load_scenario_file(config);
        if (!kind_allowed(cmd, cfg.kind))
            throw bobylev::ConfigError("kind '" + bobylev::kind_name(cfg.kind) + "' does not belong to '" + cmd + "'");
    } catch (const bobylev::Error& e) {
        std::cerr << "bobylev: " << e.what() << "\n";
        return bad_input;
    }
    try {
        const bobylev::Report rep = bobylev::run_scenario(cfg);
        bobylev::emit_report(rep, out);
        for (const auto& c : rep.checks)
            std::printf("%-4s %s  %s\n", c.pass ? "ok" : "FAIL", c.name.c_str(), c.detail.c_str());
        return rep.passed() ? ok : check_failed;
    } catch (const bobylev::HypothesisError& e) {
        write_rejection(out, cfg, e.name, e.what());
        std::cerr << "bobylev: hypothesis not satisfied: " << e.what() << "\n";
        return hypothesis;
    } catch (const bobylev::ConfigError& e) {
        std::cerr << "bobylev: " << e.what() << "\n";
        return bad_input;
    } catch (const bobylev::Error& e) {
        std::cerr << "bobylev: " << e.what() << "\n";
        return numerical;
    }
}
