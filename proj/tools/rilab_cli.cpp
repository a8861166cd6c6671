// Command line front end: one subcommand per experiment family.
//
//   rilab <subcommand> [--config PATH] [--seed U64] [--out DIR] [--replicas N] [--threads N]
//
// Exit codes: 0 success, 2 invalid configuration or arguments, 3 when a Monte
// Carlo record carries a truncation bias bound above its standard error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "rilab/experiments.hpp"
#include "rilab/interlacements.hpp"
#include "rilab/potential.hpp"

using namespace rilab;

namespace {

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed, replicas;
    std::optional<unsigned> threads;
    std::optional<std::string> out;
};

ExperimentConfig make_config(const Globals& gl, const std::set<ExperimentKind>& allowed, const std::string& sub) {
    ExperimentConfig c;
    if (!gl.config.empty()) {
        c = ExperimentConfig::load(gl.config);
    } else {
        c.set("kind", to_string(*allowed.begin()));
    }
    if (!allowed.count(c.kind)) throw ConfigError("config kind '" + to_string(c.kind) + "' does not belong to '" + sub + "'");
    if (gl.seed) c.set("seed", std::to_string(*gl.seed));
    if (gl.replicas) c.set("replicas", std::to_string(*gl.replicas));
    if (gl.threads) c.set("threads", std::to_string(*gl.threads));
    if (gl.out) c.set("out", *gl.out);
    return c;
}

int run_experiment(const ExperimentConfig& c) {
    RunResult r = run(c);
    write_outputs(r);
    for (const auto& rec : r.records) {
        std::printf("%-26s %-40s %14.8g  se %-10.3g ref %-12.6g %s\n", rec.quantity.c_str(), rec.params.c_str(),
                    rec.estimate, rec.se, rec.reference, rec.flag.c_str());
    }
    std::printf("wrote %s/records.csv (%zu records, %.1f s)\n", r.config.out.c_str(), r.records.size(), r.wall_time);
    return r.exit_code;
}

SiteSet read_sites(const std::string& path, int d) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open site file '" + path + "'");
    std::vector<Site> sites;
    std::string line;
    while (std::getline(in, line)) {
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        std::istringstream ss(line);
        Site x{};
        int k = 0;
        std::int64_t v;
        while (k < d && ss >> v) x[k++] = v;
        if (k == 0) continue;
        if (k != d) throw ConfigError("site file: expected " + std::to_string(d) + " coordinates per line");
        sites.push_back(x);
    }
    return SiteSet(d, std::move(sites));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random interlacements on weighted graphs: capacities, sampling, FPP and scaling studies"};
    app.require_subcommand(1);
    Globals gl;
    app.add_option("--config", gl.config, "Experiment config file (key = value)")->check(CLI::ExistingFile);
    app.add_option("--seed", gl.seed, "Master seed");
    app.add_option("--out", gl.out, "Output directory");
    app.add_option("--replicas", gl.replicas, "Replica count");
    app.add_option("--threads", gl.threads, "Worker threads");

    struct Study {
        const char* name;
        const char* help;
        std::set<ExperimentKind> kinds;
    };
    const std::vector<Study> studies = {
        {"green", "Green function asymptotics by a killed solve", {ExperimentKind::green_asymptotics}},
        {"fpp", "FPP distance studies", {ExperimentKind::fpp_scaling, ExperimentKind::coarse_fpp_event}},
        {"locuniq", "Local uniqueness frequencies", {ExperimentKind::local_uniqueness}},
        {"walkcap", "Lower tail of the capacity of a walk trace", {ExperimentKind::walk_capacity_tail}},
        {"bridge", "Walk capacity Laplace transform against joint avoidance", {ExperimentKind::laplace_bridge}},
        {"laplace", "Laplace functionals of local times", {ExperimentKind::laplace_functional}},
        {"tube", "Capacity of tubes", {ExperimentKind::tube_capacity}},
        {"run", "Any experiment kind named in the config", {all_experiment_kinds().begin(), all_experiment_kinds().end()}},
    };
    std::map<std::string, CLI::App*> subs;
    for (const auto& s : studies) subs[s.name] = app.add_subcommand(s.name, s.help)->fallthrough();

    // capacity of a lattice ball or of a listed set
    auto* cap = app.add_subcommand("capacity", "Capacity and equilibrium measure of a finite set")->fallthrough();
    int cap_d = 3;
    double cap_radius = 3;
    std::string cap_sites, cap_method = "green_matrix", cap_scale = "normalized";
    cap->add_option("--d", cap_d, "Lattice dimension")->check(CLI::Range(3, kMaxDim));
    cap->add_option("--radius", cap_radius, "Radius of the Euclidean ball around 0");
    cap->add_option("--sites", cap_sites, "File with one site per line (overrides --radius)");
    cap->add_option("--method", cap_method, "green_matrix | exact_killed_solve | monte_carlo");
    cap->add_option("--scale", cap_scale, "unit | normalized");

    // interlacement sample on a ball, or the emptiness study with --config
    auto* smp = app.add_subcommand("sample", "Sample I^u on a ball window (JSON) or run emptiness_identity")->fallthrough();
    int smp_d = 3;
    double smp_radius = 5, smp_u = 0.5;
    smp->add_option("--d", smp_d, "Lattice dimension")->check(CLI::Range(3, kMaxDim));
    smp->add_option("--radius", smp_radius, "Window radius");
    smp->add_option("--u", smp_u, "Level")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        for (const auto& s : studies)
            if (subs[s.name]->parsed()) return run_experiment(make_config(gl, s.kinds, s.name));

        if (smp->parsed()) {
            if (!gl.config.empty()) return run_experiment(make_config(gl, {ExperimentKind::emptiness_identity}, "sample"));
            ExperimentConfig c;
            c.set("kind", "emptiness_identity");
            if (gl.out) c.set("out", *gl.out);
            Graph g = Graph::lattice(smp_d, DistanceKind::euclidean, WeightScale::normalized);
            Rng rng = Rng::for_stream(gl.seed.value_or(1), {0x5a});
            SamplerParams sp;
            WindowSampler ws(g, ball(g, origin(), smp_radius), smp_u, sp);
            auto s = ws.sample(rng);
            std::filesystem::create_directories(c.out);
            std::ofstream(std::filesystem::path(c.out) / "sample.json") << to_json(s);
            std::printf("%zu trajectories, |I^u n W| = %zu, kill radius %.4g, bias bound %.3g; wrote %s/sample.json\n",
                        s.trajectories.size(), s.occupied().size(), s.kill_radius, s.truncation_bias_bound,
                        c.out.c_str());
            return 0;
        }

        if (cap->parsed()) {
            Graph g = Graph::lattice(cap_d, DistanceKind::euclidean, parse_weight_scale(cap_scale));
            SiteSet A = cap_sites.empty() ? ball(g, origin(), cap_radius) : read_sites(cap_sites, cap_d);
            CapacityParams p;
            p.seed = gl.seed.value_or(1);
            if (gl.replicas) p.n_samples = *gl.replicas;
            auto e = equilibrium_and_capacity(g, A, parse_capacity_method(cap_method), p);
            std::printf("|A| = %zu  cap = %.10g  bracket [%.10g, %.10g]  method %s\n", A.size(), e.value, e.lower,
                        e.upper, to_string(e.method).c_str());
            return 0;
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
