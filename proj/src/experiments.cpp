#include "rilab/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "rilab/fpp.hpp"
#include "rilab/interlacements.hpp"
#include "rilab/lattice_green.hpp"
#include "rilab/parallel.hpp"
#include "rilab/potential.hpp"
#include "rilab/stats.hpp"

namespace rilab {

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::vector<std::pair<ExperimentKind, const char*>> kKindNames = {
    {ExperimentKind::emptiness_identity, "emptiness_identity"},
    {ExperimentKind::laplace_bridge, "laplace_bridge"},
    {ExperimentKind::green_asymptotics, "green_asymptotics"},
    {ExperimentKind::tube_capacity, "tube_capacity"},
    {ExperimentKind::fpp_scaling, "fpp_scaling"},
    {ExperimentKind::local_uniqueness, "local_uniqueness"},
    {ExperimentKind::walk_capacity_tail, "walk_capacity_tail"},
    {ExperimentKind::laplace_functional, "laplace_functional"},
    {ExperimentKind::coarse_fpp_event, "coarse_fpp_event"},
};

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string fmt_exact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    double out = 0;
    auto t = trim(v);
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(out))
        throw ConfigError("config: key '" + key + "' expects a number, got '" + v + "'");
    return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    auto t = trim(v);
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (ec != std::errc() || ptr != t.data() + t.size())
        throw ConfigError("config: key '" + key + "' expects a non-negative integer, got '" + v + "'");
    return out;
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const auto& s : split_list(v)) out.push_back(parse_double(key, s));
    if (out.empty()) throw ConfigError("config: key '" + key + "' expects a non-empty list");
    return out;
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt_exact(v[i]);
    return s;
}

std::string join(const std::vector<std::int64_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Volume of the Euclidean unit ball, for the window memory guard.
double unit_ball_volume(int d) { return std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1); }

double ball_volume(int d, double r) { return unit_ball_volume(d) * std::pow(r + 1, d); }

}  // namespace

std::string to_string(ExperimentKind k) {
    for (const auto& [kk, name] : kKindNames)
        if (kk == k) return name;
    return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& s) {
    for (const auto& [kk, name] : kKindNames)
        if (s == name) return kk;
    throw ConfigError("config: unknown experiment kind '" + s + "'");
}

const std::vector<ExperimentKind>& all_experiment_kinds() {
    static const std::vector<ExperimentKind> v = [] {
        std::vector<ExperimentKind> out;
        for (const auto& kv : kKindNames) out.push_back(kv.first);
        return out;
    }();
    return v;
}

// ---------------------------------------------------------------- config

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    try {
        if (key == "kind") {
            kind = parse_experiment_kind(v);
        } else if (key == "d") {
            d = static_cast<int>(parse_u64(key, v));
        } else if (key == "distance") {
            distance = parse_distance_kind(v);
        } else if (key == "scale") {
            scale = parse_weight_scale(v);
        } else if (key == "seed") {
            seed = parse_u64(key, v);
        } else if (key == "replicas") {
            replicas = parse_u64(key, v);
        } else if (key == "walks") {
            walks = parse_u64(key, v);
        } else if (key == "threads") {
            threads = static_cast<unsigned>(parse_u64(key, v));
        } else if (key == "out") {
            if (v.empty()) throw ConfigError("config: empty output directory");
            out = v;
        } else if (key == "kill_radius") {
            kill_radius = parse_double(key, v);
        } else if (key == "bias_target") {
            bias_target = parse_double(key, v);
        } else if (key == "u") {
            u = parse_list(key, v);
        } else if (key == "N") {
            N = parse_list(key, v);
        } else if (key == "p") {
            p = parse_list(key, v);
        } else if (key == "theta") {
            theta = parse_list(key, v);
        } else if (key == "P") {
            P.clear();
            for (const auto& s : split_list(v)) P.push_back(static_cast<std::int64_t>(parse_u64(key, s)));
        } else if (key == "K_radius") {
            K_radius = parse_double(key, v);
        } else if (key == "window_radius") {
            window_radius = parse_double(key, v);
        } else if (key == "R") {
            R = parse_double(key, v);
        } else if (key == "xi") {
            xi = parse_double(key, v);
        } else if (key == "kappa") {
            kappa = parse_double(key, v);
        } else if (key == "s") {
            s = parse_double(key, v);
        } else if (key == "rho") {
            rho = parse_double(key, v);
        } else if (key == "eta") {
            eta = parse_double(key, v);
        } else if (key == "weights") {
            parse_weight_kind(v);
            weights = v;
        } else if (key == "max_window_sites") {
            max_window_sites = parse_u64(key, v);
        } else {
            throw ConfigError("config: unknown key '" + key + "'");
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("config: bad value for '" + key + "': " + e.what());
    }
    raw[key] = v;
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
    ExperimentConfig c;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        if (c.raw.count(key)) throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        c.set(key, line.substr(eq + 1));
    }
    if (!c.raw.count("kind")) throw ConfigError("config: missing required key 'kind'");
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

ExperimentConfig ExperimentConfig::with_defaults() const {
    ExperimentConfig c = *this;
    auto dflt = [&](const char* key, auto& field, auto value) {
        if (!raw.count(key)) field = value;
    };
    using V = std::vector<double>;
    switch (kind) {
        case ExperimentKind::emptiness_identity:
            dflt("replicas", c.replicas, 100000);
            dflt("u", c.u, V{0.05, 0.2});
            dflt("window_radius", c.window_radius, c.K_radius + 3);
            break;
        case ExperimentKind::laplace_bridge:
            dflt("replicas", c.replicas, 20000);
            dflt("walks", c.walks, 400);
            dflt("u", c.u, V{0.15});
            dflt("N", c.N, V{40});
            dflt("p", c.p, V{2, 4, 8, 12});
            break;
        case ExperimentKind::green_asymptotics:
            dflt("replicas", c.replicas, 1);
            dflt("N", c.N, V{20, 25, 30, 35, 40});
            break;
        case ExperimentKind::tube_capacity:
            dflt("replicas", c.replicas, 1);
            dflt("N", c.N, V{200});
            dflt("p", c.p, V{4});
            break;
        case ExperimentKind::fpp_scaling:
            dflt("replicas", c.replicas, 2000);
            dflt("u", c.u, V{1, 2, 3});
            dflt("N", c.N, V{10, 15});
            dflt("s", c.s, 0.1);
            break;
        case ExperimentKind::local_uniqueness:
            dflt("replicas", c.replicas, 10000);
            dflt("u", c.u, V{1, 2});
            dflt("N", c.N, V{10});
            break;
        case ExperimentKind::walk_capacity_tail:
            dflt("replicas", c.replicas, 1);
            dflt("walks", c.walks, 2000);
            dflt("N", c.N, V{30});
            dflt("p", c.p, V{2, 3, 5, 8});
            dflt("P", c.P, std::vector<std::int64_t>{3, 6});
            break;
        case ExperimentKind::laplace_functional:
            dflt("replicas", c.replicas, 20000);
            dflt("u", c.u, V{1});
            dflt("theta", c.theta, V{0.5});
            dflt("window_radius", c.window_radius, 3.0);
            break;
        case ExperimentKind::coarse_fpp_event:
            dflt("replicas", c.replicas, 1000);
            dflt("u", c.u, V{0.2, 0.4});
            dflt("N", c.N, V{16});
            dflt("R", c.R, 8.0);
            dflt("s", c.s, 0.5);
            break;
    }
    if (c.walks == 0 && !raw.count("walks")) c.walks = c.replicas;
    return c;
}

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& m) { throw ConfigError("config: " + m); };
    if (d < 3 || d > kMaxDim) fail("d must be in [3, " + std::to_string(kMaxDim) + "]");
    if (replicas == 0) fail("replicas must be positive");
    if (threads == 0) fail("threads must be positive");
    if (kill_radius < 0) fail("kill_radius must be >= 0");
    if (!(bias_target > 0 && bias_target < 1)) fail("bias_target must be in (0,1)");
    for (double v : u)
        if (!(v > 0)) fail("u values must be positive");
    // trend flags compare consecutive grid points
    for (std::size_t i = 1; i < u.size(); ++i)
        if (!(u[i] > u[i - 1])) fail("u values must be strictly increasing");
    for (double v : N)
        if (!(v >= 1)) fail("N values must be >= 1");
    for (double v : p)
        if (!(v >= 1)) fail("p values must be >= 1");
    for (double v : theta)
        if (!(v > 0)) fail("theta values must be positive");
    auto need = [&](bool ok, const std::string& m) {
        if (!ok) fail(to_string(kind) + ": " + m);
    };
    auto needs_grid = [&](bool uu, bool nn) {
        if (uu) need(!u.empty(), "u grid is empty");
        if (nn) need(!N.empty(), "N grid is empty");
    };
    switch (kind) {
        case ExperimentKind::emptiness_identity:
            needs_grid(true, false);
            need(K_radius >= 0, "K_radius must be >= 0");
            need(window_radius >= K_radius, "window_radius must be >= K_radius");
            need(eta > 0 && eta < 1, "eta must be in (0,1)");
            need(ball_volume(d, window_radius) <= double(max_window_sites), "window exceeds max_window_sites");
            break;
        case ExperimentKind::laplace_bridge:
            needs_grid(true, true);
            need(walks > 1, "walks must exceed 1");
            need(distance == DistanceKind::euclidean, "euclidean distance only");
            for (double n : N) need(ball_volume(d, n) <= double(max_window_sites), "ball(N) exceeds max_window_sites");
            for (double pp : p)
                for (double n : N) need(pp < n, "p must be smaller than N");
            break;
        case ExperimentKind::green_asymptotics:
            needs_grid(false, true);
            need(distance == DistanceKind::euclidean, "euclidean distance only");
            need(rho >= 4, "rho must be >= 4");
            for (double n : N) need(n * std::sqrt(double(d)) < rho, "radii must stay well inside the solve ball");
            break;
        case ExperimentKind::tube_capacity:
            needs_grid(false, true);
            need(!p.empty(), "p grid is empty");
            for (double pp : p)
                for (double n : N) need(pp < n, "p must be smaller than N");
            break;
        case ExperimentKind::fpp_scaling:
            needs_grid(true, true);
            need(d == 3, "d = 3 only");
            need(s >= 0, "s must be >= 0");
            for (double uu : u)
                for (double n : N) need(uu * n >= 5 && uu * n <= 50, "u N must lie in [5, 50]");
            for (double n : N) need(ball_volume(d, n + 1) <= double(max_window_sites), "window exceeds max_window_sites");
            break;
        case ExperimentKind::local_uniqueness:
            needs_grid(true, true);
            need(d == 3 || d == 4, "d must be 3 or 4");
            need(xi > 1, "xi must exceed 1");
            for (double n : N)
                need(ball_volume(d, xi * n) <= double(max_window_sites), "ball(x, xi N) exceeds max_window_sites");
            break;
        case ExperimentKind::walk_capacity_tail:
            needs_grid(false, true);
            need(d == 3 || d == 4, "d must be 3 or 4");
            need(p.size() >= 2, "at least two p values are needed for the fit");
            need(walks > 1, "walks must exceed 1");
            for (double pp : p)
                for (double n : N) need(pp <= n, "p must not exceed N");
            for (auto pp : P)
                for (double n : N) need(pp >= 1 && double(pp) <= n, "P must lie in [1, N]");
            break;
        case ExperimentKind::laplace_functional:
            needs_grid(true, false);
            need(!theta.empty(), "theta grid is empty");
            need(window_radius >= 1, "window_radius must be >= 1 (V lives on the origin and its neighbours)");
            break;
        case ExperimentKind::coarse_fpp_event:
            needs_grid(true, true);
            need(R >= std::sqrt(double(d)), "R must be at least sqrt(d)");
            need(s >= 0, "s must be >= 0");
            need(parse_weight_kind(weights) != WeightKind::occupied_indicator, "weights must be a box kind");
            if (parse_weight_kind(weights) == WeightKind::box_capacity_threshold) need(kappa > 0, "kappa must be positive");
            for (double n : N) need(n >= R, "N must be at least R");
            break;
    }
}

std::string ExperimentConfig::canonical() const {
    std::ostringstream o;
    o << "kind = " << to_string(kind) << "\n"
      << "d = " << d << "\n"
      << "distance = " << to_string(distance) << "\n"
      << "scale = " << to_string(scale) << "\n"
      << "seed = " << seed << "\n"
      << "replicas = " << replicas << "\n"
      << "walks = " << walks << "\n"
      << "threads = " << threads << "\n"
      << "out = " << out << "\n"
      << "kill_radius = " << fmt_exact(kill_radius) << "\n"
      << "bias_target = " << fmt_exact(bias_target) << "\n"
      << "u = " << join(u) << "\n"
      << "N = " << join(N) << "\n"
      << "p = " << join(p) << "\n"
      << "theta = " << join(theta) << "\n"
      << "P = " << join(P) << "\n"
      << "K_radius = " << fmt_exact(K_radius) << "\n"
      << "window_radius = " << fmt_exact(window_radius) << "\n"
      << "R = " << fmt_exact(R) << "\n"
      << "xi = " << fmt_exact(xi) << "\n"
      << "kappa = " << fmt_exact(kappa) << "\n"
      << "s = " << fmt_exact(s) << "\n"
      << "rho = " << fmt_exact(rho) << "\n"
      << "eta = " << fmt_exact(eta) << "\n"
      << "weights = " << weights << "\n"
      << "max_window_sites = " << max_window_sites << "\n";
    return o.str();
}

std::string ExperimentConfig::hash() const {
    std::string kept;
    std::stringstream ss(canonical());
    std::string line;
    while (std::getline(ss, line)) {
        if (line.rfind("seed =", 0) == 0 || line.rfind("threads =", 0) == 0 || line.rfind("out =", 0) == 0) continue;
        kept += line + "\n";
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(kept)));
    return buf;
}

// ---------------------------------------------------------------- records

std::string records_csv_header() {
    return "schema,kind,params,quantity,estimate,se,reference,n_replicas,bias_bound,seed,config_hash,code_version,flag\n";
}

std::string records_csv(const std::vector<EstimateRecord>& records) {
    std::string out = records_csv_header();
    for (const auto& r : records) {
        out += std::to_string(kRecordsSchema) + "," + r.kind + "," + r.params + "," + r.quantity + "," + fmt(r.estimate) +
               "," + fmt(r.se) + "," + fmt(r.reference) + "," + std::to_string(r.n_replicas) + "," + fmt(r.bias_bound) +
               "," + std::to_string(r.seed) + "," + r.config_hash + "," + r.code_version + "," + r.flag + "\n";
    }
    return out;
}

const EstimateRecord* find_record(const std::vector<EstimateRecord>& recs, const std::string& quantity,
                                  const std::string& params) {
    for (const auto& r : recs)
        if (r.quantity == quantity && r.params == params) return &r;
    return nullptr;
}

std::vector<const EstimateRecord*> find_records(const std::vector<EstimateRecord>& recs, const std::string& quantity) {
    std::vector<const EstimateRecord*> out;
    for (const auto& r : recs)
        if (r.quantity == quantity) out.push_back(&r);
    return out;
}

std::string meta_json(const RunResult& r) {
    nlohmann::ordered_json j;
    j["code_version"] = kCodeVersion;
    j["records_schema"] = kRecordsSchema;
    j["kind"] = to_string(r.config.kind);
    j["config_hash"] = r.config.hash();
    j["seed"] = r.config.seed;
    j["threads"] = r.config.threads;
    j["config"] = r.config.canonical();
    auto sc = ScalingConstants::lattice(r.config.d, r.config.scale);
    j["constants"] = {{"nu", r.constants.nu},       {"c_G", r.constants.c_G},     {"C_G", r.constants.C_G},
                      {"c_cap", r.constants.c_cap}, {"C_cap", r.constants.C_cap}, {"c_beta", sc.c_beta},
                      {"C_beta", sc.C_beta},        {"c_asymp", sc.c_asymp}};
    j["wall_time_s"] = r.wall_time;
    j["exit_code"] = r.exit_code;
    auto& w = j["record_wall_times"] = nlohmann::ordered_json::array();
    for (const auto& rec : r.records) w.push_back({{"quantity", rec.quantity}, {"params", rec.params}, {"s", rec.wall_time}});
    return j.dump(2) + "\n";
}

void write_outputs(const RunResult& r) {
    std::filesystem::create_directories(r.config.out);
    const std::filesystem::path dir(r.config.out);
    std::ofstream(dir / "records.csv") << records_csv(r.records);
    std::ofstream(dir / "meta.json") << meta_json(r);
    if (!r.fpp_rows.empty()) std::ofstream(dir / "fpp_rows.csv") << kFppRowsHeader << r.fpp_rows;
}

// ---------------------------------------------------------------- runners

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Ctx {
    const ExperimentConfig& c;
    Graph g;
    ScalingConstants sc;
    std::string hash;
    std::uint64_t tag;
    std::vector<EstimateRecord>& out;
    std::string& fpp_rows;
    double wall = 0;  // stamped on records added until the next reset

    Rng rng(std::initializer_list<std::uint64_t> path) const {
        std::vector<std::uint64_t> v{tag};
        v.insert(v.end(), path.begin(), path.end());
        // fold the path into a stream id with the same mixing as Rng::stream_id
        std::uint64_t id = Rng::stream_id({v[0]});
        for (std::size_t i = 1; i < v.size(); ++i) id = Rng::stream_id({id, v[i]});
        return Rng(c.seed, id);
    }

    EstimateRecord& add(const std::string& params, const std::string& quantity, double estimate, double se,
                        double reference, std::uint64_t n, double bias = 0, const std::string& flag = "") {
        EstimateRecord r;
        r.kind = to_string(c.kind);
        r.params = params;
        r.quantity = quantity;
        r.estimate = estimate;
        r.se = se;
        r.reference = reference;
        r.n_replicas = n;
        r.bias_bound = bias;
        r.wall_time = wall;
        r.seed = c.seed;
        r.config_hash = hash;
        r.flag = flag;
        out.push_back(std::move(r));
        return out.back();
    }

    // Frequency k/n with binomial SE; zero counts report the Clopper-Pearson
    // upper bound instead.
    EstimateRecord& add_frequency(const std::string& params, const std::string& quantity, std::uint64_t k,
                                  std::uint64_t n, double reference, double bias) {
        if (k == 0) return add(params, quantity, clopper_pearson_zero_upper(n), 0, reference, n, bias, "below_mc_floor");
        const double p = double(k) / double(n);
        return add(params, quantity, p, std::sqrt(p * (1 - p) / double(n)), reference, n, bias);
    }

    // -log(P)/F_nu(N u^{1/nu}), with the delta-method SE. A floored frequency
    // gives a lower bound on the exponent.
    EstimateRecord& add_exponent(const std::string& params, const std::string& quantity, std::uint64_t k,
                                 std::uint64_t n, double N, double u, double reference) {
        const double scale = f_nu(N * std::pow(u, 1.0 / sc.nu), sc.nu);
        if (k == 0)
            return add(params, quantity, -std::log(clopper_pearson_zero_upper(n)) / scale, 0, reference, n, 0,
                       "below_mc_floor");
        const double p = double(k) / double(n);
        const double se = std::sqrt(p * (1 - p) / double(n)) / (p * scale);
        return add(params, quantity, -std::log(p) / scale, se, reference, n, 0);
    }
};

std::string kv(std::initializer_list<std::pair<const char*, double>> items) {
    std::string s;
    for (const auto& [k, v] : items) s += std::string(s.empty() ? "" : ";") + k + "=" + fmt(v);
    return s;
}

SamplerParams sampler_params(const ExperimentConfig& c) {
    SamplerParams p;
    p.kill_radius = c.kill_radius;
    p.bias_target = c.bias_target;
    p.sample_backward = false;
    return p;
}

std::vector<char> flags_of(const SiteSet& W, const SiteSet& A) {
    std::vector<char> f(W.size(), 0);
    for (const auto& x : A) {
        auto i = W.index_of(x);
        if (i >= 0) f[i] = 1;
    }
    return f;
}

// Capacities of the traces of `n` walks from the origin stopped on leaving B(N).
std::vector<CapacityEstimate> trace_capacities(Ctx& cx, double N, std::uint64_t n, std::uint64_t grid) {
    SiteSet D = ball(cx.g, origin(), N);
    std::vector<CapacityEstimate> caps(n);
    parallel_for(n, cx.c.threads, [&](std::uint64_t i) {
        Rng rng = cx.rng({grid, 0, i});
        bool truncated = false;
        auto sites = trace_until_exit(cx.g, origin(), D, rng, truncated);
        if (truncated) throw std::runtime_error("walk trace hit max_steps");
        auto e = equilibrium_and_capacity(cx.g, SiteSet(cx.g.dim(), std::move(sites)));
        e.equilibrium.clear();
        e.set = SiteSet();
        caps[i] = std::move(e);
    });
    return caps;
}

void run_emptiness(Ctx& cx) {
    const auto& c = cx.c;
    const Graph& g = cx.g;
    SiteSet K = ball(g, origin(), c.K_radius);
    SiteSet W = ball(g, origin(), c.window_radius);
    auto t0 = Clock::now();
    const auto capK = equilibrium_and_capacity(g, K);
    const auto capW = equilibrium_and_capacity(g, W);
    const auto inK = flags_of(W, K);
    cx.wall = seconds_since(t0);
    cx.add(kv({{"K_radius", c.K_radius}}), "cap_K", capK.value, 0, kNaN, 0, 0.5 * (capK.upper - capK.lower));
    for (std::size_t j = 0; j < c.u.size(); ++j) {
        const double u = c.u[j];
        t0 = Clock::now();
        WindowSampler ws(g, capW, u, sampler_params(c));
        struct Rep {
            std::uint32_t hits = 0;
            bool empty1 = true, empty2 = true;
        };
        std::vector<Rep> reps(c.replicas);
        parallel_for(c.replicas, c.threads, [&](std::uint64_t i) {
            Rng rng = cx.rng({j, i});
            auto s = ws.sample(rng);
            Rep r;
            for (const auto& t : s.trajectories) {
                const bool hit = std::any_of(t.forward.begin(), t.forward.end(), [&](std::int32_t k) { return inK[k]; });
                if (!hit) continue;
                ++r.hits;
                (t.label <= c.eta * u ? r.empty1 : r.empty2) = false;
            }
            reps[i] = r;
        });
        Welford counts;
        std::uint64_t k0 = 0, k1 = 0, k2 = 0;
        for (const auto& r : reps) {
            counts.add(r.hits);
            k0 += r.hits == 0;
            k1 += r.empty1;
            k2 += r.empty2;
        }
        cx.wall = seconds_since(t0);
        const double n = double(c.replicas);
        const double bias = ws.bias_bound();
        const double ref = std::exp(-u * capK.value);
        const std::string par = kv({{"K_radius", c.K_radius}, {"window_radius", c.window_radius}, {"u", u}});
        cx.add_frequency(par, "P_empty", k0, c.replicas, ref, bias);
        cx.add(par, "reference_error", u * ref * 0.5 * (capK.upper - capK.lower), 0, kNaN, 0);
        const double p1 = double(k1) / n, p2 = double(k2) / n;
        const double se12 = std::sqrt(p2 * p2 * p1 * (1 - p1) / n + p1 * p1 * p2 * (1 - p2) / n);
        cx.add(par + ";eta=" + fmt(c.eta), "P_empty_layers", p1 * p2, se12, double(k0) / n, c.replicas, 2 * bias);
        cx.add(par, "mean_N_K", counts.mean(), counts.se(), u * capK.value, c.replicas, bias);
        const double disp = counts.mean() > 0 ? counts.variance() / counts.mean() : kNaN;
        cx.add(par, "dispersion_N_K", disp, std::sqrt(2.0 / (n - 1)), 1.0, c.replicas, bias);
    }
}

// Tube [-p, N] x [-p, p]^{d-1}: contains every trace that stays within
// distance p of the segment [0, N e_1].
SiteSet bridge_tube(const Graph& g, double N, double p) {
    const auto pi = static_cast<std::int64_t>(p), Ni = static_cast<std::int64_t>(std::ceil(N));
    Site lo{}, hi{};
    for (int i = 0; i < g.dim(); ++i) {
        lo[i] = -pi;
        hi[i] = pi;
    }
    hi[0] = Ni;
    return box_sites(g.dim(), lo, hi);
}

void run_bridge(Ctx& cx) {
    const auto& c = cx.c;
    const Graph& g = cx.g;
    for (std::size_t jn = 0; jn < c.N.size(); ++jn) {
        const double N = c.N[jn];
        auto t0 = Clock::now();
        const auto caps = trace_capacities(cx, N, c.walks, jn);
        SiteSet D = ball(g, origin(), N);
        const auto capD = equilibrium_and_capacity(g, D);
        struct Tube {
            double p, cap_upper, confinement;
        };
        std::vector<Tube> tubes;
        for (double p : c.p) {
            SiteSet L = bridge_tube(g, N, p);
            auto capL = equilibrium_and_capacity(g, L);
            tubes.push_back({p, capL.upper, confinement_probability(g, origin(), N, L)});
        }
        const double setup = seconds_since(t0);
        for (std::size_t ju = 0; ju < c.u.size(); ++ju) {
            const double u = c.u[ju];
            t0 = Clock::now();
            Welford lhs;
            double lhs_bias = 0;
            for (const auto& e : caps) {
                const double v = std::exp(-u * e.value);
                lhs.add(v);
                lhs_bias += u * v * 0.5 * (e.upper - e.lower) / double(caps.size());
            }
            WindowSampler ws(g, capD, u, sampler_params(c));
            std::vector<char> avoided(c.replicas);
            parallel_for(c.replicas, c.threads, [&](std::uint64_t i) {
                Rng rng = cx.rng({jn, 1 + ju, i});
                Rng wr = rng.split(0), ir = rng.split(1);
                bool truncated = false;
                auto trace = trace_until_exit(g, origin(), D, wr, truncated);
                if (truncated) throw std::runtime_error("laplace_bridge: walk hit max_steps");
                std::vector<char> flags(D.size(), 0);
                for (const auto& x : trace) flags[D.index_of(x)] = 1;
                const auto n = ws.sample_count(ir);
                bool hit = false;
                for (std::uint64_t k = 0; k < n && !hit; ++k) hit = ws.trajectory_hits(flags, ir);
                avoided[i] = !hit;
            });
            const auto k = static_cast<std::uint64_t>(std::count(avoided.begin(), avoided.end(), 1));
            cx.wall = seconds_since(t0) + setup;
            const std::string par = kv({{"N", N}, {"u", u}});
            cx.add(par, "lhs", lhs.mean(), lhs.se(), kNaN, c.walks, lhs_bias);
            const EstimateRecord rhs = cx.add_frequency(par, "rhs", k, c.replicas, lhs.mean(), ws.bias_bound());
            cx.add(par, "rhs_minus_lhs", rhs.estimate - lhs.mean(), std::hypot(rhs.se, lhs.se()), 0.0, c.replicas,
                   rhs.bias_bound + lhs_bias, rhs.flag);
            cx.add_exponent(par, "normalized_exponent", k, c.replicas, N, u, cx.sc.C_beta);
            double best = 0;
            for (const auto& t : tubes) {
                const double lb = std::exp(-u * t.cap_upper) * t.confinement;
                best = std::max(best, lb);
                cx.add(kv({{"N", N}, {"u", u}, {"p", t.p}}), "lower_bound", lb, 0, rhs.estimate, 0);
            }
            cx.add(par, "lower_bound_max", best, 0, rhs.estimate, 0);
        }
    }
}

void run_green(Ctx& cx) {
    const auto& c = cx.c;
    const Graph& g = cx.g;
    auto t0 = Clock::now();
    GreenProfile prof = green_profile(g, c.rho);
    cx.wall = seconds_since(t0);
    const int d = g.dim();
    const double nu = d - 2;
    std::vector<Site> dirs{unit_vector(0), make_site({1, 1}), make_site({1, 1, 1})};
    const double rmin = *std::min_element(c.N.begin(), c.N.end());
    for (const auto& dir : dirs) {
        const double len = norm2(dir, d);
        for (double r : c.N) {
            Site x{};
            for (int i = 0; i < d; ++i) x[i] = std::llround(r * double(dir[i]) / len);
            // keep every point inside the requested radius range
            if (norm2(x, d) < rmin)
                for (int i = 0; i < d; ++i) x[i] = static_cast<std::int64_t>(std::ceil(r * double(dir[i]) / len));
            const double ax = norm2(x, d);
            const Bracket b = prof.at(x);
            const double scale = std::pow(ax, nu);
            const std::string par =
                "rho=" + fmt(c.rho) + ";x=" + to_string(x, d) + ";abs_x=" + fmt(ax);
            cx.add(par, "x_green", scale * b.value, 0, cx.sc.c_asymp, 0,
                   scale * std::max(b.value - b.lower, b.upper - b.value));
            const double exact = green(g, origin(), x, GreenMethod::lattice_exact).value;
            cx.add(par, "x_green_lattice_exact", scale * exact, 0, scale * b.value, 0,
                   scale * lattice_green(d).tolerance() / g.lambda(origin()));
        }
    }
}

void run_tube(Ctx& cx) {
    const auto& c = cx.c;
    for (double N : c.N)
        for (double p : c.p) {
            auto t0 = Clock::now();
            auto rep = tube_capacity_check(cx.g, static_cast<std::int64_t>(N), static_cast<std::int64_t>(p), 0.0);
            cx.wall = seconds_since(t0);
            const std::string par = kv({{"N", N}, {"p", p}});
            cx.add(par, "cap_tube", rep.cap.value, 0, kNaN, 0, 0.5 * (rep.cap.upper - rep.cap.lower));
            cx.add(par, "tube_ratio", rep.ratio.value, 0, 1.0, 0, 0.5 * rep.ratio.width());
            cx.add(par + ";kappa=" + fmt(rep.kappa) + ";P=" + std::to_string(rep.n_balls), "union_lower_bound",
                   rep.union_lower_bound, 0, rep.cap.value, 0, rep.cap.upper - rep.cap.value);
        }
}

// Flags "monotone" when the exponents at increasing u never drop by more than
// three combined SE. Floored points are only lower bounds and are skipped.
void add_trend(Ctx& cx, const std::string& par, const std::vector<const EstimateRecord*>& seq) {
    bool mono = true, floored = false;
    const EstimateRecord* prev = nullptr;
    for (const auto* r : seq) {
        if (r->flag == "below_mc_floor") {
            floored = true;
            continue;
        }
        if (prev && r->estimate < prev->estimate - 3 * std::hypot(r->se, prev->se)) mono = false;
        prev = r;
    }
    std::string flag = mono ? "monotone" : "non_monotone";
    if (floored) flag += "_with_floor";
    cx.add(par, "exponent_trend", mono ? 1 : 0, 0, 1.0, 0, 0, flag);
}

void run_fpp_scaling(Ctx& cx) {
    const auto& c = cx.c;
    const Graph& g = cx.g;
    for (std::size_t jn = 0; jn < c.N.size(); ++jn) {
        const double N = c.N[jn];
        auto t0 = Clock::now();
        SiteSet W = ball(g, origin(), N + 1);
        const auto capW = equilibrium_and_capacity(g, W);
        std::vector<Site> seg;
        for (std::int64_t k = 0; k <= static_cast<std::int64_t>(std::floor(N)) + 1; ++k) seg.push_back(unit_vector(0, k));
        const auto capL = equilibrium_and_capacity(g, SiteSet(g.dim(), seg));
        const double setup = seconds_since(t0);
        std::vector<const EstimateRecord*> trend;
        std::vector<std::size_t> trend_idx;
        for (std::size_t ju = 0; ju < c.u.size(); ++ju) {
            const double u = c.u[ju];
            t0 = Clock::now();
            WindowSampler ws(g, capW, u, sampler_params(c));
            struct Rep {
                double distance;
                std::size_t path;
            };
            std::vector<Rep> reps(c.replicas);
            parallel_for(c.replicas, c.threads, [&](std::uint64_t i) {
                Rng rng = cx.rng({jn, ju, i});
                auto s = ws.sample(rng);
                auto w = build_weights(g, s, u, WeightKind::occupied_indicator, 1.0);
                auto r = fpp_distance(g, w, origin(), FppTarget::exit(N));
                reps[i] = {r.distance, r.path.size()};
            });
            std::uint64_t k_le = 0, k_zero = 0;
            Welford dist;
            for (const auto& r : reps) {
                k_le += r.distance <= c.s * N;
                k_zero += r.distance == 0;
                dist.add(r.distance);
            }
            cx.wall = seconds_since(t0) + setup;
            const double bias = ws.bias_bound();
            const std::string par = kv({{"N", N}, {"u", u}, {"s", c.s}});
            cx.add_frequency(par, "P_d_le_sN", k_le, c.replicas, kNaN, bias);
            const double zero_est = cx.add_frequency(par, "P_d_zero", k_zero, c.replicas, kNaN, bias).estimate;
            cx.add(par, "mean_distance", dist.mean(), dist.se(), kNaN, c.replicas, bias * N);
            trend_idx.push_back(cx.out.size());
            cx.add_exponent(par, "normalized_exponent", k_le, c.replicas, N, u, kNaN);
            cx.add(par, "lower_bound_P_d_zero", std::exp(-u * capL.upper), 0, zero_est, 0);
            for (const auto& r : reps)
                cx.fpp_rows += std::to_string(c.seed) + "," + fmt(u) + "," + fmt(N) + ",1,occupied_indicator," +
                               fmt(r.distance) + "," + std::to_string(r.path) + "," + fmt(bias) + "\n";
        }
        for (auto i : trend_idx) trend.push_back(&cx.out[i]);
        add_trend(cx, kv({{"N", N}, {"s", c.s}}), trend);
    }
}

void run_local_uniqueness(Ctx& cx) {
    const auto& c = cx.c;
    const Graph& g = cx.g;
    for (std::size_t jn = 0; jn < c.N.size(); ++jn) {
        const double N = c.N[jn];
        auto t0 = Clock::now();
        SiteSet W = ball(g, origin(), c.xi * N);
        const auto capW = equilibrium_and_capacity(g, W);
        const auto capB = equilibrium_and_capacity(g, ball(g, origin(), N));
        const auto inB = flags_of(W, ball(g, origin(), N));
        const double setup = seconds_since(t0);
        std::vector<std::size_t> trend_idx;
        for (std::size_t ju = 0; ju < c.u.size(); ++ju) {
            const double u = c.u[ju];
            t0 = Clock::now();
            WindowSampler ws(g, capW, u, sampler_params(c));
            std::vector<char> fail(c.replicas), nonempty(c.replicas);
            parallel_for(c.replicas, c.threads, [&](std::uint64_t i) {
                Rng rng = cx.rng({jn, ju, i});
                auto s = ws.sample(rng);
                auto occ = s.occupied_flags(u);
                bool ne = false;
                for (std::size_t k = 0; k < occ.size() && !ne; ++k) ne = occ[k] && inB[k];
                nonempty[i] = ne;
                fail[i] = ne && !local_uniqueness(g, W, occ, origin(), N, c.xi);
            });
            const auto kf = static_cast<std::uint64_t>(std::count(fail.begin(), fail.end(), 1));
            const auto kn = static_cast<std::uint64_t>(std::count(nonempty.begin(), nonempty.end(), 1));
            cx.wall = seconds_since(t0) + setup;
            const double bias = ws.bias_bound();
            const std::string par = kv({{"N", N}, {"u", u}, {"xi", c.xi}});
            cx.add_frequency(par, "P_locuniq_fail", kf, c.replicas, kNaN, bias);
            const Interval wi = kf ? wilson(kf, c.replicas) : Interval{0, clopper_pearson_zero_upper(c.replicas)};
            cx.add(par, "P_locuniq_fail_lower", wi.lower, 0, kNaN, c.replicas);
            cx.add(par, "P_locuniq_fail_upper", wi.upper, 0, kNaN, c.replicas);
            cx.add_frequency(par, "P_nonempty", kn, c.replicas, 1 - std::exp(-u * capB.value), bias);
            trend_idx.push_back(cx.out.size());
            cx.add_exponent(par, "normalized_exponent", kf, c.replicas, N, u, cx.sc.C_beta);
        }
        std::vector<const EstimateRecord*> trend;
        for (auto i : trend_idx) trend.push_back(&cx.out[i]);
        add_trend(cx, kv({{"N", N}, {"xi", c.xi}}), trend);
    }
}

void run_walk_capacity_tail(Ctx& cx) {
    const auto& c = cx.c;
    const Graph& g = cx.g;
    for (std::size_t jn = 0; jn < c.N.size(); ++jn) {
        const double N = c.N[jn];
        auto t0 = Clock::now();
        const auto caps = trace_capacities(cx, N, c.walks, jn);
        const double walk_time = seconds_since(t0);
        std::vector<double> xs, ys;
        std::vector<std::string> fit_params;
        for (double p : c.p) {
            t0 = Clock::now();
            SiteSet T = tube_sites(g, static_cast<std::int64_t>(N), static_cast<std::int64_t>(p));
            const auto capT = equilibrium_and_capacity(g, T);
            const double conf = confinement_probability(g, origin(), N, T);
            std::uint64_t k = 0;
            for (const auto& e : caps) k += e.value <= capT.value;
            // brackets: count walks whose comparison is not decided
            std::uint64_t undecided = 0;
            for (const auto& e : caps) undecided += (e.lower <= capT.upper) != (e.upper <= capT.lower);
            cx.wall = seconds_since(t0) + walk_time;
            const std::string par = kv({{"N", N}, {"p", p}});
            cx.add(par, "cap_tube", capT.value, 0, kNaN, 0, 0.5 * (capT.upper - capT.lower));
            const EstimateRecord r =
                cx.add_frequency(par, "P_cap_le_tube", k, c.walks, conf, double(undecided) / double(c.walks));
            const Interval wi = k ? wilson(k, c.walks) : Interval{0, clopper_pearson_zero_upper(c.walks)};
            cx.add(par, "P_cap_le_tube_lower", wi.lower, 0, kNaN, c.walks);
            cx.add(par, "P_cap_le_tube_upper", wi.upper, 0, kNaN, c.walks);
            cx.add(par, "confinement_lower_bound", conf, 0, r.estimate, 0);
            if (k > 0 && k < c.walks) {
                xs.push_back(N / p);
                ys.push_back(-std::log(r.estimate));
                fit_params.push_back(par);
            }
        }
        for (std::size_t jp = 0; jp < c.P.size(); ++jp) {
            t0 = Clock::now();
            const auto tc = tube_confinement(g, origin(), N, static_cast<int>(c.P[jp]), cx.rng({jn, 1, jp}), c.walks);
            cx.wall = seconds_since(t0);
            const std::string par = kv({{"N", N}, {"P", double(c.P[jp])}});
            cx.add(par, "tube_confinement_exact", tc.exact, 0, kNaN, 0);
            cx.add_frequency(par, "tube_confinement_mc", static_cast<std::uint64_t>(std::llround(tc.mc * double(tc.n_samples))),
                             tc.n_samples, tc.exact, 0);
        }
        const std::string par = kv({{"N", N}});
        if (xs.size() >= 2) {
            auto fit = linear_fit(xs, ys);
            cx.add(par, "fit_slope", fit.slope, 0, kNaN, xs.size());
            cx.add(par, "fit_intercept", fit.intercept, 0, kNaN, xs.size());
            cx.add(par, "fit_r2", fit.r2, 0, kNaN, xs.size());
            for (std::size_t i = 0; i < xs.size(); ++i) cx.add(fit_params[i], "fit_residual", fit.residuals[i], 0, 0.0, 1);
        } else {
            cx.add(par, "fit_r2", kNaN, 0, kNaN, xs.size(), 0, "too_few_points");
        }
    }
}

struct Potential {
    std::string name;
    double theta;
    std::vector<Site> sites;
    std::vector<double> values;
};

void run_laplace_functional(Ctx& cx) {
    const auto& c = cx.c;
    const Graph& g = cx.g;
    const int d = g.dim();
    std::vector<Potential> pots;
    pots.push_back({"zero", 0, {origin()}, {0.0}});
    for (double th : c.theta) {
        pots.push_back({"point", th, {origin()}, {-th}});
        pots.push_back({"multi",
                        th,
                        {origin(), unit_vector(0), unit_vector(1), unit_vector(0, -1), unit_vector(d - 1)},
                        {-th, -0.5 * th, -0.5 * th, -0.25 * th, -0.25 * th}});
    }
    pots.push_back({"positive", 0.05, {origin(), unit_vector(0)}, {0.05, 0.05}});

    SiteSet W = ball(g, origin(), c.window_radius);
    const auto capW = equilibrium_and_capacity(g, W);
    std::vector<GreenTable> tables;
    std::vector<std::vector<std::int64_t>> idx;
    for (const auto& pot : pots) {
        SiteSet S(d, pot.sites);
        tables.push_back(green_table(g, S, GreenMethod::lattice_exact));
        // values in the order of S
        std::vector<std::int64_t> ix;
        for (const auto& x : S) ix.push_back(W.index_of(x));
        idx.push_back(ix);
    }
    const auto zero = W.index_of(origin());
    for (std::size_t ju = 0; ju < c.u.size(); ++ju) {
        const double u = c.u[ju];
        auto t0 = Clock::now();
        WindowSampler ws(g, capW, u, sampler_params(c));
        const std::size_t m = pots.size();
        std::vector<double> vals(c.replicas * (m + 1));
        parallel_for(c.replicas, c.threads, [&](std::uint64_t i) {
            Rng rng = cx.rng({ju, i});
            auto s = ws.sample(rng);
            auto lt = local_times(g, s, rng.split(0xfeed));
            for (std::size_t q = 0; q < m; ++q) {
                SiteSet S(d, pots[q].sites);
                double e = 0;
                for (std::size_t k = 0; k < S.size(); ++k) {
                    // potential value at S[k]
                    double v = 0;
                    for (std::size_t t = 0; t < pots[q].sites.size(); ++t)
                        if (pots[q].sites[t] == S[k]) v = pots[q].values[t];
                    e += v * lt.times[idx[q][k]];
                }
                vals[i * (m + 1) + q] = std::exp(e);
            }
            vals[i * (m + 1) + m] = lt.times[zero];
        });
        cx.wall = seconds_since(t0);
        const double bias = ws.bias_bound();
        for (std::size_t q = 0; q < m; ++q) {
            Welford w;
            double vmax = 0;
            for (std::uint64_t i = 0; i < c.replicas; ++i) {
                w.add(vals[i * (m + 1) + q]);
                vmax = std::max(vmax, vals[i * (m + 1) + q]);
            }
            SiteSet S(d, pots[q].sites);
            std::vector<double> V(S.size());
            for (std::size_t k = 0; k < S.size(); ++k)
                for (std::size_t t = 0; t < pots[q].sites.size(); ++t)
                    if (pots[q].sites[t] == S[k]) V[k] = pots[q].values[t];
            const double pred = laplace_functional_prediction(tables[q], V, u);
            std::string par = kv({{"u", u}}) + ";V=" + pots[q].name;
            if (pots[q].name != "zero") par += ";theta=" + fmt(pots[q].theta);
            cx.add(par, "laplace", w.mean(), w.se(), pred, c.replicas, bias * vmax);
        }
        Welford lw;
        for (std::uint64_t i = 0; i < c.replicas; ++i) lw.add(vals[i * (m + 1) + m]);
        cx.add(kv({{"u", u}}), "mean_local_time", lw.mean(), lw.se(), u, c.replicas, bias);
    }
}

void run_coarse_fpp(Ctx& cx) {
    const auto& c = cx.c;
    const Graph& g = cx.g;
    const int d = g.dim();
    const WeightKind kind = parse_weight_kind(c.weights);
    const auto stride = renorm_stride(c.R, d);
    for (std::size_t jn = 0; jn < c.N.size(); ++jn) {
        const double N = c.N[jn];
        auto t0 = Clock::now();
        const double margin = kind == WeightKind::box_nonempty ? stride * (1 + std::sqrt(double(d))) + 2
                                                               : stride + c.R + 2;
        SiteSet W = ball(g, origin(), N + margin);
        const auto capW = equilibrium_and_capacity(g, W);
        RenormLattice lat = renorm_sites(g, c.R, W);
        // the neighbourhoods a weight looks at, along the e_1 axis until the
        // first renormalised site beyond N
        std::vector<Site> L;
        for (std::int64_t k = 0;; ++k) {
            Site z = unit_vector(0, k * stride);
            if (kind == WeightKind::box_nonempty) {
                auto cell = lat.cell_sites(z, W);
                L.insert(L.end(), cell.begin(), cell.end());
            } else {
                SiteSet b = ball(g, z, c.R);
                L.insert(L.end(), b.begin(), b.end());
            }
            if (g.distance(origin(), z) > N) break;
        }
        const auto capL = equilibrium_and_capacity(g, SiteSet(d, L));
        const auto cell0 = lat.cell_sites(origin(), W);
        const auto capCell = equilibrium_and_capacity(g, SiteSet(d, cell0));
        const double setup = seconds_since(t0);
        std::vector<std::size_t> trend_idx;
        for (std::size_t ju = 0; ju < c.u.size(); ++ju) {
            const double u = c.u[ju];
            t0 = Clock::now();
            WindowSampler ws(g, capW, u, sampler_params(c));
            struct Rep {
                double distance;
                std::size_t path;
                bool typical0;
            };
            std::vector<Rep> reps(c.replicas);
            parallel_for(c.replicas, c.threads, [&](std::uint64_t i) {
                Rng rng = cx.rng({jn, ju, i});
                auto s = ws.sample(rng);
                auto w = build_weights(g, s, u, kind, c.R, Monotonicity::increasing, c.kappa);
                auto r = fpp_distance(g, w, origin(), FppTarget::exit(N));
                reps[i] = {r.distance, r.path.size(), w.at(origin()) > 0};
            });
            std::uint64_t k_event = 0, k_typ = 0;
            Welford dist;
            for (const auto& r : reps) {
                k_event += r.distance <= c.s * N / c.R;
                k_typ += r.typical0;
                dist.add(r.distance);
            }
            cx.wall = seconds_since(t0) + setup;
            const double bias = ws.bias_bound();
            const std::string par = kv({{"N", N}, {"u", u}, {"R", c.R}, {"s", c.s}}) + ";weights=" + c.weights;
            const double ev_est = cx.add_frequency(par, "P_event", k_event, c.replicas, kNaN, bias).estimate;
            const double cell_ref = kind == WeightKind::box_nonempty ? 1 - std::exp(-u * capCell.value) : kNaN;
            cx.add_frequency(par, "cell_typical", k_typ, c.replicas, cell_ref, bias);
            cx.add(par, "mean_distance", dist.mean(), dist.se(), kNaN, c.replicas, bias * N / c.R);
            trend_idx.push_back(cx.out.size());
            cx.add_exponent(par, "normalized_exponent", k_event, c.replicas, N, u, cx.sc.C_beta);
            cx.add(par, "lower_bound", std::exp(-u * capL.upper), 0, ev_est, 0);
            for (const auto& r : reps)
                cx.fpp_rows += std::to_string(c.seed) + "," + fmt(u) + "," + fmt(N) + "," + fmt(c.R) + "," + c.weights +
                               "," + fmt(r.distance) + "," + std::to_string(r.path) + "," + fmt(bias) + "\n";
        }
        std::vector<const EstimateRecord*> trend;
        for (auto i : trend_idx) trend.push_back(&cx.out[i]);
        add_trend(cx, kv({{"N", N}, {"R", c.R}, {"s", c.s}}), trend);
    }
}

}  // namespace

RunResult run(const ExperimentConfig& config) {
    RunResult res;
    res.config = config.with_defaults();
    res.config.validate();
    const auto& c = res.config;
    auto t0 = Clock::now();
    res.constants = lattice_constants(c.d, c.scale);
    Ctx cx{c,
           Graph::lattice(c.d, c.distance, c.scale),
           ScalingConstants::lattice(c.d, c.scale),
           c.hash(),
           static_cast<std::uint64_t>(c.kind) + 1,
           res.records,
           res.fpp_rows};
    // runners keep record indices, not references: out grows while they run
    switch (c.kind) {
        case ExperimentKind::emptiness_identity: run_emptiness(cx); break;
        case ExperimentKind::laplace_bridge: run_bridge(cx); break;
        case ExperimentKind::green_asymptotics: run_green(cx); break;
        case ExperimentKind::tube_capacity: run_tube(cx); break;
        case ExperimentKind::fpp_scaling: run_fpp_scaling(cx); break;
        case ExperimentKind::local_uniqueness: run_local_uniqueness(cx); break;
        case ExperimentKind::walk_capacity_tail: run_walk_capacity_tail(cx); break;
        case ExperimentKind::laplace_functional: run_laplace_functional(cx); break;
        case ExperimentKind::coarse_fpp_event: run_coarse_fpp(cx); break;
    }
    res.wall_time = seconds_since(t0);
    for (auto& r : res.records) {
        if (r.n_replicas > 0 && r.se > 0 && r.bias_bound > r.se) {
            r.flag = r.flag.empty() ? "bias_exceeds_se" : r.flag + "|bias_exceeds_se";
            res.exit_code = 3;
        }
    }
    return res;
}

}  // namespace rilab
