#include "rilab/interlacements.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace rilab {

namespace {

constexpr int kSchemaVersion = 1;

CapacityEstimate window_capacity(const Graph& g, const SiteSet& W) {
    if (g.is_lattice()) return equilibrium_and_capacity(g, W, CapacityMethod::green_matrix);
    return equilibrium_and_capacity(g, W, CapacityMethod::exact_killed_solve);
}

}  // namespace

WindowSampler::WindowSampler(const Graph& g, SiteSet W, double u_max, const SamplerParams& p)
    : g_(&g), u_(u_max) {
    if (W.empty()) {
        cap_.set = std::move(W);
    } else {
        cap_ = window_capacity(g, W);
    }
    init(p);
}

WindowSampler::WindowSampler(const Graph& g, CapacityEstimate cap, double u_max, const SamplerParams& p)
    : g_(&g), cap_(std::move(cap)), u_(u_max) {
    if (!cap_.set.empty() && !cap_.has_equilibrium())
        throw std::invalid_argument("WindowSampler: capacity without equilibrium measure");
    init(p);
}

void WindowSampler::init(const SamplerParams& p) {
    if (!(u_ > 0)) throw std::invalid_argument("WindowSampler: level must be positive");
    budget_ = p.rejection_budget;
    max_steps_ = p.max_steps;
    backward_ = p.sample_backward;
    const SiteSet& W = cap_.set;
    if (W.empty()) return;
    double s = 0;
    for (double e : cap_.equilibrium) {
        s += e;
        cum_.push_back(s);
    }
    for (double& c : cum_) c /= s;
    center_ = set_center(W);
    for (const auto& x : W) radius_euc_ = std::max(radius_euc_, norm2(x - center_, g_->dim()));
    const double R = std::max(1.0, set_radius(*g_, W, center_));
    GreenConstants gc = constants_for(*g_);
    const double mean = u_ * std::max(cap_.upper, cap_.value);
    double rho = p.kill_radius;
    if (rho <= 0) {
        double K = gc.factor_for(p.bias_target / std::max(mean, 1e-12));
        rho = std::isfinite(K) ? std::min(1e9, std::max(3.0, K) * R) : 1e9;
    }
    if (!(rho > 2 * R)) throw std::invalid_argument("WindowSampler: kill radius must exceed 2 radius(W)");
    kill_ = make_kill_region(*g_, center_, rho);
    eps_ = std::min(1.0, gc.entrance_bound(rho / R));
}

double WindowSampler::bias_bound() const {
    return std::min(1.0, eps_ * u_ * std::max(cap_.upper, cap_.value));
}

std::uint64_t sample_count(const CapacityEstimate& cap, double u, Rng& rng) {
    if (!(u > 0)) throw std::invalid_argument("sample_count: level must be positive");
    const double mean = u * cap.value;
    if (mean <= 0) return 0;
    std::poisson_distribution<std::uint64_t> pd(mean);
    return pd(rng);
}

std::uint64_t WindowSampler::sample_count(Rng& rng) const {
    if (cap_.set.empty()) return 0;
    return rilab::sample_count(cap_, u_, rng);
}

std::int32_t WindowSampler::sample_entry(Rng& rng) const {
    const double v = rng.uniform();
    auto it = std::upper_bound(cum_.begin(), cum_.end(), v);
    auto i = std::min<std::size_t>(static_cast<std::size_t>(it - cum_.begin()), cum_.size() - 1);
    // skip sites with zero equilibrium mass (interior points)
    while (cap_.equilibrium[i] == 0 && i + 1 < cum_.size()) ++i;
    return static_cast<std::int32_t>(i);
}

Trajectory WindowSampler::sample_trajectory(Rng& rng) const {
    return sample_trajectory_from(sample_entry(rng), rng);
}

Trajectory WindowSampler::sample_trajectory_from(std::int32_t entry, Rng& rng) const {
    const SiteSet& W = cap_.set;
    Trajectory t;
    t.entry = entry;
    const Site x0 = W[entry];

    // backward part: rejection until a walk leaves the kill region before
    // coming back to W
    t.backward_attempts = 0;
    while (backward_) {
        if (t.backward_attempts >= budget_)
            throw std::runtime_error("sample_trajectory: rejection budget of " + std::to_string(budget_) +
                                     " exhausted at entry " + to_string(x0, g_->dim()) + " (escape probability " +
                                     std::to_string(cap_.equilibrium[entry] / g_->lambda(x0)) + ")");
        ++t.backward_attempts;
        Site y = step(*g_, x0, rng);
        if (W.contains(y)) continue;
        auto ex = walk_until_hit_or_exit(*g_, y, W, center_, radius_euc_, kill_, rng, max_steps_);
        if (ex.fate == Fate::escaped) break;
        if (ex.fate == Fate::truncated)
            throw std::runtime_error("sample_trajectory: backward candidate hit max_steps");
    }

    // forward part
    Site y = x0;
    t.forward.push_back(entry);
    std::uint64_t steps = 0;
    while (true) {
        y = step(*g_, y, rng);
        if (++steps > max_steps_) {
            t.truncated = true;
            break;
        }
        auto i = W.index_of(y);
        if (i >= 0) {
            t.forward.push_back(static_cast<std::int32_t>(i));
            continue;
        }
        auto ex = walk_until_hit_or_exit(*g_, y, W, center_, radius_euc_, kill_, rng, max_steps_);
        if (ex.fate == Fate::escaped) break;
        if (ex.fate == Fate::truncated) {
            t.truncated = true;
            break;
        }
        y = ex.site;
        t.forward.push_back(static_cast<std::int32_t>(W.index_of(y)));
    }
    return t;
}

bool WindowSampler::trajectory_hits(const std::vector<char>& flags, Rng& rng) const {
    const SiteSet& W = cap_.set;
    if (flags.size() != W.size()) throw std::invalid_argument("trajectory_hits: flags do not match the window");
    const auto entry = sample_entry(rng);
    if (flags[entry]) return true;
    Site y = W[entry];
    std::uint64_t steps = 0;
    while (true) {
        y = step(*g_, y, rng);
        if (++steps > max_steps_) throw std::runtime_error("trajectory_hits: forward walk hit max_steps");
        auto i = W.index_of(y);
        if (i < 0) {
            auto ex = walk_until_hit_or_exit(*g_, y, W, center_, radius_euc_, kill_, rng, max_steps_);
            if (ex.fate == Fate::escaped) return false;
            if (ex.fate == Fate::truncated) throw std::runtime_error("trajectory_hits: forward walk hit max_steps");
            y = ex.site;
            i = W.index_of(y);
        }
        if (flags[i]) return true;
    }
}

InterlacementSample WindowSampler::sample(Rng& rng) const {
    InterlacementSample s;
    s.window = cap_.set;
    s.u = u_;
    s.kill_radius = kill_.rho;
    s.truncation_bias_bound = bias_bound();
    const auto n = sample_count(rng);
    s.trajectories.reserve(n);
    for (std::uint64_t k = 0; k < n; ++k) {
        Trajectory t = sample_trajectory(rng);
        t.label = u_ * rng.uniform_pos();
        s.trajectories.push_back(std::move(t));
    }
    return s;
}

InterlacementSample sample_window(const Graph& g, const SiteSet& W, double u, double kill_radius, Rng& rng) {
    if (W.empty()) {
        InterlacementSample s;
        s.window = W;
        s.u = u;
        s.kill_radius = kill_radius;
        return s;
    }
    SamplerParams p;
    p.kill_radius = kill_radius;
    WindowSampler ws(g, W, u, p);
    return ws.sample(rng);
}

std::vector<char> InterlacementSample::occupied_flags(double v) const {
    std::vector<char> occ(window.size(), 0);
    for (const auto& t : trajectories)
        if (t.label <= v)
            for (auto i : t.forward) occ[i] = 1;
    return occ;
}

SiteSet InterlacementSample::occupied(double v) const {
    auto occ = occupied_flags(v);
    std::vector<Site> out;
    for (std::size_t i = 0; i < occ.size(); ++i)
        if (occ[i]) out.push_back(window[i]);
    return SiteSet(window.dim(), std::move(out));
}

LocalTimeField local_times(const Graph& g, const InterlacementSample& s, const Rng& rng, double v) {
    LocalTimeField f;
    f.window = s.window;
    f.stream = rng.stream();
    f.times = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.window.size()));
    for (std::size_t k = 0; k < s.trajectories.size(); ++k) {
        const auto& t = s.trajectories[k];
        if (t.label > v) continue;
        Rng r = rng.split(k);
        for (auto i : t.forward) f.times[i] += r.exponential();
    }
    for (std::size_t i = 0; i < s.window.size(); ++i) f.times[static_cast<Eigen::Index>(i)] /= g.lambda(s.window[i]);
    return f;
}

std::vector<SiteSet> coupled_levels(const InterlacementSample& s, const std::vector<double>& levels) {
    if (!std::is_sorted(levels.begin(), levels.end())) throw std::invalid_argument("coupled_levels: levels not sorted");
    std::vector<SiteSet> out;
    for (double v : levels) {
        if (v > s.u) throw std::invalid_argument("coupled_levels: level above the sample level");
        out.push_back(s.occupied(v));
    }
    return out;
}

// ---------------------------------------------------------------- JSON

namespace {

using nlohmann::json;

json site_json(const Site& x, int d) {
    json a = json::array();
    for (int i = 0; i < d; ++i) a.push_back(x[i]);
    return a;
}

Site site_from(const json& a) {
    Site x{};
    for (std::size_t i = 0; i < a.size(); ++i) x[i] = a[i].get<std::int64_t>();
    return x;
}

// Unit move between lattice sites: 2*axis + (negative ? 1 : 0), or -1.
int move_code(const Site& a, const Site& b, int d) {
    int code = -1;
    for (int i = 0; i < d; ++i) {
        const auto diff = b[i] - a[i];
        if (diff == 0) continue;
        if (code >= 0 || (diff != 1 && diff != -1)) return -1;
        code = 2 * i + (diff < 0 ? 1 : 0);
    }
    return code;
}

}  // namespace

std::string to_json(const InterlacementSample& s) {
    const int d = s.window.dim();
    json j;
    j["schema_version"] = kSchemaVersion;
    j["dim"] = d;
    j["u"] = s.u;
    j["kill_radius"] = s.kill_radius;
    j["truncation_bias_bound"] = s.truncation_bias_bound;
    json win = json::array();
    for (const auto& x : s.window) win.push_back(site_json(x, d));
    j["window"] = std::move(win);
    json trajs = json::array();
    for (const auto& t : s.trajectories) {
        json jt;
        jt["label"] = t.label;
        jt["entry"] = site_json(s.window[t.entry], d);
        jt["backward_attempts"] = t.backward_attempts;
        jt["truncated"] = t.truncated;
        // segments [start, [[move, run], ...]], split where the walk leaves W
        json segs = json::array();
        json start, runs = json::array();
        Site prev{};
        for (std::size_t k = 0; k < t.forward.size(); ++k) {
            const Site& x = s.window[t.forward[k]];
            const int code = k == 0 ? -1 : move_code(prev, x, d);
            if (code < 0) {
                if (k > 0) segs.push_back(json::array({start, runs}));
                start = site_json(x, d);
                runs = json::array();
            } else if (!runs.empty() && runs.back()[0].get<int>() == code) {
                runs.back()[1] = runs.back()[1].get<std::int64_t>() + 1;
            } else {
                runs.push_back(json::array({code, 1}));
            }
            prev = x;
        }
        if (!t.forward.empty()) segs.push_back(json::array({start, runs}));
        jt["forward"] = std::move(segs);
        trajs.push_back(std::move(jt));
    }
    j["trajectories"] = std::move(trajs);
    return j.dump();
}

InterlacementSample sample_from_json(const std::string& text) {
    const json j = json::parse(text);
    if (j.at("schema_version").get<int>() != kSchemaVersion)
        throw std::invalid_argument("sample_from_json: unsupported schema_version");
    const int d = j.at("dim").get<int>();
    InterlacementSample s;
    s.u = j.at("u").get<double>();
    s.kill_radius = j.at("kill_radius").get<double>();
    s.truncation_bias_bound = j.at("truncation_bias_bound").get<double>();
    std::vector<Site> win;
    for (const auto& a : j.at("window")) win.push_back(site_from(a));
    s.window = SiteSet(d, std::move(win));
    auto index = [&](const Site& x) {
        auto i = s.window.index_of(x);
        if (i < 0) throw std::invalid_argument("sample_from_json: site outside the window");
        return static_cast<std::int32_t>(i);
    };
    for (const auto& jt : j.at("trajectories")) {
        Trajectory t;
        t.label = jt.at("label").get<double>();
        t.entry = index(site_from(jt.at("entry")));
        t.backward_attempts = jt.at("backward_attempts").get<std::uint32_t>();
        t.truncated = jt.at("truncated").get<bool>();
        for (const auto& seg : jt.at("forward")) {
            Site x = site_from(seg.at(0));
            t.forward.push_back(index(x));
            for (const auto& run : seg.at(1)) {
                const int code = run.at(0).get<int>();
                const auto n = run.at(1).get<std::int64_t>();
                for (std::int64_t r = 0; r < n; ++r) {
                    x[code / 2] += (code & 1) ? -1 : 1;
                    t.forward.push_back(index(x));
                }
            }
        }
        s.trajectories.push_back(std::move(t));
    }
    return s;
}

}  // namespace rilab
