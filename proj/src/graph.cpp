#include "rilab/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace rilab {

Site make_site(std::initializer_list<std::int64_t> c) {
    if (c.size() > kMaxDim) throw std::invalid_argument("make_site: too many coordinates");
    Site s{};
    std::copy(c.begin(), c.end(), s.begin());
    return s;
}

std::int64_t norm2_sq(const Site& x, int dim) {
    std::int64_t s = 0;
    for (int i = 0; i < dim; ++i) s += x[i] * x[i];
    return s;
}

double norm2(const Site& x, int dim) { return std::sqrt(static_cast<double>(norm2_sq(x, dim))); }

std::int64_t norm1(const Site& x, int dim) {
    std::int64_t s = 0;
    for (int i = 0; i < dim; ++i) s += x[i] < 0 ? -x[i] : x[i];
    return s;
}

Site operator+(const Site& a, const Site& b) {
    Site s;
    for (int i = 0; i < kMaxDim; ++i) s[i] = a[i] + b[i];
    return s;
}

Site operator-(const Site& a, const Site& b) {
    Site s;
    for (int i = 0; i < kMaxDim; ++i) s[i] = a[i] - b[i];
    return s;
}

std::string to_string(const Site& x, int dim) {
    std::string s = "(";
    for (int i = 0; i < dim; ++i) {
        if (i) s += ",";
        s += std::to_string(x[i]);
    }
    return s + ")";
}

DistanceKind parse_distance_kind(const std::string& s) {
    if (s == "euclidean") return DistanceKind::euclidean;
    if (s == "graph") return DistanceKind::graph;
    throw std::invalid_argument("unknown distance kind: " + s);
}

WeightScale parse_weight_scale(const std::string& s) {
    if (s == "unit") return WeightScale::unit;
    if (s == "normalized") return WeightScale::normalized;
    throw std::invalid_argument("unknown weight scale: " + s);
}

std::string to_string(DistanceKind k) { return k == DistanceKind::euclidean ? "euclidean" : "graph"; }
std::string to_string(WeightScale s) { return s == WeightScale::unit ? "unit" : "normalized"; }

double Box::volume() const {
    double v = 1;
    for (int i = 0; i < dim; ++i) v *= static_cast<double>(extent(i));
    return v;
}

// ---------------------------------------------------------------- SiteSet

SiteSet::SiteSet(int dim, std::vector<Site> sites) : dim_(dim), sites_(std::move(sites)) {
    for (auto& s : sites_)
        for (int i = dim_; i < kMaxDim; ++i) s[i] = 0;
    std::sort(sites_.begin(), sites_.end());
    sites_.erase(std::unique(sites_.begin(), sites_.end()), sites_.end());
    build_index();
}

void SiteSet::build_index() {
    box_.dim = dim_;
    if (sites_.empty()) return;
    box_.lo = box_.hi = sites_.front();
    for (const auto& s : sites_)
        for (int i = 0; i < dim_; ++i) {
            box_.lo[i] = std::min(box_.lo[i], s[i]);
            box_.hi[i] = std::max(box_.hi[i], s[i]);
        }
    double vol = box_.volume();
    use_dense_ = vol <= std::max(4096.0, 16.0 * static_cast<double>(sites_.size())) && vol <= double(1 << 27);
    if (use_dense_) {
        dense_.assign(static_cast<std::size_t>(vol), -1);
        for (std::size_t k = 0; k < sites_.size(); ++k) {
            std::int64_t lin = 0;
            for (int i = 0; i < dim_; ++i) lin = lin * box_.extent(i) + (sites_[k][i] - box_.lo[i]);
            dense_[lin] = static_cast<std::int32_t>(k);
        }
    } else {
        sparse_.reserve(sites_.size() * 2);
        for (std::size_t k = 0; k < sites_.size(); ++k) sparse_.emplace(sites_[k], static_cast<std::int32_t>(k));
    }
}

std::int64_t SiteSet::index_of(const Site& x) const {
    if (sites_.empty() || !box_.contains(x)) return -1;
    if (use_dense_) {
        std::int64_t lin = 0;
        for (int i = 0; i < dim_; ++i) lin = lin * box_.extent(i) + (x[i] - box_.lo[i]);
        return dense_[lin];
    }
    Site y = x;
    for (int i = dim_; i < kMaxDim; ++i) y[i] = 0;
    auto it = sparse_.find(y);
    return it == sparse_.end() ? -1 : it->second;
}

bool SiteSet::subset_of(const SiteSet& o) const {
    for (const auto& s : sites_)
        if (!o.contains(s)) return false;
    return true;
}

SiteSet set_union(const SiteSet& a, const SiteSet& b) {
    std::vector<Site> v = a.sites();
    v.insert(v.end(), b.sites().begin(), b.sites().end());
    return SiteSet(std::max(a.dim(), b.dim()), std::move(v));
}

// ---------------------------------------------------------------- Graph

Graph Graph::lattice(int d, DistanceKind kind, WeightScale scale) {
    if (d < 3) throw std::invalid_argument("make_lattice: d < 3 gives a recurrent walk");
    if (d > kMaxDim) throw std::invalid_argument("make_lattice: d > 5 unsupported");
    Graph g;
    g.dim_ = d;
    g.lattice_ = true;
    g.kind_ = kind;
    g.scale_ = scale;
    g.alpha_ = d;
    g.nu_ = d - 2;
    g.edge_w_ = scale == WeightScale::unit ? 1.0 : 1.0 / (2.0 * d);
    return g;
}

Graph Graph::from_table(int dim, std::vector<Site> coords,
                        const std::vector<std::tuple<int, int, double>>& edges, DistanceKind kind,
                        double alpha, double nu) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("graph table: bad dimension");
    Graph g;
    g.dim_ = dim;
    g.lattice_ = false;
    g.kind_ = kind;
    g.alpha_ = alpha;
    g.nu_ = nu;
    g.edge_w_ = 0;
    g.coords_ = std::move(coords);
    const auto n = static_cast<std::int64_t>(g.coords_.size());
    for (std::int64_t i = 0; i < n; ++i) {
        if (!g.id_.emplace(g.coords_[i], static_cast<std::int32_t>(i)).second)
            throw std::invalid_argument("graph table: duplicate site coordinates");
    }
    std::map<std::pair<int, int>, double> w;
    for (auto [a, b, x] : edges) {
        if (a < 0 || b < 0 || a >= n || b >= n) throw std::invalid_argument("graph table: edge index out of range");
        if (a == b) throw std::invalid_argument("graph table: self loop (lambda_{x,x} must vanish)");
        if (!(x >= 0)) throw std::invalid_argument("graph table: negative weight");
        auto key = std::minmax(a, b);
        w[{key.first, key.second}] += x;
    }
    std::vector<std::vector<std::pair<int, double>>> nb(n);
    for (auto& [k, x] : w) {
        if (x == 0) continue;
        nb[k.first].push_back({k.second, x});
        nb[k.second].push_back({k.first, x});
    }
    g.off_.assign(n + 1, 0);
    g.lambda_.assign(n, 0);
    for (std::int64_t i = 0; i < n; ++i) {
        std::sort(nb[i].begin(), nb[i].end());
        g.off_[i + 1] = g.off_[i] + static_cast<std::int64_t>(nb[i].size());
        for (auto [j, x] : nb[i]) {
            g.adj_.push_back(j);
            g.wts_.push_back(x);
            g.lambda_[i] += x;
        }
    }
    return g;
}

Graph Graph::load(const std::string& path, DistanceKind kind) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open graph file: " + path);
    int dim = 0;
    double alpha = 0, nu = 0;
    std::map<long long, Site> sites;
    std::vector<std::tuple<long long, long long, double>> raw;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ss(line);
        std::string head;
        if (!(ss >> head)) continue;
        auto fail = [&](const std::string& m) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + m);
        };
        if (head == "dim") {
            if (!(ss >> dim) || dim < 1 || dim > kMaxDim) fail("bad dim");
        } else if (head == "alpha") {
            if (!(ss >> alpha)) fail("bad alpha");
        } else if (head == "nu") {
            if (!(ss >> nu)) fail("bad nu");
        } else if (head == "site") {
            if (dim == 0) fail("dim must precede site lines");
            long long id;
            Site s{};
            if (!(ss >> id)) fail("bad site id");
            for (int i = 0; i < dim; ++i)
                if (!(ss >> s[i])) fail("missing coordinate");
            if (!sites.emplace(id, s).second) fail("duplicate site id");
        } else {
            long long a, b;
            double x;
            try {
                a = std::stoll(head);
            } catch (...) {
                fail("unrecognised line");
            }
            if (!(ss >> b >> x)) fail("edge lines are 'x_id y_id weight'");
            raw.emplace_back(a, b, x);
        }
    }
    if (dim == 0) throw std::runtime_error(path + ": missing dim line");
    std::vector<Site> coords;
    std::map<long long, int> index;
    for (auto& [id, s] : sites) {
        index[id] = static_cast<int>(coords.size());
        coords.push_back(s);
    }
    std::vector<std::tuple<int, int, double>> edges;
    for (auto [a, b, x] : raw) {
        auto ia = index.find(a), ib = index.find(b);
        if (ia == index.end() || ib == index.end())
            throw std::runtime_error(path + ": edge refers to an unknown site id");
        edges.emplace_back(ia->second, ib->second, x);
    }
    return from_table(dim, std::move(coords), edges, kind, alpha, nu);
}

std::int64_t Graph::table_id(const Site& x) const {
    auto it = id_.find(x);
    return it == id_.end() ? -1 : it->second;
}

bool Graph::contains(const Site& x) const { return lattice_ || id_.count(x) > 0; }

int Graph::degree(const Site& x) const {
    if (lattice_) return 2 * dim_;
    auto i = table_id(x);
    return i < 0 ? 0 : static_cast<int>(off_[i + 1] - off_[i]);
}

double Graph::lambda(const Site& x) const {
    if (lattice_) return 2 * dim_ * edge_w_;
    auto i = table_id(x);
    return i < 0 ? 0.0 : lambda_[i];
}

double Graph::weight(const Site& x, const Site& y) const {
    if (lattice_) return norm1(x - y, dim_) == 1 ? edge_w_ : 0.0;
    auto i = table_id(x), j = table_id(y);
    if (i < 0 || j < 0) return 0.0;
    for (auto k = off_[i]; k < off_[i + 1]; ++k)
        if (adj_[k] == j) return wts_[k];
    return 0.0;
}

double Graph::distance(const Site& x, const Site& y) const {
    if (kind_ == DistanceKind::euclidean) return norm2(x - y, dim_);
    if (lattice_) return static_cast<double>(norm1(x - y, dim_));
    auto s = table_id(x), t = table_id(y);
    if (s < 0 || t < 0) throw std::invalid_argument("distance: site not in graph");
    std::vector<std::int64_t> dist(coords_.size(), -1);
    std::queue<std::int64_t> q;
    dist[s] = 0;
    q.push(s);
    while (!q.empty()) {
        auto v = q.front();
        q.pop();
        if (v == t) return static_cast<double>(dist[v]);
        for (auto k = off_[v]; k < off_[v + 1]; ++k)
            if (dist[adj_[k]] < 0) {
                dist[adj_[k]] = dist[v] + 1;
                q.push(adj_[k]);
            }
    }
    return std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------- sets

SiteSet ball(const Graph& g, const Site& x, double r) {
    if (r < 0) throw std::invalid_argument("ball: negative radius");
    const int d = g.dim();
    std::vector<Site> out;
    if (!g.is_lattice()) {
        if (g.distance_kind() == DistanceKind::graph) {
            // BFS truncated at depth r.
            auto s = g.table_id(x);
            if (s < 0) throw std::invalid_argument("ball: centre not in graph");
            const auto& off = g.offsets();
            const auto& adj = g.adjacency();
            std::vector<std::int64_t> dist(g.table_sites().size(), -1);
            std::queue<std::int64_t> q;
            dist[s] = 0;
            q.push(s);
            while (!q.empty()) {
                auto v = q.front();
                q.pop();
                out.push_back(g.table_sites()[v]);
                if (dist[v] + 1 > r) continue;
                for (auto k = off[v]; k < off[v + 1]; ++k)
                    if (dist[adj[k]] < 0) {
                        dist[adj[k]] = dist[v] + 1;
                        q.push(adj[k]);
                    }
            }
        } else {
            for (const auto& y : g.table_sites())
                if (g.distance(x, y) <= r + 1e-9) out.push_back(y);
        }
        return SiteSet(d, std::move(out));
    }
    const auto R = static_cast<std::int64_t>(std::floor(r + 1e-9));
    const bool euc = g.distance_kind() == DistanceKind::euclidean;
    const auto r2 = static_cast<std::int64_t>(std::floor(r * r + 1e-9));
    Site off{};
    for (int i = 0; i < d; ++i) off[i] = -R;
    while (true) {
        bool in = euc ? norm2_sq(off, d) <= r2 : norm1(off, d) <= R;
        if (in) out.push_back(x + off);
        int i = d - 1;
        while (i >= 0 && off[i] == R) off[i--] = -R;
        if (i < 0) break;
        ++off[i];
    }
    return SiteSet(d, std::move(out));
}

SiteSet box_sites(int dim, const Site& lo, const Site& hi) {
    std::vector<Site> out;
    for (int i = 0; i < dim; ++i)
        if (hi[i] < lo[i]) return SiteSet(dim);
    Site s = lo;
    for (int i = dim; i < kMaxDim; ++i) s[i] = 0;
    while (true) {
        out.push_back(s);
        int i = dim - 1;
        while (i >= 0 && s[i] == hi[i]) {
            s[i] = lo[i];
            --i;
        }
        if (i < 0) break;
        ++s[i];
    }
    return SiteSet(dim, std::move(out));
}

SiteSet boundary(const Graph& g, const SiteSet& A) {
    std::vector<Site> out;
    for (const auto& x : A) {
        bool edge = false;
        g.for_each_neighbor(x, [&](const Site& y, double) {
            if (!edge && !A.contains(y)) edge = true;
        });
        if (edge) out.push_back(x);
    }
    return SiteSet(A.dim(), std::move(out));
}

SiteSet outer_boundary(const Graph& g, const SiteSet& A) {
    std::vector<Site> out;
    for (const auto& x : A)
        g.for_each_neighbor(x, [&](const Site& y, double) {
            if (!A.contains(y)) out.push_back(y);
        });
    return SiteSet(A.dim(), std::move(out));
}

SiteSet tube_sites(const Graph& g, std::int64_t N, std::int64_t p) {
    if (p > N) throw std::invalid_argument("tube_sites: p > N");
    if (N < 0 || p < 0) throw std::invalid_argument("tube_sites: negative size");
    Site lo{}, hi{};
    hi[0] = N;
    for (int i = 1; i < g.dim(); ++i) {
        lo[i] = -p;
        hi[i] = p;
    }
    return box_sites(g.dim(), lo, hi);
}

Site set_center(const SiteSet& A) {
    Site c{};
    if (A.empty()) return c;
    for (int i = 0; i < A.dim(); ++i) {
        auto s = A.box().lo[i] + A.box().hi[i];
        c[i] = s >= 0 ? s / 2 : -((-s + 1) / 2);
    }
    return c;
}

double set_radius(const Graph& g, const SiteSet& A, const Site& c) {
    double r = 0;
    for (const auto& x : A) r = std::max(r, g.distance(c, x));
    return r;
}

// ---------------------------------------------------------------- renormalised lattice

std::int64_t renorm_stride(double L, int d) {
    if (L < 1) throw std::invalid_argument("renorm_sites: L < 1");
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(L / std::sqrt(double(d)) + 1e-12)));
}

namespace {
std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}
}  // namespace

Site RenormLattice::cell_of(const Site& x) const {
    Site z{};
    const auto s = stride;
    for (int i = 0; i < window.dim; ++i) {
        // z - s/2 < x <= z + s/2  <=>  z = s * ceil((2x - s) / (2s))
        z[i] = s * -floor_div(-(2 * x[i] - s), 2 * s);
    }
    return z;
}

std::vector<Site> RenormLattice::cell_sites(const Site& z, const SiteSet& window_set) const {
    std::vector<Site> out;
    Site lo{}, hi{};
    for (int i = 0; i < window.dim; ++i) {
        // integer x with z - s/2 < x <= z + s/2
        lo[i] = z[i] + floor_div(-stride, 2) + 1;
        hi[i] = z[i] + floor_div(stride, 2);
    }
    for (const auto& x : box_sites(window.dim, lo, hi))
        if (window_set.contains(x)) out.push_back(x);
    return out;
}

RenormLattice renorm_sites(const Graph& g, double L, const SiteSet& window) {
    if (!g.is_lattice()) throw std::invalid_argument("renorm_sites: lattice graphs only");
    RenormLattice r;
    r.L = L;
    r.stride = renorm_stride(L, g.dim());
    r.window = window.box();
    r.window.dim = g.dim();
    std::vector<Site> z;
    z.reserve(window.size() / std::max<std::int64_t>(1, r.stride) + 1);
    for (const auto& x : window) z.push_back(r.cell_of(x));
    r.sites = SiteSet(g.dim(), std::move(z));
    return r;
}

}  // namespace rilab
