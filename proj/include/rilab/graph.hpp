#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

namespace rilab {

inline constexpr int kMaxDim = 5;

// Integer coordinates; entries past the graph dimension stay zero.
using Site = std::array<std::int64_t, kMaxDim>;

struct SiteHash {
    std::size_t operator()(const Site& s) const noexcept {
        std::uint64_t h = 0x9e3779b97f4a7c15ULL;
        for (auto c : s) {
            h ^= static_cast<std::uint64_t>(c) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
            h *= 0xbf58476d1ce4e5b9ULL;
        }
        return static_cast<std::size_t>(h ^ (h >> 31));
    }
};

inline Site origin() { return Site{}; }
inline Site unit_vector(int i, std::int64_t len = 1) {
    Site s{};
    s[i] = len;
    return s;
}
Site make_site(std::initializer_list<std::int64_t> c);

std::int64_t norm2_sq(const Site& x, int dim);
double norm2(const Site& x, int dim);
std::int64_t norm1(const Site& x, int dim);
Site operator+(const Site& a, const Site& b);
Site operator-(const Site& a, const Site& b);
std::string to_string(const Site& x, int dim);

enum class DistanceKind { euclidean, graph };

// unit: every lattice edge has weight 1 (lambda_x = 2d).
// normalized: every lattice edge has weight 1/(2d) (lambda_x = 1).
enum class WeightScale { unit, normalized };

DistanceKind parse_distance_kind(const std::string& s);
WeightScale parse_weight_scale(const std::string& s);
std::string to_string(DistanceKind k);
std::string to_string(WeightScale s);

struct Box {
    int dim = 0;
    Site lo{}, hi{};

    bool contains(const Site& x) const {
        for (int i = 0; i < dim; ++i)
            if (x[i] < lo[i] || x[i] > hi[i]) return false;
        return true;
    }
    std::int64_t extent(int i) const { return hi[i] - lo[i] + 1; }
    double volume() const;
};

class SiteSet {
public:
    SiteSet() = default;
    explicit SiteSet(int dim) : dim_(dim) {}
    // Duplicates are dropped; sites are kept in lexicographic order.
    SiteSet(int dim, std::vector<Site> sites);

    int dim() const { return dim_; }
    std::size_t size() const { return sites_.size(); }
    bool empty() const { return sites_.empty(); }
    const std::vector<Site>& sites() const { return sites_; }
    const Site& operator[](std::size_t i) const { return sites_[i]; }
    auto begin() const { return sites_.begin(); }
    auto end() const { return sites_.end(); }
    const Box& box() const { return box_; }

    // Position of x in sites(), or -1.
    std::int64_t index_of(const Site& x) const;
    bool contains(const Site& x) const { return index_of(x) >= 0; }

    bool operator==(const SiteSet& o) const { return dim_ == o.dim_ && sites_ == o.sites_; }
    bool subset_of(const SiteSet& o) const;

private:
    void build_index();

    int dim_ = 0;
    std::vector<Site> sites_;
    Box box_;
    std::vector<std::int32_t> dense_;
    std::unordered_map<Site, std::int32_t, SiteHash> sparse_;
    bool use_dense_ = false;
};

SiteSet set_union(const SiteSet& a, const SiteSet& b);

class Graph {
public:
    static Graph lattice(int d, DistanceKind kind = DistanceKind::euclidean,
                         WeightScale scale = WeightScale::unit);
    // Finite weighted graph given by coordinates and an edge list (index pairs).
    static Graph from_table(int dim, std::vector<Site> coords,
                            const std::vector<std::tuple<int, int, double>>& edges,
                            DistanceKind kind = DistanceKind::graph,
                            double alpha = 0.0, double nu = 0.0);
    // Text format documented in README.md.
    static Graph load(const std::string& path, DistanceKind kind = DistanceKind::graph);

    int dim() const { return dim_; }
    bool is_lattice() const { return lattice_; }
    DistanceKind distance_kind() const { return kind_; }
    WeightScale scale() const { return scale_; }
    double alpha() const { return alpha_; }
    double nu() const { return nu_; }
    double edge_weight() const { return edge_w_; }

    bool contains(const Site& x) const;
    int degree(const Site& x) const;
    double lambda(const Site& x) const;
    double weight(const Site& x, const Site& y) const;
    double distance(const Site& x, const Site& y) const;

    template <class F>
    void for_each_neighbor(const Site& x, F&& f) const {
        if (lattice_) {
            for (int i = 0; i < dim_; ++i) {
                Site y = x;
                ++y[i];
                f(y, edge_w_);
                y[i] -= 2;
                f(y, edge_w_);
            }
            return;
        }
        auto it = id_.find(x);
        if (it == id_.end()) return;
        for (auto k = off_[it->second]; k < off_[it->second + 1]; ++k)
            f(coords_[adj_[k]], wts_[k]);
    }

    // Table graphs only.
    const std::vector<Site>& table_sites() const { return coords_; }
    std::int64_t table_id(const Site& x) const;
    const std::vector<std::int32_t>& adjacency() const { return adj_; }
    const std::vector<std::int64_t>& offsets() const { return off_; }
    const std::vector<double>& adjacency_weights() const { return wts_; }

private:
    int dim_ = 3;
    bool lattice_ = true;
    DistanceKind kind_ = DistanceKind::euclidean;
    WeightScale scale_ = WeightScale::unit;
    double alpha_ = 3, nu_ = 1, edge_w_ = 1;
    std::vector<Site> coords_;
    std::unordered_map<Site, std::int32_t, SiteHash> id_;
    std::vector<std::int64_t> off_;
    std::vector<std::int32_t> adj_;
    std::vector<double> wts_;
    std::vector<double> lambda_;
};

inline Graph make_lattice(int d, DistanceKind kind = DistanceKind::euclidean,
                          WeightScale scale = WeightScale::unit) {
    return Graph::lattice(d, kind, scale);
}

SiteSet ball(const Graph& g, const Site& x, double r);
SiteSet box_sites(int dim, const Site& lo, const Site& hi);
// Sites of A with a neighbour outside A.
SiteSet boundary(const Graph& g, const SiteSet& A);
// Sites outside A with a neighbour in A.
SiteSet outer_boundary(const Graph& g, const SiteSet& A);
// ([0,N] x [-p,p]^{d-1}) on the lattice.
SiteSet tube_sites(const Graph& g, std::int64_t N, std::int64_t p);

// Rounded midpoint of the bounding box and the largest distance from it.
Site set_center(const SiteSet& A);
double set_radius(const Graph& g, const SiteSet& A, const Site& c);

struct RenormLattice {
    double L = 1;
    std::int64_t stride = 1;
    Box window;
    SiteSet sites;

    // Centre of the half-open cell z + (-s/2, s/2]^d containing x.
    Site cell_of(const Site& x) const;
    // Sites of the window lying in the cell of z.
    std::vector<Site> cell_sites(const Site& z, const SiteSet& window_set) const;
};

std::int64_t renorm_stride(double L, int d);
RenormLattice renorm_sites(const Graph& g, double L, const SiteSet& window);

}  // namespace rilab
