// Communication graphs for the action-sharing information model.
//
// Undirected, simple graphs over agent indices 0..n-1.  Neighborhood lists
// are kept sorted ascending so that observation stacking is deterministic.
#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <ostream>
#include <queue>
#include <vector>

#include "rtpg/errors.hpp"
#include "rtpg/rng.hpp"

namespace rtpg {

class CommunicationGraph {
  public:
    /// Graph with no edges.
    explicit CommunicationGraph(int n) : n_(n), neighbors_(static_cast<std::size_t>(n)) {
        if (n < 1) throw InvalidParameter("CommunicationGraph: node count must be >= 1");
    }

    /// Random geometric graph: n nodes placed uniformly at random on a
    /// width x height rectangle, connected iff their Euclidean distance is
    /// strictly below `radius`.  Deterministic given the rng state.
    static CommunicationGraph random_geometric(int n, double width, double height,
                                               double radius, Rng& rng) {
        if (n < 1) throw InvalidParameter("random_geometric: n must be >= 1");
        if (width <= 0 || height <= 0 || radius <= 0)
            throw InvalidParameter("random_geometric: width, height, radius must be > 0");
        CommunicationGraph g(n);
        g.coords_.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const double x = rng.uniform() * width;
            const double y = rng.uniform() * height;
            g.coords_[static_cast<std::size_t>(i)] = {x, y};
        }
        const double r2 = radius * radius;
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                const double dx = g.coords_[i][0] - g.coords_[j][0];
                const double dy = g.coords_[i][1] - g.coords_[j][1];
                if (dx * dx + dy * dy < r2) g.add_edge(i, j);
            }
        }
        return g;
    }

    void add_edge(int i, int j) {
        check_node(i);
        check_node(j);
        if (i == j) throw InvalidParameter("CommunicationGraph: self-loops not allowed");
        if (adjacent(i, j)) return;
        insert_sorted(neighbors_[static_cast<std::size_t>(i)], j);
        insert_sorted(neighbors_[static_cast<std::size_t>(j)], i);
    }

    int size() const { return n_; }

    bool adjacent(int i, int j) const {
        check_node(i);
        check_node(j);
        const auto& ni = neighbors_[static_cast<std::size_t>(i)];
        return std::binary_search(ni.begin(), ni.end(), j);
    }

    /// Sorted ascending.
    const std::vector<int>& neighbors(int i) const {
        check_node(i);
        return neighbors_[static_cast<std::size_t>(i)];
    }

    int degree(int i) const { return static_cast<int>(neighbors(i).size()); }

    bool connected() const {
        return static_cast<int>(reachable_from(0).count) == n_;
    }

    /// Longest shortest-path length over all node pairs, or nullopt when the
    /// graph is disconnected.
    std::optional<int> diameter() const {
        int best = 0;
        for (int s = 0; s < n_; ++s) {
            const auto bfs = reachable_from(s);
            if (static_cast<int>(bfs.count) != n_) return std::nullopt;
            best = std::max(best, bfs.eccentricity);
        }
        return best;
    }

    /// Node coordinates when the graph came from the geometric generator.
    const std::vector<std::array<double, 2>>& coordinates() const { return coords_; }

    /// Edge-list CSV (each undirected edge once, src < dst).
    void write_edges_csv(std::ostream& out) const {
        out << "src,dst\n";
        for (int i = 0; i < n_; ++i)
            for (int j : neighbors(i))
                if (i < j) out << i << ',' << j << '\n';
    }

    /// Node coordinate CSV; empty coordinates are emitted as blanks.
    void write_nodes_csv(std::ostream& out) const {
        out << "node,x,y\n";
        for (int i = 0; i < n_; ++i) {
            out << i;
            if (coords_.empty())
                out << ",,";
            else
                out << ',' << coords_[static_cast<std::size_t>(i)][0] << ','
                    << coords_[static_cast<std::size_t>(i)][1];
            out << '\n';
        }
    }

  private:
    struct BfsResult {
        std::size_t count;
        int eccentricity;
    };

    BfsResult reachable_from(int source) const {
        std::vector<int> dist(static_cast<std::size_t>(n_), -1);
        std::queue<int> frontier;
        dist[static_cast<std::size_t>(source)] = 0;
        frontier.push(source);
        std::size_t seen = 1;
        int ecc = 0;
        while (!frontier.empty()) {
            const int u = frontier.front();
            frontier.pop();
            for (int v : neighbors_[static_cast<std::size_t>(u)]) {
                if (dist[static_cast<std::size_t>(v)] >= 0) continue;
                dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
                ecc = std::max(ecc, dist[static_cast<std::size_t>(v)]);
                ++seen;
                frontier.push(v);
            }
        }
        return {seen, ecc};
    }

    static void insert_sorted(std::vector<int>& list, int value) {
        list.insert(std::upper_bound(list.begin(), list.end(), value), value);
    }

    void check_node(int i) const {
        if (i < 0 || i >= n_) throw InvalidParameter("CommunicationGraph: node index out of range");
    }

    int n_;
    std::vector<std::vector<int>> neighbors_;
    std::vector<std::array<double, 2>> coords_;
};

}  // namespace rtpg
