#include "deltarank/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>

namespace deltarank {
namespace {

constexpr double kBalanceTolerance = 1e-9;
constexpr double kReducedCostTolerance = 1e-12;

struct Cell {
    std::size_t row;
    std::size_t col;
};

class Simplex {
public:
    explicit Simplex(const TransportationProblem& p)
        : m_(p.supply.size()), n_(p.demand.size()), cost_(p.cost), flow_(m_, n_), basic_(m_ * n_, false)
    {
        northwest_corner(p.supply, p.demand);
    }

    TransportationSolution solve()
    {
        // Bland's rule cannot cycle; the cap guards against floating-point surprises.
        const std::size_t max_pivots = 50 * (m_ + n_) * (m_ * n_) + 100;
        for (std::size_t pivot = 0; pivot < max_pivots; ++pivot) {
            compute_potentials();
            const auto entering = entering_cell();
            if (!entering) {
                return finish();
            }
            pivot_on(*entering);
        }
        throw std::runtime_error("solve_transportation: pivot limit reached");
    }

private:
    void northwest_corner(std::vector<double> supply, std::vector<double> demand)
    {
        std::size_t i = 0;
        std::size_t j = 0;
        while (true) {
            const double x = std::min(supply[i], demand[j]);
            flow_(i, j) = std::max(0.0, x);
            basic_[i * n_ + j] = true;
            supply[i] -= x;
            demand[j] -= x;
            if (i == m_ - 1 && j == n_ - 1) {
                flow_(i, j) += std::max(0.0, std::min(supply[i], demand[j]));
                break;
            }
            if (i == m_ - 1) {
                ++j;
            } else if (j == n_ - 1 || supply[i] <= demand[j]) {
                ++i;
            } else {
                ++j;
            }
        }
    }

    // Spanning tree over row nodes [0, m) and column nodes [m, m + n).
    std::vector<std::vector<std::size_t>> tree() const
    {
        std::vector<std::vector<std::size_t>> adj(m_ + n_);
        for (std::size_t i = 0; i < m_; ++i) {
            for (std::size_t j = 0; j < n_; ++j) {
                if (basic_[i * n_ + j]) {
                    adj[i].push_back(m_ + j);
                    adj[m_ + j].push_back(i);
                }
            }
        }
        return adj;
    }

    void compute_potentials()
    {
        const auto adj = tree();
        potential_.assign(m_ + n_, std::numeric_limits<double>::quiet_NaN());
        std::vector<std::size_t> stack{0};
        potential_[0] = 0.0;
        while (!stack.empty()) {
            const std::size_t node = stack.back();
            stack.pop_back();
            for (std::size_t next : adj[node]) {
                if (!std::isnan(potential_[next])) {
                    continue;
                }
                const std::size_t r = node < m_ ? node : next;
                const std::size_t c = (node < m_ ? next : node) - m_;
                // u_r + v_c = cost(r, c)
                potential_[next] = cost_(r, c) - potential_[node];
                stack.push_back(next);
            }
        }
    }

    std::optional<Cell> entering_cell() const
    {
        for (std::size_t i = 0; i < m_; ++i) {
            for (std::size_t j = 0; j < n_; ++j) {
                if (basic_[i * n_ + j]) {
                    continue;
                }
                const double reduced = cost_(i, j) - potential_[i] - potential_[m_ + j];
                if (reduced < -kReducedCostTolerance) {
                    return Cell{i, j};
                }
            }
        }
        return std::nullopt;
    }

    // Tree path from row node `from` to column node `to`, as basic cells.
    std::vector<Cell> tree_path(std::size_t from, std::size_t to) const
    {
        const auto adj = tree();
        std::vector<std::size_t> parent(m_ + n_, std::numeric_limits<std::size_t>::max());
        std::vector<std::size_t> stack{from};
        parent[from] = from;
        while (!stack.empty()) {
            const std::size_t node = stack.back();
            stack.pop_back();
            for (std::size_t next : adj[node]) {
                if (parent[next] == std::numeric_limits<std::size_t>::max()) {
                    parent[next] = node;
                    stack.push_back(next);
                }
            }
        }
        std::vector<Cell> path;
        for (std::size_t node = to; node != from; node = parent[node]) {
            const std::size_t prev = parent[node];
            if (prev == std::numeric_limits<std::size_t>::max()) {
                throw std::logic_error("solve_transportation: basis is not a spanning tree");
            }
            path.push_back(node < m_ ? Cell{node, prev - m_} : Cell{prev, node - m_});
        }
        std::reverse(path.begin(), path.end());
        return path;
    }

    void pivot_on(Cell entering)
    {
        // Cycle: entering (+), then the path cells alternate -, +, -, ...
        const auto path = tree_path(entering.row, m_ + entering.col);
        double theta = std::numeric_limits<double>::infinity();
        std::size_t leaving = 0;
        for (std::size_t k = 0; k < path.size(); k += 2) {
            const double f = flow_(path[k].row, path[k].col);
            const std::size_t index = path[k].row * n_ + path[k].col;
            if (f < theta || (f == theta && index < path[leaving].row * n_ + path[leaving].col)) {
                theta = f;
                leaving = k;
            }
        }
        flow_(entering.row, entering.col) += theta;
        for (std::size_t k = 0; k < path.size(); ++k) {
            double& f = flow_(path[k].row, path[k].col);
            f = k % 2 == 0 ? std::max(0.0, f - theta) : f + theta;
        }
        flow_(path[leaving].row, path[leaving].col) = 0.0;
        basic_[path[leaving].row * n_ + path[leaving].col] = false;
        basic_[entering.row * n_ + entering.col] = true;
    }

    TransportationSolution finish() const
    {
        TransportationSolution s{0.0, flow_};
        for (std::size_t i = 0; i < m_; ++i) {
            for (std::size_t j = 0; j < n_; ++j) {
                s.cost += flow_(i, j) * cost_(i, j);
            }
        }
        return s;
    }

    std::size_t m_;
    std::size_t n_;
    const Matrix& cost_;
    Matrix flow_;
    std::vector<bool> basic_;
    std::vector<double> potential_;
};

}  // namespace

TransportationSolution solve_transportation(const TransportationProblem& problem)
{
    const std::size_t m = problem.supply.size();
    const std::size_t n = problem.demand.size();
    if (m == 0 || n == 0 || problem.cost.rows() != m || problem.cost.cols() != n) {
        throw std::invalid_argument("solve_transportation: shape mismatch");
    }
    for (double x : problem.supply) {
        if (!(x >= 0.0) || !std::isfinite(x)) {
            throw std::invalid_argument("solve_transportation: supply must be finite and non-negative");
        }
    }
    for (double x : problem.demand) {
        if (!(x >= 0.0) || !std::isfinite(x)) {
            throw std::invalid_argument("solve_transportation: demand must be finite and non-negative");
        }
    }
    for (double c : problem.cost.values()) {
        if (!(c >= 0.0) || !std::isfinite(c)) {
            throw std::invalid_argument("solve_transportation: costs must be finite and non-negative");
        }
    }
    const double total_supply = std::accumulate(problem.supply.begin(), problem.supply.end(), 0.0);
    const double total_demand = std::accumulate(problem.demand.begin(), problem.demand.end(), 0.0);
    if (std::abs(total_supply - total_demand) > kBalanceTolerance) {
        throw std::invalid_argument("solve_transportation: supply and demand totals differ");
    }
    return Simplex(problem).solve();
}

}  // namespace deltarank
