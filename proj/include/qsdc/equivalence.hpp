#pragma once

// Husimi Q-representations on the sphere and a grid-based certificate that a
// two-qubit state and a 2 x (2S+1) state share the same Q function.

#include <cmath>
#include <optional>
#include <vector>

#include "qsdc/linalg.hpp"
#include "qsdc/state.hpp"
#include "qsdc/su2.hpp"

namespace qsdc {

struct SphereGrid {
    std::vector<Direction> nodes;
    /// Quadrature weights summing to 4 pi, when the grid is meant for integration.
    std::optional<std::vector<double>> weights;

    std::size_t size() const noexcept { return nodes.size(); }
};

struct QSample {
    Direction na;
    Direction nb;
    double value;
};

/// Deterministic Fibonacci-spiral nodes, z_k = 1 - (2k+1)/count.
inline SphereGrid sphere_grid(int count) {
    if (count < 4) throw InvalidParameter("sphere_grid: need at least 4 nodes");
    const double golden_angle = kPi * (3.0 - std::sqrt(5.0));
    SphereGrid grid;
    grid.nodes.reserve(std::size_t(count));
    for (int k = 0; k < count; ++k) {
        const double z = 1.0 - (2.0 * k + 1.0) / count;
        grid.nodes.push_back(Direction::from_angles(std::acos(z), golden_angle * k));
    }
    return grid;
}

/// Gauss-Legendre nodes in cos(theta) times equally spaced phi. Exact for
/// spherical polynomials of degree < min(2 * n_theta, n_phi).
inline SphereGrid gauss_product_grid(int n_theta, int n_phi) {
    if (n_theta < 2 || n_phi < 2 || n_theta * n_phi < 4) {
        throw InvalidParameter("gauss_product_grid: need n_theta >= 2 and n_phi >= 2");
    }
    std::vector<double> x(static_cast<std::size_t>(n_theta)), w(static_cast<std::size_t>(n_theta));
    for (int i = 0; i < n_theta; ++i) {
        // Newton on P_n from the Chebyshev-like initial guess.
        double root = std::cos(kPi * (i + 0.75) / (n_theta + 0.5));
        double deriv = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = root;
            for (int k = 2; k <= n_theta; ++k) {
                const double p2 = ((2.0 * k - 1.0) * root * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            deriv = n_theta * (root * p1 - p0) / (root * root - 1.0);
            const double step = p1 / deriv;
            root -= step;
            if (std::abs(step) < 1e-16) break;
        }
        x[std::size_t(i)] = root;
        w[std::size_t(i)] = 2.0 / ((1.0 - root * root) * deriv * deriv);
    }
    SphereGrid grid;
    grid.weights.emplace();
    for (int i = 0; i < n_theta; ++i) {
        for (int j = 0; j < n_phi; ++j) {
            grid.nodes.push_back(Direction::from_angles(std::acos(x[std::size_t(i)]), 2.0 * kPi * j / n_phi));
            grid.weights->push_back(w[std::size_t(i)] * 2.0 * kPi / n_phi);
        }
    }
    return grid;
}

/// F(n) = (2S+1)/(4 pi) <n|rho|n>.
inline double q_single(const DensityMatrix& rho, const SpinRep& rep, const Direction& n) {
    if (rho.bipartite() || rho.dim() != rep.dim()) {
        throw DimensionMismatch("q_single: state dimension " + std::to_string(rho.dim()) +
                                " does not match representation dimension " + std::to_string(rep.dim()));
    }
    const Vector v = coherent_state(rep, n);
    return rep.dim() / (4.0 * kPi) * v.dot(rho.data() * v).real();
}

namespace detail {

inline void require_qubit_by_spin(const DensityMatrix& rho, const SpinRep& rep_a, const SpinRep& rep_b,
                                  const char* what) {
    if (rep_a.two_s() != 1) throw InvalidParameter(std::string(what) + ": subsystem A must be a qubit");
    if (!rho.bipartite() || rho.dims()[0] != 2 || rho.dims()[1] != rep_b.dim()) {
        throw DimensionMismatch(std::string(what) + ": state dims do not match 2 x " +
                                std::to_string(rep_b.dim()));
    }
}

/// Coherent states on the nodes of a grid, cached for repeated evaluation.
class CoherentTable {
  public:
    CoherentTable(const SpinRep& rep, const SphereGrid& grid) {
        states_.reserve(grid.size());
        for (const auto& n : grid.nodes) states_.push_back(coherent_state(rep, n));
    }
    const Vector& operator[](std::size_t k) const { return states_[k]; }

  private:
    std::vector<Vector> states_;
};

/// <a|rho|a> as an operator on B: sum_kl conj(a_k) a_l rho[k-block, l-block].
inline Matrix contract_a(const Matrix& rho, const Vector& a) {
    const Eigen::Index db = rho.rows() / a.size();
    Matrix out = Matrix::Zero(db, db);
    for (Eigen::Index k = 0; k < a.size(); ++k)
        for (Eigen::Index l = 0; l < a.size(); ++l)
            out += std::conj(a(k)) * a(l) * rho.block(k * db, l * db, db, db);
    return out;
}

inline double product_expectation(const Matrix& rho, const Vector& a, const Vector& b) {
    return b.dot(contract_a(rho, a) * b).real();
}

}  // namespace detail

/// Product-SCS Q function (2/(4 pi)) ((2S+1)/(4 pi)) <nA nB|rho|nA nB>.
inline double q_bipartite(const DensityMatrix& rho, const SpinRep& rep_a, const SpinRep& rep_b,
                          const Direction& na, const Direction& nb) {
    detail::require_qubit_by_spin(rho, rep_a, rep_b, "q_bipartite");
    const double prefactor = (2.0 / (4.0 * kPi)) * (rep_b.dim() / (4.0 * kPi));
    return prefactor *
           detail::product_expectation(rho.data(), coherent_state(rep_a, na), coherent_state(rep_b, nb));
}

/// Both Q functions over every (nA, nB) pair of a grid.
struct QComparison {
    Direction na;
    Direction nb;
    double q_small;
    double q_large;
    double abs_diff() const { return std::abs(q_small - q_large); }
};

namespace detail {

inline SpinRep spin_rep_for_dim(int dim) { return make_spin_rep(dim - 1); }

template <typename Visit>
void for_each_q_pair(const DensityMatrix& small, const DensityMatrix& large, const SphereGrid& grid,
                     Visit&& visit) {
    if (!small.bipartite() || small.dims()[0] != 2 || small.dims()[1] != 2) {
        throw DimensionMismatch("equivalence: small state must be 2 x 2");
    }
    if (!large.bipartite() || large.dims()[0] != 2 || large.dims()[1] < 2) {
        throw DimensionMismatch("equivalence: large state must be 2 x (2S+1)");
    }
    const SpinRep half = make_spin_rep(1);
    const SpinRep big = spin_rep_for_dim(large.dims()[1]);
    const CoherentTable qubit(half, grid);
    const CoherentTable qudit(big, grid);
    const double pre_small = (2.0 / (4.0 * kPi)) * (2.0 / (4.0 * kPi));
    const double pre_large = (2.0 / (4.0 * kPi)) * (big.dim() / (4.0 * kPi));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Matrix on_small = contract_a(small.data(), qubit[i]);
        const Matrix on_large = contract_a(large.data(), qubit[i]);
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const double qs = pre_small * qubit[j].dot(on_small * qubit[j]).real();
            const double ql = pre_large * qudit[j].dot(on_large * qudit[j]).real();
            visit(i, j, qs, ql);
        }
    }
}

}  // namespace detail

/// max over grid x grid of |Q_small - Q_large|.
inline double equivalence_distance(const DensityMatrix& small, const DensityMatrix& large,
                                   const SphereGrid& grid) {
    double worst = 0.0;
    detail::for_each_q_pair(small, large, grid, [&](std::size_t, std::size_t, double qs, double ql) {
        worst = std::max(worst, std::abs(qs - ql));
    });
    return worst;
}

inline std::vector<QComparison> q_comparison_table(const DensityMatrix& small, const DensityMatrix& large,
                                                   const SphereGrid& grid) {
    std::vector<QComparison> rows;
    rows.reserve(grid.size() * grid.size());
    detail::for_each_q_pair(small, large, grid, [&](std::size_t i, std::size_t j, double qs, double ql) {
        rows.push_back({grid.nodes[i], grid.nodes[j], qs, ql});
    });
    return rows;
}

/// Weighted double sum of the product-SCS Q function over a quadrature grid.
inline double integrate_q_bipartite(const DensityMatrix& rho, const SphereGrid& grid) {
    if (!grid.weights) throw InvalidParameter("integrate_q_bipartite: grid carries no weights");
    if (!rho.bipartite() || rho.dims()[0] != 2) {
        throw DimensionMismatch("integrate_q_bipartite: state must be 2 x (2S+1)");
    }
    const SpinRep half = make_spin_rep(1);
    const SpinRep big = detail::spin_rep_for_dim(rho.dims()[1]);
    const detail::CoherentTable qubit(half, grid);
    const detail::CoherentTable qudit(big, grid);
    const auto& w = *grid.weights;
    const double prefactor = (2.0 / (4.0 * kPi)) * (big.dim() / (4.0 * kPi));
    double total = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Matrix on_b = detail::contract_a(rho.data(), qubit[i]);
        double row = 0.0;
        for (std::size_t j = 0; j < grid.size(); ++j) {
            row += w[j] * qudit[j].dot(on_b * qudit[j]).real();
        }
        total += w[i] * row;
    }
    return prefactor * total;
}

}  // namespace qsdc
