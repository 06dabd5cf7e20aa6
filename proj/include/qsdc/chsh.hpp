#pragma once

// The 2 x (2S+1) equivalent of the CHSH statistic,
//   (3/(S+1)) |<sigma.a1 (x) S.(b1+b2)> + <sigma.a2 (x) S.(b1-b2)>|,
// with unnormalised S, its two-qubit reference, a finite-sample estimator and
// the security decision built on it.

#include <array>
#include <cmath>
#include <span>

#include "qsdc/measurement.hpp"
#include "qsdc/state.hpp"
#include "qsdc/su2.hpp"

namespace qsdc {

struct ChshSettings {
    Direction a1;
    Direction a2;
    Direction b1;
    Direction b2;

    /// a1 = x, a2 = z, b1 = (x+z)/sqrt2, b2 = (x-z)/sqrt2; the protocol's own axes.
    static ChshSettings optimal() {
        return {canonical_direction(SettingLabel::x), canonical_direction(SettingLabel::z),
                canonical_direction(SettingLabel::xz), canonical_direction(SettingLabel::x_minus_z)};
    }
};

/// Correlator pairs in the order (a1,b1), (a1,b2), (a2,b1), (a2,b2); the
/// statistic combines them with signs + + + -.
inline constexpr std::array<double, 4> kChshSigns{1.0, 1.0, 1.0, -1.0};

struct ChshEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::array<std::size_t, 4> counts{};
    std::array<double, 4> correlators{};
};

namespace detail {

inline Matrix sum_direction_operator(const SpinRep& rep, const Direction& p, const Direction& q, double sign) {
    return spin_along(rep, p, Normalization::none) + sign * spin_along(rep, q, Normalization::none);
}

inline void require_qubit_qudit(const DensityMatrix& rho, const char* what) {
    if (!rho.bipartite() || rho.dims()[0] != 2 || rho.dims()[1] < 2) {
        throw DimensionMismatch(std::string(what) + ": state must be 2 x (2S+1)");
    }
}

}  // namespace detail

inline double chsh_exact(const DensityMatrix& rho, const ChshSettings& s) {
    detail::require_qubit_qudit(rho, "chsh_exact");
    const SpinRep half = make_spin_rep(1);
    const SpinRep rep = make_spin_rep(rho.dims()[1] - 1);
    const Matrix first = kron(spin_along(half, s.a1, Normalization::unit),
                              detail::sum_direction_operator(rep, s.b1, s.b2, +1.0));
    const Matrix second = kron(spin_along(half, s.a2, Normalization::unit),
                               detail::sum_direction_operator(rep, s.b1, s.b2, -1.0));
    return 3.0 / (rep.spin() + 1.0) * std::abs(expectation(rho, first) + expectation(rho, second));
}

/// |<sigma.a1 (x) sigma.(b1+b2)> + <sigma.a2 (x) sigma.(b1-b2)>| on two qubits.
inline double chsh_2x2_reference(const DensityMatrix& rho, const ChshSettings& s) {
    if (!rho.bipartite() || rho.dims()[0] != 2 || rho.dims()[1] != 2) {
        throw DimensionMismatch("chsh_2x2_reference: state must be 2 x 2");
    }
    const SpinRep half = make_spin_rep(1);
    auto sigma = [&](const Direction& n) { return spin_along(half, n, Normalization::unit); };
    const Matrix first = kron(sigma(s.a1), sigma(s.b1) + sigma(s.b2));
    const Matrix second = kron(sigma(s.a2), sigma(s.b1) - sigma(s.b2));
    return std::abs(expectation(rho, first) + expectation(rho, second));
}

/// Per-pair correlators (3/(S+1)) mean(a m) over the records whose setting
/// pair matches one of the four CHSH pairs; other records are ignored.
/// Throws InsufficientData if any pair has no samples.
inline ChshEstimate chsh_estimate(std::span<const RoundRecord> records, const ChshSettings& settings,
                                  int two_s) {
    if (two_s < 1) throw InvalidParameter("chsh_estimate: two_s must be >= 1");
    auto same = [](const Direction& u, const Direction& v) { return (u.cartesian() - v.cartesian()).norm() < 1e-12; };
    const double prefactor = 3.0 / (0.5 * two_s + 1.0);

    // Pair membership for every (Alice label, Bob label) combination.
    constexpr std::size_t kLabels = 4;
    std::array<std::array<bool, 4>, kLabels * kLabels> member{};
    for (std::size_t la = 0; la < kLabels; ++la) {
        for (std::size_t lb = 0; lb < kLabels; ++lb) {
            const Direction da = canonical_direction(SettingLabel(la));
            const Direction db = canonical_direction(SettingLabel(lb));
            for (std::size_t k = 0; k < 4; ++k) {
                const Direction& want_a = k < 2 ? settings.a1 : settings.a2;
                const Direction& want_b = k % 2 == 0 ? settings.b1 : settings.b2;
                member[la * kLabels + lb][k] = same(da, want_a) && same(db, want_b);
            }
        }
    }

    std::array<double, 4> sum{}, sum_sq{};
    ChshEstimate est;
    for (const auto& r : records) {
        const auto& hits = member[std::size_t(r.alice) * kLabels + std::size_t(r.bob)];
        const double x = prefactor * r.outcome.a * r.outcome.m();
        for (std::size_t k = 0; k < 4; ++k) {
            if (!hits[k]) continue;
            sum[k] += x;
            sum_sq[k] += x * x;
            ++est.counts[k];
        }
    }

    double combined = 0.0;
    double variance = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
        const auto n = est.counts[k];
        if (n == 0) {
            throw InsufficientData("chsh_estimate: CHSH settings pair " + std::to_string(k) + " has no samples");
        }
        const double mean = sum[k] / double(n);
        est.correlators[k] = mean;
        combined += kChshSigns[k] * mean;
        if (n > 1) {
            const double sample_var = std::max(0.0, (sum_sq[k] - double(n) * mean * mean) / double(n - 1));
            variance += sample_var / double(n);
        }
    }
    est.value = std::abs(combined);
    est.std_error = std::sqrt(variance);
    return est;
}

struct SecurityVerdict {
    bool passed;
    double lower_bound;  // value - z * std_error
    double margin;       // lower_bound - threshold
    double threshold;
    double z;
};

/// Passes iff the z-sigma lower confidence bound exceeds the classical bound.
inline SecurityVerdict security_decision(const ChshEstimate& est, double threshold = 2.0, double z = 3.0) {
    const double lower = est.value - z * est.std_error;
    return {lower > threshold, lower, lower - threshold, threshold, z};
}

}  // namespace qsdc
