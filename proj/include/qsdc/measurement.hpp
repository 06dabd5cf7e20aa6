#pragma once

// Projective measurements of sigma . a (Alice) and S . b (Bob), their exact
// Born-rule joint distribution, and seeded outcome sampling.

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "qsdc/linalg.hpp"
#include "qsdc/random.hpp"
#include "qsdc/state.hpp"
#include "qsdc/su2.hpp"

namespace qsdc {

enum class Party : std::uint8_t { alice, bob };

/// Measurement axes used by the protocol. Alice: x, (x+z)/sqrt2, z.
/// Bob: x, (x+z)/sqrt2, (x-z)/sqrt2.
enum class SettingLabel : std::uint8_t { x, xz, z, x_minus_z };

inline std::string_view to_string(SettingLabel label) {
    switch (label) {
        case SettingLabel::x: return "X";
        case SettingLabel::xz: return "XZ";
        case SettingLabel::z: return "Z";
        case SettingLabel::x_minus_z: return "X-Z";
    }
    return "?";
}

inline Direction canonical_direction(SettingLabel label) {
    switch (label) {
        case SettingLabel::x: return Direction::x();
        case SettingLabel::xz: return Direction::from_angles(kPi / 4, 0.0);
        case SettingLabel::z: return Direction::z();
        case SettingLabel::x_minus_z: return Direction::from_angles(3 * kPi / 4, 0.0);
    }
    throw InvalidParameter("canonical_direction: unknown label");
}

struct Setting {
    Party party;
    SettingLabel label;
    Direction direction;
};

inline Setting make_setting(Party party, SettingLabel label) {
    const bool ok = party == Party::alice ? label != SettingLabel::x_minus_z : label != SettingLabel::z;
    if (!ok) {
        throw InvalidParameter(std::string("make_setting: ") + std::string(to_string(label)) +
                               " is not a setting of " + (party == Party::alice ? "Alice" : "Bob"));
    }
    return {party, label, canonical_direction(label)};
}

inline constexpr std::array<SettingLabel, 3> kAliceLabels{SettingLabel::x, SettingLabel::xz, SettingLabel::z};
inline constexpr std::array<SettingLabel, 3> kBobLabels{SettingLabel::x, SettingLabel::xz,
                                                        SettingLabel::x_minus_z};

/// Alice's sign a and Bob's quantum number m, stored as two_m = 2m so that
/// half-integer spins stay exact.
struct RoundOutcome {
    int a;
    int two_m;

    double m() const noexcept { return 0.5 * two_m; }
    friend bool operator==(const RoundOutcome&, const RoundOutcome&) = default;
};

enum class RoundRole : std::uint8_t { security, key, discarded };

inline std::string_view to_string(RoundRole role) {
    switch (role) {
        case RoundRole::security: return "security";
        case RoundRole::key: return "key";
        case RoundRole::discarded: return "discarded";
    }
    return "?";
}

struct RoundRecord {
    std::uint64_t index;
    SettingLabel alice;
    SettingLabel bob;
    RoundOutcome outcome;
    RoundRole role;

    Setting setting_a() const { return make_setting(Party::alice, alice); }
    Setting setting_b() const { return make_setting(Party::bob, bob); }
    friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

struct Eigenspace {
    double value;
    Matrix projector;
};

/// Eigenvalues (ascending) clustered within `tol` into degenerate eigenspaces.
inline std::vector<Eigenspace> eigensystem(const Matrix& obs, double tol = 1e-8) {
    const auto spec = hermitian_spectrum(obs);
    std::vector<Eigenspace> out;
    Eigen::Index k = 0;
    const Eigen::Index n = spec.values.size();
    while (k < n) {
        Eigen::Index end = k + 1;
        while (end < n && spec.values(end) - spec.values(end - 1) <= tol) ++end;
        const auto vecs = spec.vectors.middleCols(k, end - k);
        out.push_back({spec.values.segment(k, end - k).mean(), vecs * vecs.adjoint()});
        k = end;
    }
    return out;
}

/// P(a, m) over a in {-1, +1} and m in {-S..S}. Enumeration order (also the
/// sampling order) is a ascending, then m ascending.
class JointDistribution {
  public:
    JointDistribution(int two_s, std::vector<double> probs) : two_s_(two_s), probs_(std::move(probs)) {
        if (two_s < 1) throw InvalidParameter("JointDistribution: two_s must be >= 1");
        if (probs_.size() != std::size_t(2 * (two_s + 1))) {
            throw InvalidParameter("JointDistribution: expected " + std::to_string(2 * (two_s + 1)) +
                                   " entries, got " + std::to_string(probs_.size()));
        }
        double total = 0.0;
        for (double p : probs_) {
            if (!std::isfinite(p) || p < -1e-12) throw InvalidParameter("JointDistribution: negative or non-finite entry");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9) {
            throw InvalidParameter("JointDistribution: entries sum to " + std::to_string(total));
        }
    }

    int two_s() const noexcept { return two_s_; }
    std::size_t size() const noexcept { return probs_.size(); }
    const std::vector<double>& probabilities() const noexcept { return probs_; }

    RoundOutcome outcome_at(std::size_t i) const {
        const int dim = two_s_ + 1;
        return {i < std::size_t(dim) ? -1 : +1, -two_s_ + 2 * int(i % std::size_t(dim))};
    }

    std::size_t index_of(int a, int two_m) const {
        if ((a != 1 && a != -1) || two_m < -two_s_ || two_m > two_s_ || (two_m + two_s_) % 2 != 0) {
            throw InvalidParameter("JointDistribution: outcome out of range");
        }
        return std::size_t((a > 0 ? two_s_ + 1 : 0) + (two_m + two_s_) / 2);
    }

    double prob(int a, int two_m) const { return probs_[index_of(a, two_m)]; }

  private:
    int two_s_;
    std::vector<double> probs_;
};

/// Born rule Tr[rho (Pi_a (x) Pi_m)] with Pi_a from sigma . a_dir and Pi_m from S . b_dir.
inline JointDistribution joint_distribution(const DensityMatrix& rho, const Direction& a_dir,
                                            const Direction& b_dir) {
    if (!rho.bipartite() || rho.dims()[0] != 2 || rho.dims()[1] < 2) {
        throw DimensionMismatch("joint_distribution: state must be 2 x (2S+1)");
    }
    const SpinRep half = make_spin_rep(1);
    const SpinRep rep = make_spin_rep(rho.dims()[1] - 1);
    const auto alice = eigensystem(spin_along(half, a_dir, Normalization::unit));
    const auto bob = eigensystem(spin_along(rep, b_dir, Normalization::none));
    std::vector<double> probs(std::size_t(2 * rep.dim()), 0.0);
    for (const auto& ea : alice) {
        const int a = ea.value > 0 ? 1 : -1;
        for (const auto& eb : bob) {
            const int two_m = int(std::lround(2.0 * eb.value));
            const double p = expectation(rho, kron(ea.projector, eb.projector));
            probs[std::size_t((a > 0 ? rep.dim() : 0) + (two_m + rep.two_s()) / 2)] += p;
        }
    }
    return JointDistribution(rep.two_s(), std::move(probs));
}

inline JointDistribution joint_distribution(const DensityMatrix& rho, const Setting& a, const Setting& b) {
    if (a.party != Party::alice || b.party != Party::bob) {
        throw InvalidParameter("joint_distribution: expected an Alice setting and a Bob setting");
    }
    return joint_distribution(rho, a.direction, b.direction);
}

/// Inverse-CDF draw in the table's enumeration order.
inline RoundOutcome sample_round(const JointDistribution& dist, RandomStream& stream) {
    const double u = stream.uniform();
    const auto& p = dist.probabilities();
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        cumulative += p[i];
        last_positive = i;
        if (u < cumulative) return dist.outcome_at(i);
    }
    return dist.outcome_at(last_positive);
}

}  // namespace qsdc
