#pragma once

// Irreducible SU(2) representations of arbitrary spin, rotation operators and
// SU(2) coherent states. Spins are carried as two_s = 2S so half-integers stay exact.
// Basis ordering is m = S, S-1, ..., -S: index 0 is the highest-weight state.

#include <algorithm>
#include <cmath>
#include <string>

#include "qsdc/linalg.hpp"

namespace qsdc {

/// A point on the unit sphere. Angles are canonicalised to theta in [0, pi],
/// phi in [0, 2 pi); the Cartesian form is derived from them.
class Direction {
  public:
    static Direction from_angles(double theta, double phi) {
        if (!std::isfinite(theta) || !std::isfinite(phi)) {
            throw InvalidParameter("Direction: angles must be finite");
        }
        if (theta < 0.0 || theta > kPi) {
            throw InvalidParameter("Direction: theta must lie in [0, pi], got " +
                                   std::to_string(theta));
        }
        phi = std::fmod(phi, 2.0 * kPi);
        if (phi < 0.0) phi += 2.0 * kPi;
        if (phi >= 2.0 * kPi) phi = 0.0;
        return Direction(theta, phi);
    }

    static Direction from_vector(const Real3& v) {
        const double norm = v.norm();
        if (!(norm > 0.0) || !std::isfinite(norm)) {
            throw InvalidParameter("Direction: vector must be finite and nonzero");
        }
        const double z = std::clamp(v.z() / norm, -1.0, 1.0);
        return from_angles(std::acos(z), std::atan2(v.y(), v.x()));
    }

    static Direction x() { return from_angles(kPi / 2, 0.0); }
    static Direction y() { return from_angles(kPi / 2, kPi / 2); }
    static Direction z() { return from_angles(0.0, 0.0); }

    double theta() const noexcept { return theta_; }
    double phi() const noexcept { return phi_; }
    const Real3& cartesian() const noexcept { return cartesian_; }
    double dot(const Direction& other) const { return cartesian_.dot(other.cartesian_); }

  private:
    Direction(double theta, double phi)
        : theta_(theta), phi_(phi),
          cartesian_(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                     std::cos(theta)) {}

    double theta_;
    double phi_;
    Real3 cartesian_;
};

/// The (2S+1)-dimensional irreducible representation: S1, S2, S3 with hbar = 1.
class SpinRep {
  public:
    int two_s() const noexcept { return two_s_; }
    int dim() const noexcept { return two_s_ + 1; }
    double spin() const noexcept { return 0.5 * two_s_; }

    const Matrix& s1() const noexcept { return s1_; }
    const Matrix& s2() const noexcept { return s2_; }
    const Matrix& s3() const noexcept { return s3_; }

    /// Generator by Cartesian index 0, 1, 2.
    const Matrix& generator(int i) const {
        switch (i) {
            case 0: return s1_;
            case 1: return s2_;
            case 2: return s3_;
            default: throw InvalidParameter("SpinRep::generator: index must be 0, 1 or 2");
        }
    }

    /// Magnetic quantum number (times two) of basis index k.
    int two_m_at(int k) const noexcept { return two_s_ - 2 * k; }

  private:
    friend SpinRep make_spin_rep(int two_s);
    SpinRep(int two_s, Matrix s1, Matrix s2, Matrix s3)
        : two_s_(two_s), s1_(std::move(s1)), s2_(std::move(s2)), s3_(std::move(s3)) {}

    int two_s_;
    Matrix s1_;
    Matrix s2_;
    Matrix s3_;
};

/// Builds the generators from the ladder operators,
/// <m+1|S+|m> = sqrt(S(S+1) - m(m+1)).
inline SpinRep make_spin_rep(int two_s) {
    if (two_s < 1) {
        throw InvalidParameter("make_spin_rep: two_s must be >= 1 (spin 0 is not a usable party system)");
    }
    const int dim = two_s + 1;
    const double s = 0.5 * two_s;
    Matrix raise = Matrix::Zero(dim, dim);
    Matrix s3 = Matrix::Zero(dim, dim);
    for (int k = 0; k < dim; ++k) {
        const double m = s - k;
        s3(k, k) = m;
        if (k > 0) raise(k - 1, k) = std::sqrt(s * (s + 1) - m * (m + 1));
    }
    const Matrix lower = raise.adjoint();
    Matrix s1 = 0.5 * (raise + lower);
    Matrix s2 = (raise - lower) / Complex(0.0, 2.0);
    return SpinRep(two_s, std::move(s1), std::move(s2), std::move(s3));
}

/// Pauli matrix sigma_{i+1}, i in {0, 1, 2}.
inline Matrix pauli(int i) {
    static const SpinRep half = make_spin_rep(1);
    return 2.0 * half.generator(i);
}

/// U(theta, phi) = exp(-i S3 phi) exp(-i S2 theta).
inline Matrix rotation_operator(const SpinRep& rep, double theta, double phi) {
    if (!std::isfinite(theta) || !std::isfinite(phi)) {
        throw InvalidParameter("rotation_operator: angles must be finite");
    }
    return unitary_exp(rep.s3(), phi) * unitary_exp(rep.s2(), theta);
}

/// The coherent state |n> = U(theta, phi)|S>.
inline Vector coherent_state(const SpinRep& rep, const Direction& n) {
    return rotation_operator(rep, n.theta(), n.phi()).col(0);
}

enum class Normalization { none, unit };

/// n . S, or n . S / S with unit normalisation (spectrum then in [-1, 1]).
inline Matrix spin_along(const SpinRep& rep, const Direction& n, Normalization norm) {
    const Real3& v = n.cartesian();
    Matrix out = v.x() * rep.s1() + v.y() * rep.s2() + v.z() * rep.s3();
    if (norm == Normalization::unit) out /= rep.spin();
    return out;
}

}  // namespace qsdc
