#pragma once

// Dense complex linear algebra shared by every module. Dimensions stay small
// (a qubit times a spin-S qudit, at most a few dozen), so everything is dense.

#include <Eigen/Dense>

#include <complex>
#include <numbers>
#include <string>

#include "qsdc/errors.hpp"

namespace qsdc {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Real3 = Eigen::Vector3d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr Complex kI{0.0, 1.0};

/// Tolerance used to reject non-Hermitian input to the Hermitian solvers.
inline constexpr double kHermitianTolerance = 1e-10;

inline double hermitian_defect(const Matrix& h) {
    if (h.size() == 0) return 0.0;
    return (h - h.adjoint()).cwiseAbs().maxCoeff();
}

inline void require_hermitian(const Matrix& h, const char* what) {
    if (h.rows() != h.cols()) {
        throw DimensionMismatch(std::string(what) + ": matrix is not square");
    }
    if (hermitian_defect(h) > kHermitianTolerance) {
        throw InvalidParameter(std::string(what) + ": matrix is not Hermitian (defect " +
                               std::to_string(hermitian_defect(h)) + ")");
    }
}

/// Kronecker product, first factor outermost (row index = i_a * dim_b + i_b).
inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

inline Vector kron(const Vector& a, const Vector& b) {
    Vector out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
    return out;
}

/// Ascending eigenvalues and orthonormal eigenvectors of a Hermitian matrix.
struct HermitianSpectrum {
    Eigen::VectorXd values;
    Matrix vectors;
};

inline HermitianSpectrum hermitian_spectrum(const Matrix& h) {
    require_hermitian(h, "hermitian_spectrum");
    const Matrix sym = 0.5 * (h + h.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("hermitian_spectrum: eigensolver did not converge");
    }
    return {solver.eigenvalues(), solver.eigenvectors()};
}

inline double min_eigenvalue(const Matrix& h) {
    require_hermitian(h, "min_eigenvalue");
    const Matrix sym = 0.5 * (h + h.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
    return solver.eigenvalues()(0);
}

/// exp(-i t H) for Hermitian H, through its eigendecomposition.
inline Matrix unitary_exp(const Matrix& h, double t) {
    const auto spec = hermitian_spectrum(h);
    Vector phases(spec.values.size());
    for (Eigen::Index k = 0; k < phases.size(); ++k) {
        phases(k) = std::exp(-kI * (t * spec.values(k)));
    }
    return spec.vectors * phases.asDiagonal() * spec.vectors.adjoint();
}

}  // namespace qsdc
